"""Time the compiled and numpy kernels on desk-scale inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from covdist import kernels
from covdist.md.potential import fcc_init


def cases():
    rng = np.random.default_rng(0)
    for cells in (5, 8):
        n = 4 * cells**3
        box = (n / 0.8) ** (1 / 3)
        pos = np.mod(fcc_init(cells, box) + rng.uniform(-0.05, 0.05, (n, 3)), box)
        pos = np.ascontiguousarray(pos)
        for name in ("lj_forces_allpairs", "lj_forces_cells"):
            yield f"{name} n={n}", name, (pos, box, 2.5, np.zeros_like(pos))
    traj = np.ascontiguousarray(rng.normal(size=(20_000, 500, 3)))
    yield "mean_lag_tables L=20000 P=500 N=8", "mean_lag_tables", (traj, 8, False)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = kernels.available_backends()
    print(f"{'kernel':40s}" + "".join(f"{b:>14s}" for b in backends) + ("    speedup" if len(backends) > 1 else ""))
    for label, fn, call_args in cases():
        times = []
        for b in backends:
            f = getattr(kernels.get_backend(b), fn)
            number = 1 if fn == "mean_lag_tables" else 20
            t = min(timeit.repeat(lambda: f(*call_args), number=number, repeat=args.repeat)) / number
            times.append(t)
        row = f"{label:40s}" + "".join(f"{t * 1e3:11.3f} ms" for t in times)
        if len(times) > 1:
            row += f"  {times[1] / times[0]:8.1f}x"
        print(row)


if __name__ == "__main__":
    main()
