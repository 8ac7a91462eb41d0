"""Hot-loop dispatch: the compiled extension when importable, else numpy.

``BACKEND`` names the implementation picked at import time. ``get_backend``
returns either implementation explicitly, for cross-checks and benchmarks.
"""

from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKEND = "cython" if _ckernels is not None else "python"
_impl: ModuleType = _ckernels if _ckernels is not None else _pykernels


def available_backends() -> list[str]:
    return ["cython", "python"] if _ckernels is not None else ["python"]


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")


def lj_forces_allpairs(pos, box, rc, forces):
    return _impl.lj_forces_allpairs(pos, box, rc, forces)


def lj_forces_cells(pos, box, rc, forces):
    return _impl.lj_forces_cells(pos, box, rc, forces)


def mean_lag_tables(traj, N, unbiased=False):
    return _impl.mean_lag_tables(traj, N, unbiased)
