"""Command-line entry point: ``covdist <command> --config run.toml``.

Exit status is 0 on success, 2 when the configuration or an input file is
invalid, and 1 for runtime failures such as an unstable integration.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import re
import sys
import warnings

import numpy as np

from . import __version__, svg
from .config import RunConfig, StateSource, load_config
from .distance import (DistanceMatrix, distance_matrix, histogram, sample_pair_distances)
from .embedding import Embedding, linear_fit, pca_embed
from .errors import CovdistError, FormatError, ValidationError
from .md.diffusion import DiffusionWarning, diffusion_msd, diffusion_vacf
from .md.simulate import run_simulation
from .pipeline import dense_descriptors, load_series, particle_lag_tables, state_descriptor
from .timeseries import Channel
from .trajio import read_trajectory, write_matrix, write_table

log = logging.getLogger("covdist")


# ---------------------------------------------------------------------------
# shared stages

def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", label)


def _sim_record(cfg) -> dict:
    return {"covdist_version": __version__, **dataclasses.asdict(cfg)}


def _simulate_plan(cfg: RunConfig, only_missing=False, echo=print) -> list[dict]:
    plan = cfg.simulation
    os.makedirs(plan.out, exist_ok=True)
    summary = []
    for label, sim in plan.configs:
        vel, pos = plan.paths((label, sim))
        stem = vel[: -len(".vel.cvtj")]
        record_path = stem + ".run.json"
        record = _sim_record(sim)
        if only_missing and os.path.exists(record_path) and os.path.exists(vel) and os.path.exists(pos):
            with open(record_path) as fh:
                if json.load(fh).get("config") == record:
                    log.info("reusing trajectories for %s", label)
                    continue
        log.info("simulating %s (T=%g, %d particles)", label, sim.temperature, sim.n_particles)
        res = run_simulation(sim, out_dir=plan.out, prefix=os.path.basename(stem),
                             progress=lambda i, n: log.debug("%s: step %d/%d", label, i, n))
        entry = {"label": label, "temperature": sim.temperature, "seed": sim.seed,
                 "velocity_file": res.velocity_path, "position_file": res.position_path,
                 "energy_log": res.energy_log_path, "energy_drift": res.energy_drift,
                 "drift_per_10k_steps": res.drift_per_10k_steps,
                 "mean_temperature": res.mean_temperature}
        with open(record_path, "w") as fh:
            json.dump({"config": record, "result": entry}, fh, indent=1, sort_keys=True)
            fh.write("\n")
        echo(f"{label}: drift {res.energy_drift:.3g} (per 1e4 steps {res.drift_per_10k_steps:.3g}), "
             f"mean T {res.mean_temperature:.4f}")
        summary.append(entry)
    return summary


class Workspace:
    """Lazily evaluated pipeline stages for one configuration."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.sources: list[StateSource] = cfg.state_sources()
        self.labels = [s.label for s in self.sources]
        self._series = None
        self._lags = None

    @property
    def series(self):
        if self._series is None:
            if not self.cfg.states and self.cfg.simulation is not None:
                _simulate_plan(self.cfg, only_missing=True, echo=log.info)
            loaded = []
            for s in self.sources:
                if not os.path.exists(s.velocities):
                    raise ValidationError(f"state {s.label}: no such file {s.velocities}", field="velocities")
                loaded.append(load_series(s.velocities, s.format, s.dt, s.channel))
            dts = {round(x.dt, 12) for x in loaded}
            chans = {x.channel for x in loaded}
            if len(dts) > 1:
                raise ValidationError(f"states differ in sampling interval: {sorted(dts)}", field="dt")
            if len(chans) > 1:
                raise ValidationError(f"states differ in channel: {sorted(c.name for c in chans)}",
                                      field="channel")
            N = self.cfg.analysis.segment_len
            for s, x in zip(self.sources, loaded):
                if N > x.frames.shape[0]:
                    raise ValidationError(f"state {s.label}: segment length {N} exceeds the "
                                          f"{x.frames.shape[0]} available frames", field="segment_len")
            self._series = loaded
        return self._series

    @property
    def lag_tables(self):
        if self._lags is None:
            a = self.cfg.analysis
            self._lags = [particle_lag_tables(x.frames, a.segment_len, a.normalization, a.unbiased)
                          for x in self.series]
        return self._lags

    def meta(self, **extra) -> dict:
        a = self.cfg.analysis
        N = a.segment_len
        K = ";".join(f"{lab}={x.frames.shape[0] // N}" for lab, x in zip(self.labels, self.series))
        return {"covdist_version": __version__, "segment_len": N, "segments_per_particle": K,
                "normalization": a.normalization, "descriptor_mode": a.descriptor_mode,
                "estimator": "unbiased" if a.unbiased else "biased", **extra}

    def descriptors(self):
        a = self.cfg.analysis
        return [state_descriptor(s.label, r, a.descriptor_mode, a.particle_index, s.scalar_tag)
                for s, r in zip(self.sources, self.lag_tables)]

    def distance_matrix(self) -> DistanceMatrix:
        return distance_matrix(self.descriptors(), self.cfg.analysis.distance_method)

    def embedding(self, dm: DistanceMatrix) -> Embedding:
        a = self.cfg.analysis
        if len(dm.labels) == 1:
            return Embedding(dm.labels, np.zeros((1, a.dims)), np.zeros(a.dims),
                             np.ones((1, min(a.dims, 1))), a.embedding_method)
        return pca_embed(dm, a.dims, a.embedding_method)

    def diffusion(self) -> list[dict]:
        rows = []
        for s, x in zip(self.sources, self.series):
            row = {"label": s.label, "d_msd": float("nan"), "d_vacf": float("nan"),
                   "msd_reliable": "", "vacf_reliable": "", "vacf_t_cut": float("nan")}
            if x.channel == Channel.VELOCITY:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", DiffusionWarning)
                    r = diffusion_vacf(x.frames, x.dt)
                row.update(d_vacf=r.coefficient, vacf_reliable=str(r.reliable).lower(), vacf_t_cut=r.t_cut)
            if s.positions and os.path.exists(s.positions):
                header, pos = read_trajectory(s.positions)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", DiffusionWarning)
                    r = diffusion_msd(pos, header.frame_interval)
                row.update(d_msd=r.coefficient, msd_reliable=str(r.reliable).lower())
            elif s.positions:
                raise ValidationError(f"state {s.label}: no such file {s.positions}", field="positions")
            rows.append(row)
        return rows


# ---------------------------------------------------------------------------
# writers

def _out_dir(cfg: RunConfig) -> str:
    os.makedirs(cfg.analysis.out, exist_ok=True)
    return cfg.analysis.out


def write_distance(ws: Workspace, dm: DistanceMatrix) -> str:
    path = os.path.join(_out_dir(ws.cfg), "distance_matrix.csv")
    write_matrix(path, dm.values, dm.labels,
                 ws.meta(distance_method=ws.cfg.analysis.distance_method))
    if ws.cfg.analysis.svg:
        with open(path[:-4] + ".svg", "w") as fh:
            fh.write(svg.heatmap(dm.values, list(dm.labels)))
    return path


def _tag(src: StateSource):
    return float("nan") if src.scalar_tag is None else float(src.scalar_tag)


def write_embedding(ws: Workspace, emb: Embedding) -> str:
    path = os.path.join(_out_dir(ws.cfg), "embedding.csv")
    dims = emb.coordinates.shape[1]
    ratios = " ".join(repr(float(r)) for r in emb.explained_variance_ratio)
    rows = [[s.label, _tag(s), *emb.coordinates[k]] for k, s in enumerate(ws.sources)]
    write_table(path, ["label", "scalar_tag"] + [f"pc{d + 1}" for d in range(dims)], rows,
                ws.meta(embedding_method=emb.method, explained_variance_ratio=ratios))
    if ws.cfg.analysis.svg:
        y = emb.coordinates[:, 1] if dims > 1 else np.zeros(len(emb.labels))
        with open(path[:-4] + ".svg", "w") as fh:
            fh.write(svg.scatter(emb.coordinates[:, 0], y, list(emb.labels)))
    return path


DIFFUSION_COLUMNS = ("label", "scalar_tag", "d_msd", "d_vacf", "relative_gap", "msd_reliable",
                     "vacf_reliable", "vacf_t_cut")


def write_diffusion(ws: Workspace, rows: list[dict]) -> str:
    path = os.path.join(_out_dir(ws.cfg), "diffusion.csv")
    out = []
    for s, r in zip(ws.sources, rows):
        gap = abs(r["d_msd"] - r["d_vacf"]) / r["d_vacf"] if r["d_vacf"] > 0 else float("nan")
        out.append([r["label"], _tag(s), r["d_msd"], r["d_vacf"], gap, r["msd_reliable"],
                    r["vacf_reliable"], r["vacf_t_cut"]])
    write_table(path, DIFFUSION_COLUMNS, out,
                {"covdist_version": __version__, "msd_window": "0.25 0.5", "vacf_threshold": 0.01})
    return path


def write_fit(ws: Workspace, emb: Embedding, rows: list[dict]) -> tuple[str, dict]:
    path = os.path.join(_out_dir(ws.cfg), "fit.csv")
    key = "d_" + ws.cfg.analysis.diffusion
    d = np.array([r[key] for r in rows])
    meta = ws.meta(x="pc1", y=key)
    if len(rows) < 2:
        result = {"note": "insufficient states"}
    elif not np.all(np.isfinite(d)):
        result = {"note": f"{key} unavailable for some states"}
    else:
        f = linear_fit(emb.coordinates[:, 0], d)
        result = {"slope": f.slope, "intercept": f.intercept, "pearson_r": f.pearson_r,
                  "n_points": f.n_points}
    write_table(path, ["quantity", "value"], list(result.items()), meta)
    return path, result


def run_histograms(ws: Workspace) -> list[str]:
    h = ws.cfg.histogram
    labels = ws.labels
    ref = h.reference if h.reference is not None else labels[0]
    if ref not in labels:
        raise ValidationError(f"reference state {ref!r} not found; available: {', '.join(labels)}",
                              field="reference")
    stacks = dict(zip(labels, (dense_descriptors(r) for r in ws.lag_tables)))
    if h.pairs == "reference":
        pairs = [(ref, lab) for lab in labels]
    else:
        pairs = [(a, b) for i, a in enumerate(labels) for b in labels[i:]]
    samples = []
    for a, b in pairs:
        B = None if a == b else stacks[b]
        samples.append(sample_pair_distances(stacks[a], B, h.n_pairs, h.seed))
    lo = min(float(s.min()) for s in samples)
    hi = max(float(s.max()) for s in samples)
    rng_ = None if lo == hi else (lo, hi)
    out_dir = _out_dir(ws.cfg)
    paths, hists = [], []
    for (a, b), s in zip(pairs, samples):
        hist = histogram(s, h.n_bins, rng_, (a, b), h.seed)
        hists.append(hist)
        path = os.path.join(out_dir, f"hist_{_slug(a)}__{_slug(b)}.csv")
        rows = [[hist.bin_edges[k], hist.bin_edges[k + 1], int(c)] for k, c in enumerate(hist.counts)]
        write_table(path, ["bin_lo", "bin_hi", "count"], rows,
                    ws.meta(label_pair=f"{a} {b}", n_pairs=h.n_pairs, seed=h.seed,
                            sample_count=hist.sample_count, mean_distance=repr(float(s.mean()))))
        paths.append(path)
    if ws.cfg.analysis.svg:
        edges = hists[0].bin_edges
        if all(np.array_equal(x.bin_edges, edges) for x in hists):
            with open(os.path.join(out_dir, "histograms.svg"), "w") as fh:
                fh.write(svg.histograms(edges, [x.counts for x in hists], [f"{a} vs {b}" for a, b in pairs]))
    return paths


# ---------------------------------------------------------------------------
# commands

def cmd_simulate(cfg: RunConfig, args) -> int:
    if cfg.simulation is None:
        raise ValidationError("config has no [simulation] table", field="simulation")
    summary = _simulate_plan(cfg)
    print(json.dumps({"runs": summary}, sort_keys=True))
    return 0


def cmd_distmat(cfg, args) -> int:
    ws = Workspace(cfg)
    print(write_distance(ws, ws.distance_matrix()))
    return 0


def cmd_embed(cfg, args) -> int:
    ws = Workspace(cfg)
    dm = ws.distance_matrix()
    print(write_distance(ws, dm))
    print(write_embedding(ws, ws.embedding(dm)))
    return 0


def cmd_diffusion(cfg, args) -> int:
    ws = Workspace(cfg)
    print(write_diffusion(ws, ws.diffusion()))
    return 0


def cmd_hist(cfg, args) -> int:
    ws = Workspace(cfg)
    for p in run_histograms(ws):
        print(p)
    return 0


def cmd_analyze(cfg, args) -> int:
    ws = Workspace(cfg)
    dm = ws.distance_matrix()
    emb = ws.embedding(dm)
    rows = ws.diffusion()
    for p in (write_distance(ws, dm), write_embedding(ws, emb), write_diffusion(ws, rows)):
        print(p)
    path, fit = write_fit(ws, emb, rows)
    print(path)
    for p in run_histograms(ws):
        print(p)
    print(json.dumps({"fit": fit}, sort_keys=True))
    return 0


COMMANDS = {
    "simulate": (cmd_simulate, "run the Langevin + NVE protocol for each configured temperature"),
    "analyze": (cmd_analyze, "distance matrix, embedding, diffusion, fit and histograms"),
    "hist": (cmd_hist, "pair-distance histograms against a reference state"),
    "distmat": (cmd_distmat, "state-to-state distance matrix"),
    "embed": (cmd_embed, "distance matrix and its low-dimensional embedding"),
    "diffusion": (cmd_diffusion, "MSD and VACF diffusion coefficients per state"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="covdist", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"covdist {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="TOML run configuration")
        s.add_argument("--segment-len", type=int, help="override analysis.segment_len")
        s.add_argument("--pairs", type=int, help="override histogram.n_pairs")
        s.add_argument("--seed", type=int,
                       help="override the simulation seed (simulate) or histogram.seed (other commands)")
        s.add_argument("--out", help="override the output directory")
        s.add_argument("-v", "--verbose", action="count", default=0)
    return p


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.segment_len is not None:
        if args.segment_len < 1:
            raise ValidationError(f"segment_len: must be >= 1, got {args.segment_len}", field="segment_len")
        cfg.analysis.segment_len = args.segment_len
    if args.pairs is not None:
        if args.pairs < 1:
            raise ValidationError(f"n_pairs: must be >= 1, got {args.pairs}", field="n_pairs")
        cfg.histogram.n_pairs = args.pairs
    if args.seed is not None:
        if args.command == "simulate" and cfg.simulation is not None:
            cfg.simulation.configs = [(lab, dataclasses.replace(c, seed=args.seed))
                                      for lab, c in cfg.simulation.configs]
        else:
            cfg.histogram.seed = args.seed
    if args.out is not None:
        if args.command == "simulate" and cfg.simulation is not None:
            cfg.simulation.out = args.out
        else:
            cfg.analysis.out = args.out
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = apply_overrides(load_config(args.config), args)
        return COMMANDS[args.command][0](cfg, args)
    except (ValidationError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CovdistError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
