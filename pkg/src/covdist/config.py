"""Run configuration read from a TOML file.

Schema (all tables optional unless a command needs them)::

    [simulation]            # SimConfig fields, plus:
    density = 0.8           # alternative to box_length
    temperatures = [0.80, 0.85]   # one run per entry; or a single `temperature`
    out = "runs"            # directory for trajectories and energy logs
    prefix = "T{temperature:.2f}"

    [analysis]
    segment_len = 8
    normalization = "zscore-per-component"   # or "none" (reduced-unit velocities)
    descriptor_mode = "state-mean"  # "per-particle" | "single-particle"
    particle_index = 0
    distance_method = "dense"       # or "lags"
    embedding_method = "pca"        # or "mds"
    dims = 2
    diffusion = "msd"               # estimator fitted against PC1: "msd" | "vacf"
    unbiased = false
    svg = false
    out = "results"

    [histogram]
    n_pairs = 4000
    seed = 0
    n_bins = 50
    reference = "0.80"              # label of the reference state
    pairs = "reference"             # or "all" (every unordered pair incl. self)

    [[state]]
    label = "0.80"
    scalar_tag = 0.80
    velocities = "runs/T0.80.vel.cvtj"   # series analysed (any channel)
    positions = "runs/T0.80.pos.cvtj"    # optional, for MSD diffusion
    format = "binary-trajectory"         # or "csv"; default from extension
    dt = 0.005                           # CSV only, unless a sidecar exists
    channel = "velocity"                 # CSV only

Without ``[[state]]`` tables the states are the runs described by
``[simulation]``. Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ValidationError
from .md.integrators import SimConfig
from .pipeline import DESCRIPTOR_MODES
from .timeseries import NORMALIZATION_POLICIES


@dataclass
class StateSource:
    label: str
    velocities: str
    positions: str | None = None
    scalar_tag: float | None = None
    format: str | None = None
    dt: float | None = None
    channel: str | None = None


@dataclass
class AnalysisOptions:
    segment_len: int = 8
    normalization: str = "zscore-per-component"
    descriptor_mode: str = "state-mean"
    particle_index: int = 0
    distance_method: str = "dense"
    embedding_method: str = "pca"
    dims: int = 2
    diffusion: str = "msd"
    unbiased: bool = False
    svg: bool = False
    out: str = "results"


@dataclass
class HistogramOptions:
    n_pairs: int = 4000
    seed: int = 0
    n_bins: int = 50
    reference: str | None = None
    pairs: str = "reference"


@dataclass
class SimulationPlan:
    configs: list  # [(label, SimConfig)]
    out: str
    prefix: str

    def paths(self, label_config):
        label, cfg = label_config
        stem = os.path.join(self.out, self.prefix.format(temperature=cfg.temperature, label=label))
        return stem + ".vel.cvtj", stem + ".pos.cvtj"


@dataclass
class RunConfig:
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)
    histogram: HistogramOptions = field(default_factory=HistogramOptions)
    simulation: SimulationPlan | None = None
    states: list = field(default_factory=list)
    base_dir: str = "."

    def resolve(self, path):
        return path if path is None or os.path.isabs(path) else os.path.join(self.base_dir, path)

    def state_sources(self) -> list[StateSource]:
        if self.states:
            return self.states
        if self.simulation is None:
            raise ValidationError("config defines neither [[state]] tables nor a [simulation] table",
                                  field="state")
        out = []
        for lc in self.simulation.configs:
            vel, pos = self.simulation.paths(lc)
            out.append(StateSource(lc[0], vel, pos, lc[1].temperature))
        return out


def _options(cls, table, section):
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(table) - set(names))
    if unknown:
        raise ValidationError(f"[{section}] unknown key(s): {', '.join(unknown)}", field=unknown[0])
    return cls(**table)


def _check_int(section, name, value, low):
    if not isinstance(value, int) or isinstance(value, bool) or value < low:
        raise ValidationError(f"{section}.{name}: must be an integer >= {low}, got {value!r}", field=name)


def _choice(section, name, value, allowed):
    if value not in allowed:
        raise ValidationError(f"{section}.{name}: must be one of {', '.join(allowed)}, got {value!r}",
                              field=name)


def _simulation_plan(table, base_dir) -> SimulationPlan:
    table = dict(table)
    out = table.pop("out", "runs")
    prefix = table.pop("prefix", "T{temperature:.2f}")
    temps = table.pop("temperatures", None)
    density = table.pop("density", None)
    if temps is None:
        if "temperature" not in table:
            raise ValidationError("simulation.temperature: missing (or give temperatures)", field="temperature")
        temps = [table.pop("temperature")]
    elif "temperature" in table:
        raise ValidationError("simulation: give either temperature or temperatures", field="temperatures")
    if not isinstance(temps, list) or not temps:
        raise ValidationError("simulation.temperatures: must be a nonempty list", field="temperatures")
    unknown = sorted(set(table) - set(SimConfig.field_names()))
    if unknown:
        raise ValidationError(f"[simulation] unknown key(s): {', '.join(unknown)}", field=unknown[0])
    if density is not None:
        if "box_length" in table:
            raise ValidationError("simulation: give either density or box_length", field="density")
        if not isinstance(density, (int, float)) or density <= 0:
            raise ValidationError(f"simulation.density: must be positive, got {density!r}", field="density")
        if not isinstance(table.get("n_particles"), int) or table["n_particles"] < 1:
            raise ValidationError("n_particles: must be a positive integer", field="n_particles")
        table["box_length"] = (table["n_particles"] / density) ** (1 / 3)
    configs = []
    for T in temps:
        cfg = SimConfig(temperature=T, **table)
        configs.append((f"{float(T):.2f}", cfg))
    labels = [lab for lab, _ in configs]
    if len(set(labels)) != len(labels):
        raise ValidationError("simulation.temperatures: duplicate entries", field="temperatures")
    plan = SimulationPlan(configs, out if os.path.isabs(out) else os.path.join(base_dir, out), prefix)
    return plan


def parse_config(data: dict, base_dir: str = ".") -> RunConfig:
    known = {"simulation", "analysis", "histogram", "state"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValidationError(f"unknown section(s): {', '.join(unknown)}", field=unknown[0])
    a = _options(AnalysisOptions, data.get("analysis", {}), "analysis")
    _check_int("analysis", "segment_len", a.segment_len, 1)
    _check_int("analysis", "dims", a.dims, 1)
    _check_int("analysis", "particle_index", a.particle_index, 0)
    _choice("analysis", "normalization", a.normalization, NORMALIZATION_POLICIES)
    _choice("analysis", "descriptor_mode", a.descriptor_mode, DESCRIPTOR_MODES)
    _choice("analysis", "distance_method", a.distance_method, ("dense", "lags"))
    _choice("analysis", "embedding_method", a.embedding_method, ("pca", "mds"))
    _choice("analysis", "diffusion", a.diffusion, ("msd", "vacf"))
    h = _options(HistogramOptions, data.get("histogram", {}), "histogram")
    _check_int("histogram", "n_pairs", h.n_pairs, 1)
    _check_int("histogram", "seed", h.seed, 0)
    _check_int("histogram", "n_bins", h.n_bins, 1)
    _choice("histogram", "pairs", h.pairs, ("reference", "all"))
    if h.reference is not None:
        h.reference = str(h.reference)
    cfg = RunConfig(a, h, base_dir=base_dir)
    cfg.analysis.out = cfg.resolve(a.out)
    if "simulation" in data:
        cfg.simulation = _simulation_plan(data["simulation"], base_dir)
    states = data.get("state", [])
    if not isinstance(states, list):
        raise ValidationError("state: use [[state]] array tables", field="state")
    for i, st in enumerate(states):
        if "label" not in st or "velocities" not in st:
            raise ValidationError(f"state #{i + 1}: needs label and velocities", field="state")
        try:
            src = StateSource(**{**st, "label": str(st["label"])})
        except TypeError as exc:
            raise ValidationError(f"state #{i + 1}: {exc}", field="state") from None
        src.velocities = cfg.resolve(src.velocities)
        src.positions = cfg.resolve(src.positions)
        cfg.states.append(src)
    labels = [s.label for s in cfg.states]
    if len(set(labels)) != len(labels):
        raise ValidationError("state: duplicate labels", field="label")
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ValidationError(f"{path}: {exc}", field="config") from None
    except OSError as exc:
        raise ValidationError(f"{path}: {exc.strerror}", field="config") from None
    return parse_config(data, os.path.dirname(os.path.abspath(path)))
