"""Per-particle three-component time series: ingestion, normalization, segmentation."""

from __future__ import annotations

import enum
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ValidationError


class Channel(enum.IntEnum):
    """Physical quantity carried by a series; values double as binary tags."""

    VELOCITY = 0
    POSITION = 1
    DIPOLE = 2

    @classmethod
    def parse(cls, value) -> "Channel":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.upper()]
            except KeyError:
                raise ValidationError(f"unknown channel {value!r}", field="channel") from None
        try:
            return cls(int(value))
        except ValueError:
            raise ValidationError(f"unknown channel tag {value!r}", field="channel") from None


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ParticleSeries:
    """One particle's (L, 3) series sampled every ``dt`` time units."""

    particle_id: int
    dt: float
    channel: Channel
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != 3:
            raise ValidationError(f"series data must have shape (L, 3), got {data.shape}", field="data")
        if data.shape[0] < 1:
            raise ValidationError("series must hold at least one sample", field="data")
        if not np.all(np.isfinite(data)):
            row = int(np.argwhere(~np.isfinite(data))[0, 0])
            raise ValidationError(f"non-finite value in particle {self.particle_id} at sample {row}", field="data")
        if not self.dt > 0:
            raise ValidationError(f"dt must be positive, got {self.dt}", field="dt")
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "channel", Channel.parse(self.channel))

    def __len__(self):
        return self.data.shape[0]


@dataclass(frozen=True)
class SegmentMatrix:
    """A 3 x N sub-window; column j is sample ``(m-1)*N + j`` of the parent (1-based m, j)."""

    values: np.ndarray
    segment_index: int

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != 3 or values.shape[1] < 1:
            raise ValidationError(f"segment must have shape (3, N), got {values.shape}", field="values")
        if not np.all(np.isfinite(values)):
            raise ValidationError("segment contains non-finite values", field="values")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def N(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class NormalizationRecord:
    shift: np.ndarray = field(default_factory=lambda: np.zeros(3))
    scale: np.ndarray = field(default_factory=lambda: np.ones(3))
    policy: str = "none"

    def __post_init__(self):
        scale = np.asarray(self.scale, dtype=np.float64)
        if np.any(scale <= 0):
            raise ValidationError("normalization scale must be positive", field="scale")
        object.__setattr__(self, "shift", _frozen(np.array(self.shift, dtype=np.float64)))
        object.__setattr__(self, "scale", _frozen(scale.copy()))

    def invert(self, series: ParticleSeries) -> ParticleSeries:
        """Undo the transform that produced ``series``."""
        return ParticleSeries(series.particle_id, series.dt, series.channel,
                              series.data * self.scale + self.shift)


NORMALIZATION_POLICIES = ("zscore-per-component", "none")


def normalize(series: ParticleSeries, policy: str = "zscore-per-component"):
    """Return ``(normalized_series, record)``.

    ``zscore-per-component`` shifts and scales each component to zero mean and
    unit variance over the whole series (population variance, 1/L).
    """
    if policy == "none":
        return series, NormalizationRecord(policy="none")
    if policy != "zscore-per-component":
        raise ValidationError(f"unknown normalization policy {policy!r}", field="normalization")
    shift = series.data.mean(axis=0)
    scale = series.data.std(axis=0)
    flat = np.flatnonzero(scale == 0)
    if flat.size:
        comp = "xyz"[flat[0]]
        raise ValidationError(
            f"component {comp} of particle {series.particle_id} has zero variance", field="normalization")
    out = ParticleSeries(series.particle_id, series.dt, series.channel, (series.data - shift) / scale)
    return out, NormalizationRecord(shift, scale, policy)


def normalize_array(traj: np.ndarray, policy: str) -> np.ndarray:
    """Vectorized :func:`normalize` over a (L, P, 3) trajectory, per particle."""
    if policy == "none":
        return traj
    if policy != "zscore-per-component":
        raise ValidationError(f"unknown normalization policy {policy!r}", field="normalization")
    shift = traj.mean(axis=0)
    scale = traj.std(axis=0)
    bad = np.argwhere(scale == 0)
    if bad.size:
        p, c = bad[0]
        raise ValidationError(f"component {'xyz'[c]} of particle {p} has zero variance", field="normalization")
    return (traj - shift) / scale


def segment(series: ParticleSeries, N: int) -> list[SegmentMatrix]:
    """Split into K = L // N disjoint windows; a trailing partial window is dropped."""
    if N < 1:
        raise ValidationError(f"segment length must be >= 1, got {N}", field="segment_len")
    L = len(series)
    if N > L:
        raise ValidationError("series shorter than one segment", field="segment_len")
    K = L // N
    blocks = series.data[: K * N].reshape(K, N, 3)
    return [SegmentMatrix(blocks[m].T, m + 1) for m in range(K)]


# ---------------------------------------------------------------------------
# ingestion

def ingest_series(source, format: str, dt: float | None = None,
                  channel="dipole") -> list[ParticleSeries]:
    """Parse a binary trajectory or a CSV table into one series per particle.

    ``source`` may be a path, bytes/str content, or an open file object. For
    CSV input ``dt`` must be given (the table itself carries only step indices).
    """
    if format == "binary-trajectory":
        from .trajio import read_trajectory

        header, frames = read_trajectory(source)
        return [ParticleSeries(p, header.dt * header.sample_stride, header.channel, frames[:, p, :])
                for p in range(header.n_particles)]
    if format == "csv":
        ids, _, data = read_series_csv(source)
        if dt is None:
            raise ValidationError("CSV input needs dt from a sidecar or flag", field="dt")
        return [ParticleSeries(int(pid), dt, channel, data[:, i, :]) for i, pid in enumerate(ids)]
    raise ValidationError(f"unknown input format {format!r}", field="format")


CSV_HEADER = ("particle_id", "step", "cx", "cy", "cz")


def _open_text(source):
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        return open(source, newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode())
    if isinstance(source, str):
        return io.StringIO(source)
    return source


def read_series_csv(source):
    """Read the ``particle_id,step,cx,cy,cz`` exchange table.

    Returns ``(particle_ids, steps, data)`` with data shaped (L, P, 3); every
    particle must cover the same steps.
    """
    fh = _open_text(source)
    try:
        lines = [ln.strip() for ln in fh]
    finally:
        if fh is not source:
            fh.close()
    lines = [(i + 1, ln) for i, ln in enumerate(lines) if ln and not ln.startswith("#")]
    if not lines:
        raise FormatError("no records")
    lineno, head = lines[0]
    if tuple(h.strip() for h in head.split(",")) != CSV_HEADER:
        raise FormatError(f"malformed header, expected {','.join(CSV_HEADER)}", position=f"line {lineno}")
    if len(lines) == 1:
        raise FormatError("no records")
    rows: dict[int, dict[int, tuple]] = {}
    for lineno, ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 5:
            raise FormatError(f"expected 5 fields, got {len(parts)}", position=f"line {lineno}")
        try:
            pid, step = int(parts[0]), int(parts[1])
            vec = tuple(float(v) for v in parts[2:])
        except ValueError:
            raise FormatError("unparseable field", position=f"line {lineno}") from None
        if not all(np.isfinite(vec)):
            raise FormatError("non-finite value", position=f"line {lineno}")
        per = rows.setdefault(pid, {})
        if step in per:
            raise FormatError(f"duplicate step {step} for particle {pid}", position=f"line {lineno}")
        per[step] = vec
    ids = sorted(rows)
    steps = sorted(rows[ids[0]])
    for pid in ids[1:]:
        if sorted(rows[pid]) != steps:
            raise FormatError(f"particle {pid} covers different steps than particle {ids[0]}",
                              position=f"particle {pid}")
    data = np.array([[rows[pid][s] for pid in ids] for s in steps], dtype=np.float64)
    return np.array(ids), np.array(steps), data


def write_series_csv(path, data: np.ndarray, particle_ids=None, steps=None):
    """Write an (L, P, 3) array in the CSV exchange format."""
    L, P, _ = data.shape
    particle_ids = range(P) if particle_ids is None else particle_ids
    steps = range(L) if steps is None else steps
    with open(path, "w", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for i, pid in enumerate(particle_ids):
            for t, s in enumerate(steps):
                x, y, z = map(float, data[t, i])
                fh.write(f"{pid},{s},{x!r},{y!r},{z!r}\n")
