"""Trajectory-level stages: normalize, segment, per-particle descriptors, state means.

These operate on whole (L, P, 3) trajectories at once through the compiled
lag-table kernel. Results agree with the per-series functions in
:mod:`covdist.timeseries` and :mod:`covdist.covariance` up to summation order.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .covariance import BlockToeplitzCov, toeplitz_from_lags
from .distance import StateDescriptor
from .errors import ValidationError
from .timeseries import Channel, normalize_array, read_series_csv
from .trajio import read_trajectory

DESCRIPTOR_MODES = ("state-mean", "per-particle", "single-particle")


@dataclass
class LoadedSeries:
    """One state's frames with sampling metadata; ``dt`` is the frame interval."""

    frames: np.ndarray
    dt: float
    channel: Channel


def load_series(path, fmt: str | None = None, dt: float | None = None, channel=None) -> LoadedSeries:
    """Load a binary trajectory or CSV exchange table.

    The format is inferred from the extension when ``fmt`` is None. CSV input
    takes ``dt`` from the argument or from a ``<path>.json`` sidecar holding
    ``{"dt": ...}``.
    """
    path = os.fspath(path)
    if fmt is None:
        fmt = "csv" if path.lower().endswith(".csv") else "binary-trajectory"
    if fmt == "binary-trajectory":
        header, frames = read_trajectory(path)
        return LoadedSeries(frames, header.frame_interval, header.channel)
    if fmt == "csv":
        if dt is None:
            sidecar = path + ".json"
            if os.path.exists(sidecar):
                import json

                with open(sidecar) as fh:
                    meta = json.load(fh)
                dt = meta.get("dt")
                channel = channel or meta.get("channel")
        if dt is None:
            raise ValidationError(f"{path}: CSV input needs dt (sidecar {path}.json or config)", field="dt")
        _, _, data = read_series_csv(path)
        return LoadedSeries(data, float(dt), Channel.parse(channel or "dipole"))
    raise ValidationError(f"unknown input format {fmt!r}", field="format")


def particle_lag_tables(frames, N: int, normalization: str = "none", unbiased: bool = False) -> np.ndarray:
    """Per-particle mean lag tables, shape (P, 3, 3, N).

    Each particle's series is normalized, cut into K = L // N windows, and its
    window lag tables averaged; by linearity this equals the Euclidean mean of
    that particle's K block-Toeplitz descriptors.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if N < 1:
        raise ValidationError(f"segment length must be >= 1, got {N}", field="segment_len")
    if N > frames.shape[0]:
        raise ValidationError("series shorter than one segment", field="segment_len")
    data = np.ascontiguousarray(normalize_array(frames, normalization))
    return kernels.mean_lag_tables(data, N, unbiased)


def dense_descriptors(lag_tables) -> np.ndarray:
    """Stack of dense (3N, 3N) matrices, one per particle."""
    return np.stack([toeplitz_from_lags(r) for r in lag_tables])


def state_descriptor(label: str, lag_tables, mode: str = "state-mean", particle_index: int = 0,
                     scalar_tag=None) -> StateDescriptor:
    """Reduce per-particle lag tables to one descriptor for the state.

    ``state-mean`` (and ``per-particle``, whose state-level reduction is the
    same) averages over particles; ``single-particle`` takes one particle.
    """
    if mode in ("state-mean", "per-particle"):
        r = np.mean(lag_tables, axis=0)
    elif mode == "single-particle":
        if not 0 <= particle_index < len(lag_tables):
            raise ValidationError(f"particle_index {particle_index} out of range", field="particle_index")
        r = lag_tables[particle_index]
    else:
        raise ValidationError(f"unknown descriptor mode {mode!r}", field="descriptor_mode")
    return StateDescriptor(label, BlockToeplitzCov.from_lags(r), scalar_tag)
