"""Frobenius distances between covariance descriptors, pair sampling and histograms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import BlockToeplitzCov
from .errors import ValidationError


@dataclass(frozen=True)
class StateDescriptor:
    label: str
    matrix: BlockToeplitzCov
    scalar_tag: float | None = None


@dataclass(frozen=True)
class DistanceMatrix:
    labels: tuple
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] != len(self.labels):
            raise ValidationError(f"distance matrix must be {len(self.labels)}x{len(self.labels)}, got {v.shape}")
        if not np.array_equal(v, v.T):
            raise ValidationError("distance matrix is not symmetric")
        if np.any(np.diag(v) != 0) or np.any(v < 0):
            raise ValidationError("distance matrix needs a zero diagonal and nonnegative entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "labels", tuple(self.labels))

    def row(self, label) -> np.ndarray:
        return self.values[self.labels.index(label)]


@dataclass(frozen=True)
class DistanceHistogram:
    """Uniform-bin counts; ``sample_count`` counts samples inside the bin range."""

    bin_edges: np.ndarray
    counts: np.ndarray
    sample_count: int
    label_pair: tuple = ("", "")
    rng_seed: int | None = None
    n_outside: int = 0


def _dense(R) -> np.ndarray:
    return R.matrix if isinstance(R, BlockToeplitzCov) else np.asarray(R, dtype=np.float64)


def frobenius_distance(Ri, Rj) -> float:
    """``||Ri - Rj||_F`` evaluated on the dense matrices."""
    A, B = _dense(Ri), _dense(Rj)
    if A.shape != B.shape:
        raise ValidationError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return float(np.sqrt(np.sum((A - B) ** 2)))


def lag_weights(N: int) -> np.ndarray:
    """How often each lag-table entry occurs in the dense matrix, per ordered (a, b)."""
    w = 2.0 * (N - np.arange(N))
    w[0] = N
    return w


def frobenius_distance_lags(ri, rj) -> float:
    """Same distance computed from (3, 3, N) lag tables in O(N) memory.

    r[a, b, 0] sits N times on the diagonal of block (a, b); for k >= 1,
    r[a, b, k] appears N - k times above the diagonal of block (a, b) and
    N - k times below the diagonal of block (b, a).
    """
    if isinstance(ri, BlockToeplitzCov):
        ri = ri.lags
    if isinstance(rj, BlockToeplitzCov):
        rj = rj.lags
    if ri is None or rj is None:
        raise ValidationError("lag tables unavailable for this descriptor")
    ri, rj = np.asarray(ri), np.asarray(rj)
    if ri.shape != rj.shape:
        raise ValidationError(f"dimension mismatch: {ri.shape} vs {rj.shape}")
    d = ri - rj
    return float(np.sqrt(np.sum(lag_weights(ri.shape[-1]) * d * d)))


def distance_matrix(descriptors, method: str = "dense") -> DistanceMatrix:
    descriptors = list(descriptors)
    labels = [d.label for d in descriptors]
    if len(set(labels)) != len(labels):
        raise ValidationError("duplicate descriptor labels")
    if len({d.matrix.N for d in descriptors}) > 1:
        raise ValidationError("descriptors have mismatched block sizes")
    dist = {"dense": frobenius_distance, "lags": frobenius_distance_lags}.get(method)
    if dist is None:
        raise ValidationError(f"unknown distance method {method!r}")
    S = len(descriptors)
    D = np.zeros((S, S))
    for i in range(S):
        for j in range(i + 1, S):
            D[i, j] = D[j, i] = dist(descriptors[i].matrix, descriptors[j].matrix)
    return DistanceMatrix(labels, D)


def _stack(collection) -> np.ndarray:
    if isinstance(collection, np.ndarray):
        return collection
    return np.stack([_dense(R) for R in collection])


def sample_pair_distances(state_a, state_b=None, n_pairs: int = 4000, seed: int = 0) -> np.ndarray:
    """Distances for ``n_pairs`` random (a, b) particle pairs, drawn uniformly with replacement.

    ``state_a`` / ``state_b`` are sequences of descriptors or stacked
    (P, M, M) arrays. Omitting ``state_b`` (or passing the same object)
    samples within one state, and then the two particles of a pair differ.
    """
    same = state_b is None or state_b is state_a
    A = _stack(state_a)
    B = A if same else _stack(state_b)
    if len(A) == 0 or len(B) == 0:
        raise ValidationError("both collections must be nonempty")
    if n_pairs < 1:
        raise ValidationError("n_pairs must be >= 1", field="n_pairs")
    if A.shape[1:] != B.shape[1:]:
        raise ValidationError("descriptors have mismatched block sizes")
    rng = np.random.default_rng(seed)
    i = rng.integers(0, len(A), size=n_pairs)
    if same:
        if len(A) < 2:
            raise ValidationError("same-collection sampling needs at least 2 particles")
        j = rng.integers(0, len(A) - 1, size=n_pairs)
        j = j + (j >= i)
    else:
        j = rng.integers(0, len(B), size=n_pairs)
    out = np.empty(n_pairs)
    for start in range(0, n_pairs, 1024):
        sl = slice(start, start + 1024)
        diff = A[i[sl]] - B[j[sl]]
        out[sl] = np.sqrt(np.einsum("pij,pij->p", diff, diff))
    return out


def histogram(samples, n_bins: int = 50, range=None, label_pair=("", ""), rng_seed=None) -> DistanceHistogram:
    """Count samples into uniform bins.

    Bins are closed on the right, so a value on an interior edge falls in the
    lower bin, and the lowest edge belongs to the first bin. Without an
    explicit ``range`` the bins span ``[min, max]``; if every sample is equal
    a single unit-width bin centred on that value holds them all.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise ValidationError("histogram needs at least one sample")
    if n_bins < 1:
        raise ValidationError("n_bins must be >= 1", field="n_bins")
    if range is None:
        lo, hi = float(x.min()), float(x.max())
        if lo == hi:
            lo, hi, n_bins = lo - 0.5, hi + 0.5, 1
    else:
        lo, hi = map(float, range)
        if not hi > lo:
            raise ValidationError(f"histogram range must be ascending, got {range}")
    edges = np.linspace(lo, hi, n_bins + 1)
    inside = (x >= lo) & (x <= hi)
    idx = np.clip(np.searchsorted(edges, x[inside], side="left") - 1, 0, n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    return DistanceHistogram(edges, counts, int(inside.sum()), tuple(label_pair), rng_seed,
                             int(x.size - inside.sum()))
