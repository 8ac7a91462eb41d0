"""Sample moments and block-Toeplitz covariance descriptors.

A descriptor for a 3 x N segment is the 3N x 3N matrix of nine N x N Toeplitz
blocks. Block (a, b) has first row ``r[a, b, 0..N-1]`` and first column
``r[b, a, 0..N-1]``, where ``r[a, b, k] = (1/N) sum_{l=0}^{N-k-1} x[a, l] x[b, l+k]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .timeseries import SegmentMatrix

_COMPONENTS = {"x": 0, "y": 1, "z": 2}


def _component(c) -> int:
    if isinstance(c, str):
        try:
            return _COMPONENTS[c.lower()]
        except KeyError:
            raise ValidationError(f"unknown component {c!r}") from None
    c = int(c)
    if not 0 <= c <= 2:
        raise ValidationError(f"component index must be 0, 1 or 2, got {c}")
    return c


def sample_mean(vectors) -> np.ndarray:
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("sample_mean needs a nonempty list of vectors")
    return X.sum(axis=0) / X.shape[0]


def sample_covariance(vectors) -> np.ndarray:
    """Maximum-likelihood (1/n) covariance of the row vectors."""
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("sample_covariance needs a nonempty list of vectors")
    Xc = X - sample_mean(X)
    S = Xc.T @ Xc / X.shape[0]
    return (S + S.T) / 2


def _values(segment) -> np.ndarray:
    return segment.values if isinstance(segment, SegmentMatrix) else np.asarray(segment, dtype=np.float64)


def lag_correlation(segment, alpha, beta, k: int, unbiased: bool = False) -> float:
    """Lag-``k`` cross-correlation of components ``alpha`` and ``beta`` in one segment.

    Products are raw (no per-segment mean removal) and divided by N; pass
    ``unbiased=True`` to divide by N - k instead.
    """
    x = _values(segment)
    N = x.shape[1]
    if not 0 <= k <= N - 1:
        raise ValidationError(f"lag must lie in [0, {N - 1}], got {k}")
    a, b = _component(alpha), _component(beta)
    s = float(np.dot(x[a, : N - k], x[b, k:]))
    return s / (N - k if unbiased else N)


def lag_table(segment, unbiased: bool = False) -> np.ndarray:
    """All lag correlations of a segment as an array ``r[a, b, k]`` of shape (3, 3, N)."""
    x = _values(segment)
    N = x.shape[1]
    r = np.empty((3, 3, N))
    for a in range(3):
        for b in range(3):
            for k in range(N):
                r[a, b, k] = lag_correlation(x, a, b, k, unbiased)
    return r


def toeplitz_from_lags(r: np.ndarray) -> np.ndarray:
    """Assemble the dense 3N x 3N matrix from a (3, 3, N) lag table."""
    r = np.asarray(r, dtype=np.float64)
    N = r.shape[2]
    offset = np.arange(N)[None, :] - np.arange(N)[:, None]  # column minus row
    upper = offset >= 0
    lag = np.abs(offset)
    M = np.empty((3 * N, 3 * N))
    for a in range(3):
        for b in range(3):
            M[a * N:(a + 1) * N, b * N:(b + 1) * N] = np.where(upper, r[a, b][lag], r[b, a][lag])
    return M


@dataclass(frozen=True)
class BlockToeplitzCov:
    """Dense 3N x 3N descriptor plus, when known, its generating lag table."""

    N: int
    matrix: np.ndarray
    lags: np.ndarray | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3 * self.N, 3 * self.N):
            raise ValidationError(f"descriptor matrix must be {3 * self.N}x{3 * self.N}, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.lags is not None:
            lags = np.asarray(self.lags, dtype=np.float64)
            if lags.shape != (3, 3, self.N):
                raise ValidationError(f"lag table must be (3, 3, {self.N}), got {lags.shape}")
            lags.setflags(write=False)
            object.__setattr__(self, "lags", lags)

    @classmethod
    def from_lags(cls, r) -> "BlockToeplitzCov":
        r = np.array(r, dtype=np.float64)
        return cls(r.shape[2], toeplitz_from_lags(r), r)

    def block(self, alpha, beta) -> np.ndarray:
        a, b, N = _component(alpha), _component(beta), self.N
        return self.matrix[a * N:(a + 1) * N, b * N:(b + 1) * N]

    def scaled(self, c: float) -> "BlockToeplitzCov":
        return BlockToeplitzCov(self.N, c * self.matrix, None if self.lags is None else c * self.lags)


def build_block_toeplitz(segment, unbiased: bool = False) -> BlockToeplitzCov:
    return BlockToeplitzCov.from_lags(lag_table(segment, unbiased))


def euclidean_mean(matrices) -> BlockToeplitzCov:
    """Entrywise arithmetic mean, the Frobenius barycenter."""
    matrices = list(matrices)
    if not matrices:
        raise ValidationError("euclidean_mean needs at least one descriptor")
    N = matrices[0].N
    if any(m.N != N for m in matrices):
        raise ValidationError("descriptors have mismatched block sizes")
    K = len(matrices)
    acc = np.zeros((3 * N, 3 * N))
    for m in matrices:
        acc += m.matrix
    lags = None
    if all(m.lags is not None for m in matrices):
        lags = np.zeros((3, 3, N))
        for m in matrices:
            lags += m.lags
        lags /= K
    acc /= K
    return BlockToeplitzCov(N, acc, lags)


@dataclass(frozen=True)
class SpdDiagnostics:
    min_eigenvalue: float
    is_positive_definite: bool
    symmetry_residual: float
    tolerance: float


def spd_check(matrix, tolerance: float | None = None) -> SpdDiagnostics:
    """Smallest eigenvalue and a PD verdict.

    The default tolerance is 1e-10 times the largest diagonal entry.
    """
    M = matrix.matrix if isinstance(matrix, BlockToeplitzCov) else np.asarray(matrix, dtype=np.float64)
    residual = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if residual > 1e-9:
        raise ValidationError(f"matrix is not symmetric (residual {residual:.3g})")
    if tolerance is None:
        tolerance = 1e-10 * max(float(np.max(np.diag(M))), 0.0)
    lam = float(np.linalg.eigvalsh(M)[0])
    return SpdDiagnostics(lam, lam > tolerance, residual, tolerance)
