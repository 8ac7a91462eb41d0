"""PCA embedding of a distance matrix and linear fits against physical properties."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import DistanceMatrix
from .errors import ValidationError


@dataclass(frozen=True)
class Embedding:
    labels: tuple
    coordinates: np.ndarray
    explained_variance_ratio: np.ndarray
    component_axes: np.ndarray  # (S, dims), orthonormal columns
    method: str = "pca"


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    pearson_r: float
    n_points: int


def _orient(axes: np.ndarray) -> np.ndarray:
    # flip each column so its largest-magnitude entry is positive; magnitudes
    # within 1e-9 of the maximum count as tied and the first of them decides
    mag = np.abs(axes)
    tied = mag >= mag.max(axis=0) - 1e-9
    pivot = axes[np.argmax(tied, axis=0), np.arange(axes.shape[1])]
    return axes * np.where(pivot < 0, -1.0, 1.0)


def pca_embed(dm: DistanceMatrix, dims: int = 2, method: str = "pca") -> Embedding:
    """Embed the states of a distance matrix in ``dims`` dimensions.

    ``pca`` treats each row of the matrix as a feature vector, centres the
    columns and projects onto the leading eigenvectors of the feature
    covariance. ``mds`` is classical multidimensional scaling of the squared
    distances instead.
    """
    D = np.asarray(dm.values, dtype=np.float64)
    S = D.shape[0]
    if not 1 <= dims <= S:
        raise ValidationError(f"dims must lie in [1, {S}], got {dims}", field="dims")
    if method == "pca":
        X = D - D.mean(axis=0)
        C = X.T @ X / S
        lam, V = np.linalg.eigh((C + C.T) / 2)
    elif method == "mds":
        J = np.eye(S) - 1.0 / S
        B = -0.5 * J @ (D * D) @ J
        lam, V = np.linalg.eigh((B + B.T) / 2)
    else:
        raise ValidationError(f"unknown embedding method {method!r}", field="method")
    order = np.argsort(lam)[::-1]
    lam, V = np.clip(lam[order], 0.0, None), V[:, order]
    axes = _orient(V[:, :dims])
    total = lam.sum()
    if total <= 0:
        return Embedding(dm.labels, np.zeros((S, dims)), np.zeros(dims), axes, method)
    if method == "pca":
        coords = X @ axes
    else:
        coords = axes * np.sqrt(lam[:dims])
    return Embedding(dm.labels, coords, lam[:dims] / total, axes, method)


def linear_fit(x, y) -> LinearFit:
    """Ordinary least squares ``y ~ slope * x + intercept`` with Pearson r.

    r is reported as 0 when ``y`` is constant.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValidationError("linear_fit needs two equal-length sequences of at least 2 points")
    xc, yc = x - x.mean(), y - y.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise ValidationError("degenerate x: all values equal")
    sxy, syy = float(xc @ yc), float(yc @ yc)
    slope = sxy / sxx
    r = 0.0 if syy == 0 else float(np.clip(sxy / np.sqrt(sxx * syy), -1.0, 1.0))
    return LinearFit(slope, float(y.mean() - slope * x.mean()), r, int(x.size))
