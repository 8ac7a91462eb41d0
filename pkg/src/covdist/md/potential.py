"""Lennard-Jones pair potential, FCC lattice and periodic force evaluation.

Reduced units throughout (sigma = epsilon = m = 1).
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import OverlapError, ValidationError

OVERLAP_DISTANCE = 1e-6


def lj_potential(r):
    """Unshifted 12-6 potential ``4 (r^-12 - r^-6)``."""
    inv6 = np.asarray(r, dtype=np.float64) ** -6
    return 4.0 * (inv6 * inv6 - inv6)


def lj_pair(r: float, cutoff: float = np.inf):
    """Return ``(potential, force_magnitude)`` for one pair at distance ``r``.

    The potential is truncated and shifted so it vanishes at ``cutoff``; the
    force is ``-dU/dr`` inside the cutoff (positive means repulsive) and zero
    beyond it.
    """
    if not r > 0:
        raise ValidationError(f"pair distance must be positive, got {r}", field="r")
    if r >= cutoff:
        return 0.0, 0.0
    inv6 = r ** -6
    u = 4.0 * (inv6 * inv6 - inv6)
    if np.isfinite(cutoff):
        u -= float(lj_potential(cutoff))
    f = 24.0 * (2.0 * inv6 * inv6 - inv6) / r
    return u, f


def fcc_init(cells_per_side: int, box_length: float) -> np.ndarray:
    """FCC lattice of ``4 * cells**3`` sites filling a cubic box."""
    if cells_per_side < 1:
        raise ValidationError("cells_per_side must be >= 1", field="cells_per_side")
    a = box_length / cells_per_side
    basis = np.array([[0.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]])
    grid = np.arange(cells_per_side)
    origins = np.stack(np.meshgrid(grid, grid, grid, indexing="ij"), axis=-1).reshape(-1, 3)
    return ((origins[:, None, :] + basis[None, :, :]) * a).reshape(-1, 3)


def fcc_cells_for(n_particles: int) -> int:
    """Cells per side for an FCC box of ``n_particles``; raises if not ``4 c**3``."""
    c = round((n_particles / 4) ** (1 / 3))
    if c < 1 or 4 * c ** 3 != n_particles:
        raise ValidationError(f"n_particles={n_particles} is not 4*c**3 for integer c", field="n_particles")
    return c


def minimum_image(d: np.ndarray, box: float) -> np.ndarray:
    return d - box * np.rint(d / box)


def compute_forces(positions, box: float, cutoff: float, method: str = "cell"):
    """Return ``(forces, potential_energy)`` for the shifted-truncated LJ system.

    ``method`` is ``"cell"`` (linked cells, falls back to all pairs when the
    box holds fewer than three cells per side), ``"allpairs"``, or ``"auto"``,
    which uses cells only from four cells per side, where they start to pay off.
    ``"none"`` returns zero forces and energy.
    """
    pos = np.ascontiguousarray(np.mod(positions, box), dtype=np.float64)
    forces = np.zeros_like(pos)
    if method == "none":
        return forces, 0.0
    if method == "auto":
        method = "cell" if box / cutoff >= 4 else "allpairs"
    if method == "cell":
        u, min_r2 = kernels.lj_forces_cells(pos, box, cutoff, forces)
    elif method == "allpairs":
        u, min_r2 = kernels.lj_forces_allpairs(pos, box, cutoff, forces)
    else:
        raise ValidationError(f"unknown force method {method!r}", field="force_method")
    if min_r2 < OVERLAP_DISTANCE ** 2:
        raise OverlapError(f"pair overlap: two particles within {np.sqrt(min_r2):.3g}")
    return forces, float(u)


def total_potential(positions, box: float, cutoff: float) -> float:
    """Brute-force O(n^2) potential energy, independent of the force kernels."""
    pos = np.asarray(positions, dtype=np.float64)
    i, j = np.triu_indices(len(pos), k=1)
    r = np.linalg.norm(minimum_image(pos[i] - pos[j], box), axis=1)
    r = r[r < cutoff]
    return float(np.sum(lj_potential(r) - lj_potential(cutoff)))
