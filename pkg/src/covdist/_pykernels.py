"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``."""

import numpy as np

_OVERLAP_R2 = 1e-12
_CHUNK = 256


def _shift(rc2):
    inv6 = 1.0 / (rc2 * rc2 * rc2)
    return 4.0 * (inv6 * inv6 - inv6)


def _pair_terms(d, rc2, ushift):
    """Potential and force contributions for displacement vectors ``d`` (..., 3)."""
    r2 = np.einsum("...k,...k->...", d, d)
    mask = (r2 < rc2) & (r2 > _OVERLAP_R2)
    inv2 = np.divide(1.0, r2, out=np.zeros_like(r2), where=mask)
    inv6 = inv2 ** 3
    u = np.where(mask, 4.0 * (inv6 * inv6 - inv6) - ushift, 0.0)
    fs = 24.0 * inv2 * (2.0 * inv6 * inv6 - inv6)
    return r2, u, fs[..., None] * d


def lj_forces_allpairs(pos, box, rc, forces):
    n = pos.shape[0]
    rc2 = rc * rc
    ushift = _shift(rc2)
    forces[:] = 0.0
    u = 0.0
    min_r2 = np.inf
    idx = np.arange(n)
    for start in range(0, n, _CHUNK):
        rows = slice(start, min(start + _CHUNK, n))
        d = pos[rows, None, :] - pos[None, :, :]
        d -= box * np.rint(d / box)
        r2, uij, fij = _pair_terms(d, rc2, ushift)
        upper = idx[None, :] > idx[rows, None]
        uij = np.where(upper, uij, 0.0)
        if np.any(upper):
            min_r2 = min(min_r2, float(r2[upper].min()))
        # each ordered pair contributes to particle i only; the potential is counted on i < j
        diag = idx[rows, None] == idx[None, :]
        fij[diag] = 0.0
        forces[rows] += fij.sum(axis=1)
        u += float(uij.sum())
    return u, (min_r2 if np.isfinite(min_r2) else rc2)


def lj_forces_cells(pos, box, rc, forces):
    """Linked-cell variant, vectorized per neighbouring cell pair."""
    nc = int(np.floor(box / rc))
    if nc < 3:
        return lj_forces_allpairs(pos, box, rc, forces)
    rc2 = rc * rc
    ushift = _shift(rc2)
    side = box / nc
    cell_xyz = np.floor(pos / side).astype(np.intp) % nc
    cell = (cell_xyz[:, 0] * nc + cell_xyz[:, 1]) * nc + cell_xyz[:, 2]
    order = np.argsort(cell, kind="stable")
    bounds = np.searchsorted(cell[order], np.arange(nc ** 3 + 1))
    members = [order[bounds[c]:bounds[c + 1]] for c in range(nc ** 3)]
    forces[:] = 0.0
    u = 0.0
    min_r2 = np.inf
    offsets = [(ox, oy, oz) for ox in (-1, 0, 1) for oy in (-1, 0, 1) for oz in (-1, 0, 1)]
    for cx in range(nc):
        for cy in range(nc):
            for cz in range(nc):
                mine = members[(cx * nc + cy) * nc + cz]
                if mine.size == 0:
                    continue
                neigh = np.concatenate([
                    members[(((cx + ox) % nc) * nc + (cy + oy) % nc) * nc + (cz + oz) % nc]
                    for ox, oy, oz in offsets])
                d = pos[mine, None, :] - pos[None, neigh, :]
                d -= box * np.rint(d / box)
                r2, uij, fij = _pair_terms(d, rc2, ushift)
                other = neigh[None, :] != mine[:, None]
                fij[~other] = 0.0
                forces[mine] += fij.sum(axis=1)
                upper = neigh[None, :] > mine[:, None]
                u += float(np.where(upper, uij, 0.0).sum())
                if np.any(upper):
                    min_r2 = min(min_r2, float(r2[upper].min()))
    return u, (min_r2 if np.isfinite(min_r2) else rc2)


def mean_lag_tables(traj, N, unbiased=False):
    L, P, _ = traj.shape
    K = L // N
    seg = np.asarray(traj[: K * N]).reshape(K, N, P, 3)
    out = np.empty((P, 3, 3, N))
    for k in range(N):
        prod = np.einsum("mlpa,mlpb->pab", seg[:, : N - k], seg[:, k:], optimize=True)
        out[:, :, :, k] = prod / (K * (N - k) if unbiased else K * N)
    return out
