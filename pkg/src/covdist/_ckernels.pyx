# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: Lennard-Jones forces and segment lag-correlation sums.

Signatures mirror ``_pykernels``; both return identical results up to
floating-point summation order.
"""

import numpy as np

from libc.math cimport floor

cdef double OVERLAP_R2 = 1e-12


cdef inline double _wrap(double d, double box, double half) noexcept nogil:
    # minimum image for coordinates already wrapped into [0, box)
    if d > half:
        return d - box
    if d < -half:
        return d + box
    return d


cdef inline double _lj(double r2, double rc2, double ushift, double* fscal) noexcept nogil:
    # fscal receives -dU/dr / r, so that F_i = fscal * (r_i - r_j)
    cdef double inv2 = 1.0 / r2
    cdef double inv6 = inv2 * inv2 * inv2
    cdef double inv12 = inv6 * inv6
    fscal[0] = 24.0 * inv2 * (2.0 * inv12 - inv6)
    return 4.0 * (inv12 - inv6) - ushift


def lj_forces_allpairs(const double[:, ::1] pos, double box, double rc, double[:, ::1] forces):
    """Fill ``forces`` in place; return ``(potential, min_r2)``."""
    cdef Py_ssize_t n = pos.shape[0], i, j
    cdef double rc2 = rc * rc, ushift, dx, dy, dz, r2, fs, u = 0.0, min_r2 = 1e300
    cdef double half = 0.5 * box
    cdef double inv6c = 1.0 / (rc2 * rc2 * rc2)
    ushift = 4.0 * (inv6c * inv6c - inv6c)
    forces[:, :] = 0.0
    with nogil:
        for i in range(n - 1):
            for j in range(i + 1, n):
                dx = pos[i, 0] - pos[j, 0]
                dy = pos[i, 1] - pos[j, 1]
                dz = pos[i, 2] - pos[j, 2]
                dx = _wrap(dx, box, half)
                dy = _wrap(dy, box, half)
                dz = _wrap(dz, box, half)
                r2 = dx * dx + dy * dy + dz * dz
                if r2 < min_r2:
                    min_r2 = r2
                if r2 < rc2 and r2 > OVERLAP_R2:
                    u += _lj(r2, rc2, ushift, &fs)
                    forces[i, 0] += fs * dx
                    forces[i, 1] += fs * dy
                    forces[i, 2] += fs * dz
                    forces[j, 0] -= fs * dx
                    forces[j, 1] -= fs * dy
                    forces[j, 2] -= fs * dz
    return u, min_r2


def lj_forces_cells(const double[:, ::1] pos, double box, double rc, double[:, ::1] forces):
    """Linked-cell variant; needs at least three cells per side."""
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t nc = <Py_ssize_t> floor(box / rc)
    if nc < 3:
        return lj_forces_allpairs(pos, box, rc, forces)
    cdef Py_ssize_t ncell = nc * nc * nc
    cdef Py_ssize_t[::1] head = np.full(ncell, -1, dtype=np.intp)
    cdef Py_ssize_t[::1] nxt = np.full(n, -1, dtype=np.intp)
    cdef double side = box / nc
    cdef double rc2 = rc * rc, dx, dy, dz, r2, fs, u = 0.0, min_r2 = 1e300
    cdef double half = 0.5 * box
    cdef double inv6c = 1.0 / (rc2 * rc2 * rc2)
    cdef double ushift = 4.0 * (inv6c * inv6c - inv6c)
    cdef Py_ssize_t i, j, c, c2, cx, cy, cz, ox, oy, oz, ix, iy, iz
    forces[:, :] = 0.0
    with nogil:
        for i in range(n):
            ix = (<Py_ssize_t> floor(pos[i, 0] / side)) % nc
            iy = (<Py_ssize_t> floor(pos[i, 1] / side)) % nc
            iz = (<Py_ssize_t> floor(pos[i, 2] / side)) % nc
            if ix < 0:
                ix += nc
            if iy < 0:
                iy += nc
            if iz < 0:
                iz += nc
            c = (ix * nc + iy) * nc + iz
            nxt[i] = head[c]
            head[c] = i
        for cx in range(nc):
            for cy in range(nc):
                for cz in range(nc):
                    c = (cx * nc + cy) * nc + cz
                    for ox in range(-1, 2):
                        for oy in range(-1, 2):
                            for oz in range(-1, 2):
                                c2 = (((cx + ox + nc) % nc) * nc + (cy + oy + nc) % nc) * nc + (cz + oz + nc) % nc
                                i = head[c]
                                while i >= 0:
                                    j = head[c2]
                                    while j >= 0:
                                        if j > i:
                                            dx = pos[i, 0] - pos[j, 0]
                                            dy = pos[i, 1] - pos[j, 1]
                                            dz = pos[i, 2] - pos[j, 2]
                                            dx = _wrap(dx, box, half)
                                            dy = _wrap(dy, box, half)
                                            dz = _wrap(dz, box, half)
                                            r2 = dx * dx + dy * dy + dz * dz
                                            if r2 < min_r2:
                                                min_r2 = r2
                                            if r2 < rc2 and r2 > OVERLAP_R2:
                                                u += _lj(r2, rc2, ushift, &fs)
                                                forces[i, 0] += fs * dx
                                                forces[i, 1] += fs * dy
                                                forces[i, 2] += fs * dz
                                                forces[j, 0] -= fs * dx
                                                forces[j, 1] -= fs * dy
                                                forces[j, 2] -= fs * dz
                                        j = nxt[j]
                                    i = nxt[i]
    if min_r2 == 1e300:
        # no pair shares a neighbourhood, so nothing is near overlap
        min_r2 = rc2
    return u, min_r2


def mean_lag_tables(const double[:, :, ::1] traj, Py_ssize_t N, bint unbiased=False):
    """Per-particle lag tables averaged over the K = L // N disjoint segments.

    ``traj`` has shape (L, P, 3); returns an array of shape (P, 3, 3, N).
    """
    cdef Py_ssize_t L = traj.shape[0], P = traj.shape[1]
    cdef Py_ssize_t K = L // N, m, p, a, b, k, l, t0
    out_np = np.zeros((P, 3, 3, N))
    cdef double[:, :, :, ::1] out = out_np
    cdef double s
    with nogil:
        for p in range(P):
            for m in range(K):
                t0 = m * N
                for a in range(3):
                    for b in range(3):
                        for k in range(N):
                            s = 0.0
                            for l in range(N - k):
                                s = s + traj[t0 + l, p, a] * traj[t0 + l + k, p, b]
                            out[p, a, b, k] += s
            for a in range(3):
                for b in range(3):
                    for k in range(N):
                        if unbiased:
                            out[p, a, b, k] /= K * (N - k)
                        else:
                            out[p, a, b, k] /= K * N
    return out_np
