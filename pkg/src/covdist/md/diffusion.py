"""Self-diffusion coefficients from the Einstein (MSD) and Green-Kubo (VACF) relations."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from ..errors import ValidationError


class DiffusionWarning(UserWarning):
    """The data do not support a reliable diffusion estimate."""


@dataclass(frozen=True)
class DiffusionResult:
    coefficient: float
    method: str
    reliable: bool
    r_squared: float | None = None
    exponent: float | None = None
    t_cut: float | None = None


def _autocorr(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Sum over particles/components of sum_t x(t) x(t+m), for m < max_lag; x is (F, ...)."""
    F = x.shape[0]
    flat = x.reshape(F, -1)
    n = 1 << int(np.ceil(np.log2(2 * F)))
    out = np.zeros(max_lag)
    step = max(1, (1 << 24) // n)  # bound the spectrum buffer to ~256 MB
    for c0 in range(0, flat.shape[1], step):
        fx = np.fft.rfft(flat[:, c0:c0 + step], n=n, axis=0)
        out += np.fft.irfft(fx * fx.conj(), n=n, axis=0)[:max_lag].sum(axis=1)
    return out


def msd_curve(unwrapped) -> np.ndarray:
    """Mean squared displacement at every lag, averaged over particles and time origins.

    Uses the FFT decomposition MSD(m) = S1(m) - 2 S2(m); ``unwrapped`` has
    shape (F, P, 3).
    """
    r = np.asarray(unwrapped, dtype=np.float64)
    F, P = r.shape[:2]
    sq = np.einsum("fpk,fpk->f", r, r)
    s2 = _autocorr(r, F)
    out = np.empty(F)
    total = 2.0 * sq.sum()
    for m in range(F):
        if m:
            total -= sq[m - 1] + sq[F - m]
        out[m] = (total - 2.0 * s2[m]) / (F - m)
    # the difference of large sums leaves roundoff where nothing moved
    out[out < 1e-12 * sq.mean()] = 0.0
    return out / P


def vacf_curve(velocities, max_lag: int | None = None) -> np.ndarray:
    """<v(0) . v(t)>, averaged over particles and time origins, for lags 0..max_lag-1."""
    v = np.asarray(velocities, dtype=np.float64)
    F, P = v.shape[:2]
    max_lag = F if max_lag is None else min(max_lag, F)
    return _autocorr(v, max_lag) / (P * (F - np.arange(max_lag)))


def diffusion_msd(positions_unwrapped, dt: float, window=(0.25, 0.5),
                  max_lag: int | None = None) -> DiffusionResult:
    """Einstein estimate: slope of MSD over ``window`` (fractions of t_max) divided by 6.

    The MSD curve runs over lags ``0 .. max_lag - 1`` (default: half the
    trajectory, as for the VACF, since longer lags have few time origins) and
    t_max is its last lag. Warns with :class:`DiffusionWarning` when the fit is poor (R^2 < 0.9) or
    the log-log growth exponent exceeds 1.3, i.e. the motion is not yet
    diffusive over the fit window.
    """
    r = np.asarray(positions_unwrapped, dtype=np.float64)
    if r.ndim != 3 or r.shape[0] < 2:
        raise ValidationError("too few frames for an MSD estimate (need at least 2)")
    F = r.shape[0]
    max_lag = max(2, F // 2 + 1) if max_lag is None else min(max_lag, F)
    t = np.arange(max_lag) * dt
    lo, hi = window[0] * t[-1], window[1] * t[-1]
    sel = (t >= lo) & (t <= hi)
    if sel.sum() < 2:
        raise ValidationError(f"too few frames ({F}) to place two points in the MSD fit window")
    msd = msd_curve(r)[:max_lag]
    x, y = t[sel], msd[sel]
    slope, intercept = np.polyfit(x, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    exponent = None
    if np.all(y > 0):
        exponent = float(np.polyfit(np.log(x), np.log(y), 1)[0])
    reliable = r2 >= 0.9 and (exponent is None or exponent <= 1.3)
    if not reliable:
        warnings.warn(f"MSD is not diffusive over the fit window (R^2={r2:.3f}, exponent={exponent})",
                      DiffusionWarning, stacklevel=2)
    return DiffusionResult(float(slope) / 6.0, "msd", reliable, r2, exponent)


def diffusion_vacf(velocities, dt: float, threshold: float = 0.01,
                   max_lag: int | None = None) -> DiffusionResult:
    """Green-Kubo estimate ``(1/3) * integral of <v(0).v(t)>`` by the trapezoidal rule.

    The integral runs to ``t_cut``, the first lag from which |VACF| stays below
    ``threshold`` times its zero-lag value for the rest of the computed window
    (``max_lag`` frames, default half the trajectory). If the VACF never
    decays the full window is used and a :class:`DiffusionWarning` is issued.
    """
    v = np.asarray(velocities, dtype=np.float64)
    if v.ndim != 3 or v.shape[0] < 2:
        raise ValidationError("too few frames for a VACF estimate (need at least 2)")
    F = v.shape[0]
    max_lag = max(2, F // 2) if max_lag is None else max_lag
    c = vacf_curve(v, max_lag)
    c0 = c[0]
    if c0 <= 0:
        return DiffusionResult(0.0, "vacf", True, t_cut=0.0)
    above = np.flatnonzero(np.abs(c) >= threshold * c0)
    cut = above[-1] + 1
    reliable = cut < len(c)
    if not reliable:
        warnings.warn("VACF does not decay within the window; diffusion estimate diverges",
                      DiffusionWarning, stacklevel=2)
        cut = len(c) - 1
    integral = float(trapezoid(c[: cut + 1], dx=dt))
    return DiffusionResult(integral / 3.0, "vacf", reliable, t_cut=cut * dt)
