"""Simultaneous solution of the fixed-point equations f^n(z) = z.

F(z) = f^n(z) - z is a polynomial of known degree, but its expanded
coefficients overflow double precision already around n = 11 for quadratic
maps, so F and F' are evaluated by composition (forward iteration plus the
chain rule).  Aberth-Ehrlich only needs F/F' at the current points and the
root count, which makes the composition route exact enough.
"""

from __future__ import annotations

import numpy as np

from .errors import NonConvergenceError
from .maps import RationalMapSpec, _horner

_BIG = 1e150  # orbit magnitude beyond which the evaluation is abandoned


def fn_shift(map_spec: RationalMapSpec, z: np.ndarray, n: int):
    """(F, dF, bad) with F = f^n(z) - z, dF = (f^n)'(z) - 1, vectorized.

    bad marks points whose orbit left the numeric range (escape toward
    infinity or a pole); their F/dF entries are unusable.
    """
    w = np.array(z, dtype=complex)
    deriv = np.ones_like(w)
    bad = np.zeros(w.shape, dtype=bool)
    num, den = map_spec.numerator, map_spec.denominator
    dnum = map_spec._dnum
    dden = map_spec._dden
    for _ in range(n):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            qv = _horner(den, w)
            pv = _horner(num, w)
            dpv = _horner(dnum, w)
            dqv = _horner(dden, w)
            fp = (dpv * qv - pv * dqv) / (qv * qv)
            w = pv / qv
            deriv = deriv * fp
        bad |= ~np.isfinite(w.real) | ~np.isfinite(w.imag)
        bad |= np.abs(w) > _BIG
        w = np.where(bad, 0.0, w)
        deriv = np.where(bad, 1.0, deriv)
    return w - z, deriv - 1.0, bad


def newton_polish(
    map_spec: RationalMapSpec,
    z: np.ndarray,
    n: int,
    iters: int = 8,
    tol: float = 1e-14,
) -> np.ndarray:
    """Newton iteration on f^n(z) - z from already-close starting points."""
    z = np.array(z, dtype=complex)
    for _ in range(iters):
        f_val, df_val, bad = fn_shift(map_spec, z, n)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f_val / df_val
        step = np.where(bad | ~np.isfinite(step), 0.0, step)
        z = z - step
        if np.max(np.abs(step)) < tol * (1.0 + np.max(np.abs(z))):
            break
    return z


def residuals(map_spec: RationalMapSpec, z: np.ndarray, n: int) -> np.ndarray:
    f_val, _, bad = fn_shift(map_spec, z, n)
    out = np.abs(f_val)
    out[bad] = np.inf
    return out


def _repulsion(z_all: np.ndarray, rows: np.ndarray, chunk: int = 256) -> np.ndarray:
    """S_i = sum_j 1/(z_i - z_j) over all j != i, for the selected rows."""
    out = np.empty(rows.size, dtype=complex)
    for start in range(0, rows.size, chunk):
        sel = rows[start:start + chunk]
        diff = z_all[sel][:, None] - z_all[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / diff
        inv[~np.isfinite(inv)] = 0.0  # kills the self term
        out[start:start + chunk] = inv.sum(axis=1)
    return out


def aberth_fixed_points(
    map_spec: RationalMapSpec,
    n: int,
    count: int,
    radius: float,
    center: complex = 0j,
    max_iter: int = 400,
    tol: float = 5e-14,
) -> np.ndarray:
    """All `count` roots of f^n(z) = z by Aberth-Ehrlich from a circle.

    Points whose forward evaluation overflows are pulled back toward the
    center deterministically; convergence is per-point on the Newton
    correction, and converged points are frozen (they keep repelling the
    active ones).
    """
    # the first sweep must evaluate f^n in range, or every point starts bad
    radius = min(radius, np.exp(60.0 / count))
    k = np.arange(count)
    angles = 2.0 * np.pi * (k + 0.5) / count + 0.3779644730092272 / max(count, 8)
    z = center + radius * np.exp(1j * angles)
    active = np.ones(count, dtype=bool)

    for _ in range(max_iter):
        rows = np.nonzero(active)[0]
        if rows.size == 0:
            break
        f_val, df_val, bad = fn_shift(map_spec, z[rows], n)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = f_val / df_val
        tiny = np.abs(df_val) < 1e-300
        newton = np.where(tiny | ~np.isfinite(newton), 1e-6, newton)
        s = _repulsion(z, rows)
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = newton / (1.0 - newton * s)
        corr = np.where(np.isfinite(corr), corr, newton)
        # runaway points: shrink toward the center a little, keeping the angle
        corr = np.where(bad, 0.03 * (z[rows] - center), corr)
        z[rows] = z[rows] - corr
        # freeze only where the raw Newton step is small too; a tiny Aberth
        # correction alone can come from crowding, not from being at a root
        done = (
            (np.abs(corr) <= tol * (1.0 + np.abs(z[rows])))
            & (np.abs(newton) <= 1e3 * tol * (1.0 + np.abs(z[rows])))
            & ~bad
        )
        active[rows[done]] = False
    else:
        leftover = int(active.sum())
        if leftover > 0:
            raise NonConvergenceError(
                f"Aberth left {leftover}/{count} points unconverged at n = {n}"
            )
    return newton_polish(map_spec, z, n)
