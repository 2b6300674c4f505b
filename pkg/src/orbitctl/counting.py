"""Orbit counts in multiplier windows, their predicted values, and
multiplier-threshold counts against the logarithmic integral.

Counts at level n run over primitive orbits only.  An orbit enters the
window when its centered distortion u = r_n(x) - n*alpha lies in the closed
interval and its holonomy angle falls in the closed arc.  The local-limit
prediction for such a count is

    nu(arc) * J(I) * e^{n H} / (sigma * sqrt(2 pi) * n^(3/2)),

with J(I) the integral of e^{-xi u} over the interval, nu the arc fraction,
and (xi, sigma^2, H) the tilt, variance, and entropy at the chosen alpha.
J is evaluated by series when xi is tiny so the formula is smooth through
the maximal-entropy point xi = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, IncompleteCensusError, TruncationError
from .orbits import OrbitDatabase
from .thermo import ThermoProfile
from .windows import TWO_PI, SmoothedWindow, WindowSchedule


@dataclass(frozen=True)
class CountQuery:
    n: int
    alpha: float
    interval: tuple[float, float]       # closed, on the u = r_n - n*alpha axis
    arc_center: float = 0.0             # radians
    arc_width: float = 1.0              # fraction of the circle; >= 1 means all


def _level_orbit_data(db: OrbitDatabase, n: int):
    ent = db.entries.get(n)
    if ent is None or not ent.complete:
        raise IncompleteCensusError(f"period {n} not enumerated to completion")
    r = np.array([o.log_abs_multiplier for o in ent.orbits], dtype=float)
    th = np.array([o.holonomy_angle for o in ent.orbits], dtype=float)
    return r, th


def wrapped_fraction(theta, center: float = 0.0):
    """Angular offset from center as a fraction of the circle, in [-1/2, 1/2)."""
    frac = (np.asarray(theta, dtype=float) - center) / TWO_PI
    return np.mod(frac + 0.5, 1.0) - 0.5


def _arc_mask(theta: np.ndarray, center: float, width: float) -> np.ndarray:
    if width >= 1.0:
        return np.ones(theta.shape, dtype=bool)
    return np.abs(wrapped_fraction(theta, center)) <= width / 2.0


def count_orbits(db: OrbitDatabase, query: CountQuery) -> int:
    """Sharp count of primitive level-n orbits in interval x arc."""
    r, th = _level_orbit_data(db, query.n)
    u = r - query.n * query.alpha
    a, b = query.interval
    inside = (u >= a) & (u <= b) & _arc_mask(th, query.arc_center, query.arc_width)
    return int(inside.sum())


def exp_window_integral(a: float, b: float, xi: float) -> float:
    """Integral of e^{-xi u} over [a, b], stable through xi = 0.

    Below 1e-12 the window length is returned outright; up to 1e-6 a
    four-term series avoids the catastrophic cancellation in the closed
    form.
    """
    if b < a:
        raise ValueError("empty interval")
    if abs(xi) < 1e-12:
        return b - a
    if abs(xi) < 1e-6:
        total = 0.0
        for k in range(4):
            total += (-xi) ** k * (b ** (k + 1) - a ** (k + 1)) / math.factorial(k + 1)
        return total
    return (math.exp(-xi * a) - math.exp(-xi * b)) / xi


def predicted_count(profile: ThermoProfile, query: CountQuery) -> float:
    """Local-limit prediction for the sharp count of the same query."""
    a, b = query.interval
    j = exp_window_integral(a, b, profile.xi)
    nu = min(query.arc_width, 1.0)
    n = query.n
    sigma = math.sqrt(profile.sigma2)
    return nu * j * math.exp(n * profile.entropy) / (sigma * math.sqrt(2.0 * math.pi) * n**1.5)


def predicted_count_shrinking(
    profile: ThermoProfile,
    schedule: WindowSchedule,
    n: int,
    alpha: float,
) -> float:
    """Prediction for the schedule's level-n window.

    Uses the midpoint value length * e^{-xi * center} in place of the exact
    window integral; for a window of length l the two differ by a relative
    factor of at most xi^2 l^2 / 8 * e^{|xi| l / 2}, which vanishes as the
    schedule shrinks.
    """
    schedule.validate()
    a, b = schedule.interval_at(n)
    center, width = schedule.arc_at(n)
    p = 0.5 * (a + b)
    length = b - a
    nu = min(width, 1.0)
    sigma = math.sqrt(profile.sigma2)
    return (
        nu * length * math.exp(-profile.xi * p)
        * math.exp(n * profile.entropy)
        / (sigma * math.sqrt(2.0 * math.pi) * n**1.5)
    )


@dataclass(frozen=True)
class SmoothedCount:
    value: float              # sum of window products over primitive orbits
    fixed_point_value: float  # (1/n) * same sum over all level-n fixed points
    gap: float
    n: int
    sample_size: int


def smoothed_count(
    db: OrbitDatabase,
    n: int,
    alpha: float,
    interval_window: SmoothedWindow | None = None,
    arc_window: SmoothedWindow | None = None,
) -> SmoothedCount:
    """Window-weighted orbit sum next to its fixed-point-sum cousin.

    The fixed-point variant reconstructs every level-n point from the
    divisor censuses and divides by n; for expanding maps the two agree up
    to exponentially small divisor contributions.
    """
    from .thermo import level_terms

    r, th = _level_orbit_data(db, n)
    u = r - n * alpha

    def weight(uu, tt):
        w = np.ones(uu.shape, dtype=float)
        if interval_window is not None:
            w = w * interval_window(uu)
        if arc_window is not None:
            w = w * arc_window(tt)
        return w

    value = float(np.sum(weight(u, th)))
    r_all, th_all, w_all = level_terms(db, n)
    u_all = r_all - n * alpha
    fixed_value = float(np.sum(w_all * weight(u_all, th_all))) / n
    return SmoothedCount(
        value=value,
        fixed_point_value=fixed_value,
        gap=abs(value - fixed_value),
        n=n,
        sample_size=int(r.size),
    )


@dataclass(frozen=True)
class WeylReport:
    n: int
    k_values: tuple[int, ...]
    magnitudes: tuple[float, ...]
    sample_size: int
    empty: bool


def weyl_sums(
    db: OrbitDatabase,
    n: int,
    k_values,
    alpha: float | None = None,
    interval: tuple[float, float] | None = None,
) -> WeylReport:
    """Normalized holonomy character sums |sum e^{i k theta}| / N at level n.

    With alpha and interval given, only orbits whose centered deviation
    log|lambda| - n*alpha lands in the closed interval contribute.
    """
    r, th = _level_orbit_data(db, n)
    if interval is not None:
        if alpha is None:
            raise ValueError("an interval filter needs alpha")
        a, b = interval
        u = r - n * alpha
        th = th[(u >= a) & (u <= b)]
    ks = tuple(int(k) for k in k_values)
    if th.size == 0:
        return WeylReport(n=n, k_values=ks, magnitudes=(), sample_size=0, empty=True)
    mags = tuple(float(np.abs(np.exp(1j * k * th).mean())) for k in ks)
    return WeylReport(n=n, k_values=ks, magnitudes=mags, sample_size=int(th.size), empty=False)


def logarithmic_integral(x: float) -> float:
    """Li(x) = integral from 2 to x of du / log u; defined for x >= 2."""
    if x < 2.0:
        raise DomainError(f"Li is defined from 2 upward, got {x:.6g}")
    if x == 2.0:
        return 0.0
    val, _ = quad(lambda u: 1.0 / math.log(u), 2.0, x, limit=200)
    return float(val)


@dataclass(frozen=True)
class MultiplierCount:
    threshold: float
    count: int
    max_period: int
    truncated: bool


def ow_count(db: OrbitDatabase, t: float, allow_truncated: bool = False) -> MultiplierCount:
    """Primitive repelling orbits with multiplier modulus strictly below t.

    The census only reaches some maximal period M.  The count is provably
    complete when every period-M orbit already has modulus above t (longer
    orbits expand more); otherwise mass may hide beyond M and the call
    refuses unless allow_truncated is set.
    """
    if t <= 0:
        raise DomainError("threshold must be positive")
    log_t = math.log(t)
    m_max = db.max_complete_period()
    if m_max == 0:
        raise IncompleteCensusError("census is empty")
    count = 0
    for m in range(1, m_max + 1):
        for orb in db.entries[m].orbits:
            if orb.log_abs_multiplier < log_t:
                count += 1
    tail_min = min(
        (o.log_abs_multiplier for o in db.entries[m_max].orbits), default=math.inf
    )
    truncated = tail_min <= log_t
    if truncated and not allow_truncated:
        raise TruncationError(
            f"orbits beyond period {m_max} may still have modulus <= {t:.6g} "
            f"(weakest period-{m_max} orbit has log modulus {tail_min:.4g} <= "
            f"log t = {log_t:.4g}); pass allow_truncated=True to count anyway"
        )
    return MultiplierCount(threshold=t, count=count, max_period=m_max, truncated=truncated)


@dataclass(frozen=True)
class LiRow:
    threshold: float
    count: int
    li_value: float
    ratio: float | None
    truncated: bool


@dataclass(frozen=True)
class LiReport:
    rows: tuple[LiRow, ...]
    delta: float
    trend_ok: bool


def li_table(
    db: OrbitDatabase,
    thresholds,
    delta: float,
    allow_truncated: bool = False,
) -> LiReport:
    """Counts against Li(t^delta) across thresholds, with a trend flag.

    trend_ok records whether |ratio - 1| is non-increasing over the top
    half of the usable rows, a crude monotonicity check on convergence.
    """
    rows = []
    for t in sorted(float(t) for t in thresholds):
        mc = ow_count(db, t, allow_truncated=allow_truncated)
        x = t**delta
        li = logarithmic_integral(x) if x >= 2.0 else 0.0
        ratio = mc.count / li if li > 0 else None
        rows.append(
            LiRow(
                threshold=t, count=mc.count, li_value=li, ratio=ratio,
                truncated=mc.truncated,
            )
        )
    usable = [abs(r.ratio - 1.0) for r in rows if r.ratio is not None]
    top = usable[len(usable) // 2 :]
    trend_ok = all(b <= a + 1e-12 for a, b in zip(top, top[1:])) if len(top) >= 2 else True
    return LiReport(rows=tuple(rows), delta=delta, trend_ok=trend_ok)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    count: int
    prediction: float
    ratio: float | None


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple[ConvergenceRow, ...]
    trend_ok: bool


def convergence_report(
    db: OrbitDatabase,
    profile: ThermoProfile,
    query_template: CountQuery,
    n_range,
) -> ConvergenceReport:
    """Sharp count next to its prediction over a level range.

    The template's window travels unchanged across levels; only n moves.
    Rows with prediction 0 carry ratio None and stay out of the trend
    check.  trend_ok reports whether |ratio - 1| is non-increasing over
    the top half of the range; it is an indicator, not a guarantee.
    """
    rows = []
    for n in n_range:
        q = replace(query_template, n=int(n))
        count = count_orbits(db, q)
        pred = predicted_count(profile, q)
        ratio = count / pred if pred > 0 else None
        rows.append(ConvergenceRow(n=int(n), count=count, prediction=pred, ratio=ratio))
    gaps = [abs(r.ratio - 1.0) for r in rows if r.ratio is not None]
    top = gaps[len(gaps) // 2 :]
    trend_ok = all(b <= a + 1e-12 for a, b in zip(top, top[1:])) if len(top) >= 2 else True
    return ConvergenceReport(rows=tuple(rows), trend_ok=trend_ok)
