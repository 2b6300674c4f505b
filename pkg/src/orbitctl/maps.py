"""Rational maps on the complex plane and their orbit-wise log data.

A map f = P/Q is stored as two ascending complex coefficient lists.  The
quantities everything downstream consumes are the distortion r(z) = log|f'(z)|
and the rotation theta(z) = arg f'(z), together with their Birkhoff sums along
orbits.  Angles returned to callers live in [0, 2*pi); per-step summands use
the principal value in (-pi, pi], and only values mod 2*pi are contractual.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    CriticalPointError,
    MathDomainError,
    NotPeriodicError,
    PoleError,
    SuperattractingError,
)

TWO_PI = 2.0 * math.pi

# floors below which a denominator / derivative counts as zero
POLE_FLOOR = 1e-12
DERIV_FLOOR = 1e-12

# minimal log-multiplier rate demanded before expansion evidence is reported;
# maps closer to a parabolic transition than this are left inconclusive
RATE_FLOOR = 0.05


def _trimmed(coeffs) -> tuple[complex, ...]:
    out = [complex(c) for c in coeffs]
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


def _horner(coeffs: tuple[complex, ...], z):
    """Evaluate an ascending-coefficient polynomial at z (scalar or array)."""
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _derivative_coeffs(coeffs: tuple[complex, ...]) -> tuple[complex, ...]:
    if len(coeffs) == 1:
        return (0j,)
    return tuple(k * coeffs[k] for k in range(1, len(coeffs)))


def _wrap_half_open(theta: float) -> float:
    """Reduce an angle to [0, 2*pi)."""
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    return 0.0 if t == TWO_PI else t


@dataclass(frozen=True)
class RationalMapSpec:
    """A rational map f = P/Q, coefficients ascending, deg f >= 2.

    The denominator defaults to the constant 1 (polynomial case).  Leading
    coefficients must be nonzero and P, Q must not share a root; both are
    checked at construction.
    """

    numerator: tuple[complex, ...]
    denominator: tuple[complex, ...] = (1 + 0j,)

    def __post_init__(self):
        num = _trimmed(self.numerator)
        den = _trimmed(self.denominator)
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)
        if num == (0j,):
            raise ValueError("numerator is identically zero")
        if den == (0j,):
            raise ValueError("denominator is identically zero")
        if self.degree < 2:
            raise ValueError(f"degree {self.degree} < 2; need an honest rational map")
        if len(den) > 1:
            proots = np.roots(np.asarray(num[::-1], dtype=complex))
            qroots = np.roots(np.asarray(den[::-1], dtype=complex))
            if len(proots) and len(qroots):
                gap = np.abs(proots[:, None] - qroots[None, :]).min()
                if gap < 1e-9:
                    raise ValueError("numerator and denominator share a root")

    @property
    def degree(self) -> int:
        return max(len(self.numerator), len(self.denominator)) - 1

    @property
    def is_polynomial(self) -> bool:
        return len(self.denominator) == 1

    @cached_property
    def _dnum(self) -> tuple[complex, ...]:
        return _derivative_coeffs(self.numerator)

    @cached_property
    def _dden(self) -> tuple[complex, ...]:
        return _derivative_coeffs(self.denominator)

    @cached_property
    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "numerator": [[c.real, c.imag] for c in self.numerator],
            "denominator": [[c.real, c.imag] for c in self.denominator],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RationalMapSpec":
        num = [complex(re, im) for re, im in data["numerator"]]
        den_raw = data.get("denominator")
        den = [complex(re, im) for re, im in den_raw] if den_raw else [1.0]
        return cls(tuple(num), tuple(den))

    def __call__(self, z):
        return evaluate(self, z)


def load_map(path) -> RationalMapSpec:
    """Read a map from a JSON file with 'numerator'/'denominator' keys."""
    with open(path) as fh:
        data = json.load(fh)
    return RationalMapSpec.from_dict(data)


# ---- pointwise evaluation ----------------------------------------------

def evaluate(map_spec: RationalMapSpec, z: complex) -> complex:
    """f(z) by Horner on both polynomials."""
    qv = _horner(map_spec.denominator, z)
    if abs(qv) < POLE_FLOOR:
        raise PoleError(f"|Q(z)| = {abs(qv):.3e} at z = {z}")
    return complex(_horner(map_spec.numerator, z)) / complex(qv)


def derivative(map_spec: RationalMapSpec, z: complex) -> complex:
    """f'(z) = (P'Q - PQ')/Q^2."""
    qv = _horner(map_spec.denominator, z)
    if abs(qv) < POLE_FLOOR:
        raise PoleError(f"|Q(z)| = {abs(qv):.3e} at z = {z}")
    pv = _horner(map_spec.numerator, z)
    dpv = _horner(map_spec._dnum, z)
    dqv = _horner(map_spec._dden, z)
    return complex(dpv * qv - pv * dqv) / complex(qv * qv)


def map_values(map_spec: RationalMapSpec, z: np.ndarray) -> np.ndarray:
    """Vectorized f(z); poles become nan rather than raising."""
    z = np.asarray(z, dtype=complex)
    qv = _horner(map_spec.denominator, z)
    pv = _horner(map_spec.numerator, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = pv / qv
    return np.where(np.abs(qv) < POLE_FLOOR, np.nan + 0j, out)


def derivative_values(map_spec: RationalMapSpec, z: np.ndarray) -> np.ndarray:
    """Vectorized f'(z); poles become nan rather than raising."""
    z = np.asarray(z, dtype=complex)
    qv = _horner(map_spec.denominator, z)
    pv = _horner(map_spec.numerator, z)
    dpv = _horner(map_spec._dnum, z)
    dqv = _horner(map_spec._dden, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (dpv * qv - pv * dqv) / (qv * qv)
    return np.where(np.abs(qv) < POLE_FLOOR, np.nan + 0j, out)


def distortion_rotation(map_spec: RationalMapSpec, z: complex) -> tuple[float, float]:
    """(r, theta) = (log|f'(z)|, arg f'(z)) with theta in [0, 2*pi)."""
    fp = derivative(map_spec, z)
    mag = abs(fp)
    if mag < DERIV_FLOOR:
        raise CriticalPointError(f"|f'(z)| = {mag:.3e} at z = {z}")
    return math.log(mag), _wrap_half_open(math.atan2(fp.imag, fp.real))


def birkhoff_sums(map_spec: RationalMapSpec, z: complex, n: int) -> tuple[float, float]:
    """(r^n(z), theta^n(z)): sums of log|f'| and arg f' along z, f(z), ...

    The rotation sum is lifted with the principal value (-pi, pi] at each
    step, so the return is a particular real lift; only its value mod 2*pi
    is meaningful to callers.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    w = complex(z)
    r_total = 0.0
    t_total = 0.0
    for j in range(n):
        try:
            fp = derivative(map_spec, w)
        except PoleError as exc:
            raise PoleError(f"orbit index {j}: {exc}") from None
        mag = abs(fp)
        if mag < DERIV_FLOOR:
            raise CriticalPointError(f"orbit index {j}: |f'| = {mag:.3e} at z = {w}")
        r_total += math.log(mag)
        t_total += math.atan2(fp.imag, fp.real)
        w = evaluate(map_spec, w)
    return r_total, t_total


def cycle_multiplier(
    map_spec: RationalMapSpec,
    z: complex,
    n: int,
    closure_tol: float = 1e-6,
) -> tuple[float, float]:
    """(log|multiplier|, holonomy angle in [0, 2*pi)) of a period-n point.

    Raises NotPeriodicError when f^n(z) does not return to z within
    closure_tol, and SuperattractingError when the cycle runs through a
    critical point.  The log data is cross-checked against the direct
    chain-rule product of f' along the orbit.
    """
    w = complex(z)
    r_total = 0.0
    t_total = 0.0
    prod = 1.0 + 0j
    for j in range(n):
        fp = derivative(map_spec, w)
        mag = abs(fp)
        if mag < DERIV_FLOOR:
            raise SuperattractingError(
                f"orbit index {j}: |f'| = {mag:.3e}; multiplier vanishes"
            )
        r_total += math.log(mag)
        t_total += math.atan2(fp.imag, fp.real)
        prod *= fp
        w = evaluate(map_spec, w)
    if abs(w - z) > closure_tol * (1.0 + abs(z)):
        raise NotPeriodicError(f"|f^{n}(z) - z| = {abs(w - z):.3e} at z = {z}")
    recon = math.exp(r_total) * complex(math.cos(t_total), math.sin(t_total))
    if abs(recon - prod) > 1e-9 * abs(prod):
        raise MathDomainError(
            f"multiplier reconstruction drifted: |delta| = {abs(recon - prod):.3e}"
        )
    return r_total, _wrap_half_open(t_total)


# ---- hyperbolicity probe -------------------------------------------------

def critical_points(map_spec: RationalMapSpec) -> np.ndarray:
    """Finite critical points: roots of P'Q - PQ' (deduplicated)."""
    num = np.asarray(map_spec.numerator, dtype=complex)
    den = np.asarray(map_spec.denominator, dtype=complex)
    dnum = np.asarray(map_spec._dnum, dtype=complex)
    dden = np.asarray(map_spec._dden, dtype=complex)
    top = np.polysub(
        np.polymul(dnum[::-1], den[::-1]), np.polymul(num[::-1], dden[::-1])
    )
    top = np.trim_zeros(top, "f")
    if top.size <= 1:
        return np.empty(0, dtype=complex)
    roots = np.roots(top)
    keep: list[complex] = []
    for r in roots:
        if not any(abs(r - k) < 1e-9 for k in keep):
            keep.append(complex(r))
    return np.asarray(keep, dtype=complex)


def escape_radius(map_spec: RationalMapSpec) -> float | None:
    """Radius beyond which a polynomial orbit escapes; None for rational maps."""
    if not map_spec.is_polynomial:
        return None
    num = map_spec.numerator
    lead = abs(num[-1])
    tail = sum(abs(c) for c in num[:-1])
    return max(2.0, (2.0 + tail) / lead)


@dataclass(frozen=True)
class CriticalOrbitStatus:
    point: complex
    status: str  # attracting-cycle | escapes | neutral-cycle | repelling-cycle | undecided
    period: int | None = None
    multiplier_abs: float | None = None


@dataclass(frozen=True)
class HyperbolicityReport:
    """Numerical evidence for orbit-wise expansion; never a proof."""

    verdict: str  # hyperbolic-evidence | inconclusive | fails
    expansion_base: float | None  # fitted gamma-hat
    expansion_const: float | None  # fitted c-hat
    min_log_multiplier_rate: float | None
    critical_orbit_summary: tuple[CriticalOrbitStatus, ...]


def _critical_orbit_status(
    map_spec: RationalMapSpec,
    z0: complex,
    max_iter: int,
    esc_radius: float | None,
) -> CriticalOrbitStatus:
    orbit = [complex(z0)]
    w = complex(z0)
    for _ in range(max_iter):
        try:
            w = evaluate(map_spec, w)
        except PoleError:
            return CriticalOrbitStatus(z0, "undecided")
        if not (math.isfinite(w.real) and math.isfinite(w.imag)):
            return CriticalOrbitStatus(z0, "undecided")
        if esc_radius is not None and abs(w) > esc_radius:
            return CriticalOrbitStatus(z0, "escapes")
        orbit.append(w)

    # scan the tail for a near-return and refine the candidate cycle
    p_max = min(64, max_iter // 4)
    tail = orbit[-(p_max + 1):]
    period = None
    for p in range(1, len(tail)):
        if abs(tail[-1] - tail[-1 - p]) < 1e-6:
            period = p
            break
    if period is None:
        return CriticalOrbitStatus(z0, "undecided")

    # settle onto the cycle, then read its multiplier by the chain product
    w = tail[-1]
    for _ in range(20 * period):
        w = evaluate(map_spec, w)
    mult = 1.0 + 0j
    c = w
    for _ in range(period):
        mult *= derivative_values(map_spec, np.asarray([c]))[0]
        c = evaluate(map_spec, c)
    if abs(c - w) > 1e-5 * (1.0 + abs(w)):
        return CriticalOrbitStatus(z0, "undecided", period=period)
    mag = abs(mult)
    if mag < 1.0 - 1e-6:
        status = "attracting-cycle"
    elif mag <= 1.0 + 1e-6:
        status = "neutral-cycle"
    else:
        status = "repelling-cycle"
    return CriticalOrbitStatus(z0, status, period=period, multiplier_abs=mag)


def hyperbolicity_probe(
    map_spec: RationalMapSpec,
    max_iter: int = 400,
    sample_periods: tuple[int, ...] = (1, 2, 3, 4, 5, 6),
    rate_floor: float = RATE_FLOOR,
) -> HyperbolicityReport:
    """Iterate critical orbits and fit a lower expansion envelope.

    The fitted pair (c-hat, gamma-hat) satisfies
    log|multiplier(tau)| >= log c-hat + period(tau) * log gamma-hat for every
    sampled repelling orbit.  The verdict is hyperbolic-evidence only when
    every critical orbit resolves to an attracting cycle or escapes and the
    minimal log-multiplier rate clears rate_floor.
    """
    from . import orbits  # local import; orbits builds on this module

    esc = escape_radius(map_spec)
    summary = tuple(
        _critical_orbit_status(map_spec, z0, max_iter, esc)
        for z0 in critical_points(map_spec)
    )

    rates: list[float] = []
    samples: list[tuple[int, float]] = []
    for p in sample_periods:
        try:
            pts = orbits.fixed_points(map_spec, p, method="auto", _probe_bootstrap=True)
            cycles = orbits.classify_orbits(map_spec, pts, p)
        except MathDomainError:
            continue
        for orb in cycles:
            if orb.period == p and orb.repelling:
                rates.append(orb.log_abs_multiplier / orb.period)
                samples.append((orb.period, orb.log_abs_multiplier))

    if rates:
        min_rate = min(rates)
        gamma_hat = math.exp(min_rate)
        log_c = min(la - per * min_rate for per, la in samples)
        c_hat = math.exp(log_c)
    else:
        min_rate = gamma_hat = c_hat = None

    statuses = {s.status for s in summary}
    if {"neutral-cycle", "repelling-cycle"} & statuses:
        verdict = "fails"
    elif "undecided" in statuses or min_rate is None:
        verdict = "inconclusive"
    elif min_rate <= rate_floor:
        verdict = "inconclusive"
    else:
        verdict = "hyperbolic-evidence"
    return HyperbolicityReport(verdict, gamma_hat, c_hat, min_rate, summary)
