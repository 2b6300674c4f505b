"""Periodic-orbit enumeration, classification, and the census database.

Two independent routes produce the fixed points of f^n:

* backward: every length-n word over the d inverse branches is iterated
  cyclically until the composition contracts onto its unique fixed point.
  This finds exactly the repelling points (attracting cycles repel the
  inverse branches) and scales to d^n around 10^5.
* roots: all d^n solutions of f^n(z) = z at once via Aberth-Ehrlich,
  feasible for d^n <= 4096.  Finds non-repelling points too.

The census identity
    sum_{m | n} m * #(primitive repelling m-cycles) + #(non-repelling fixed
    points of f^n, with multiplicity) = d^n
is checked with exact integers before a period entry is marked complete.
Non-repelling cycles come from critical-orbit limits (every attracting cycle
of a rational map attracts a critical point) or, on the roots route, from the
solver itself.  The fixed point at infinity of a polynomial is excluded
throughout.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from . import maps as maps_mod
from .errors import (
    BranchCutError,
    DegreeOverflowError,
    FingerprintMismatchError,
    IncompleteCensusError,
    MathDomainError,
    OrbitMatchingError,
    VersionMismatchError,
)
from .maps import (
    DERIV_FLOOR,
    TWO_PI,
    RationalMapSpec,
    derivative_values,
    hyperbolicity_probe,
    map_values,
)
from .rootfind import aberth_fixed_points, fn_shift, newton_polish, residuals

PAIR_TOL = 1e-9
ROOTS_CAP = 4096
DB_VERSION = 1

DEFAULT_TOLERANCES = {"pairing": PAIR_TOL, "newton": 1e-13, "closure": 1e-9}


# ---- records -------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicOrbit:
    """One cycle, keyed by its lexicographically least point.

    log_abs_multiplier is -inf for superattracting cycles (multiplier 0),
    in which case the holonomy angle is stored as 0.0 and carries no
    information.
    """

    period: int
    representative: complex
    log_abs_multiplier: float
    holonomy_angle: float
    primitive: bool
    repelling: bool


@dataclass(frozen=True)
class PeriodEntry:
    period: int
    orbits: tuple[PeriodicOrbit, ...] = ()        # primitive repelling
    nonrepelling: tuple[PeriodicOrbit, ...] = ()  # primitive non-repelling
    complete: bool = False
    method: str | None = None


@dataclass
class OrbitDatabase:
    map_fingerprint: str
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    hyperbolicity: str | None = None
    entries: dict[int, PeriodEntry] = field(default_factory=dict)
    _term_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def for_map(cls, map_spec: RationalMapSpec) -> "OrbitDatabase":
        return cls(map_fingerprint=map_spec.fingerprint)

    def entry(self, n: int) -> PeriodEntry | None:
        return self.entries.get(n)

    def primitive_orbits(self, n: int) -> tuple[PeriodicOrbit, ...]:
        ent = self.entries.get(n)
        if ent is None or not ent.complete:
            raise IncompleteCensusError(f"period {n} not enumerated to completion")
        return ent.orbits

    def max_complete_period(self) -> int:
        n = 0
        while True:
            ent = self.entries.get(n + 1)
            if ent is None or not ent.complete:
                return n
            n += 1

    def nonrepelling_level_count(self, n: int) -> int:
        """Non-repelling fixed points of f^n known to the sidecar."""
        total = 0
        for m in divisors(n):
            ent = self.entries.get(m)
            if ent is not None:
                total += m * len(ent.nonrepelling)
        return total

    def _set_entry(self, ent: PeriodEntry):
        self.entries[ent.period] = ent
        self._term_cache.clear()


def divisors(n: int) -> list[int]:
    out = [m for m in range(1, n + 1) if n % m == 0]
    return out


def expected_fixed_count(map_spec: RationalMapSpec, n: int) -> int:
    """Number of solutions of f^n(z) = z in the plane, with multiplicity.

    d^n for a polynomial (the fixed point at infinity is excluded); when the
    denominator degree reaches the numerator degree, infinity is not fixed
    and the plane carries one more solution.
    """
    d = map_spec.degree
    if map_spec.is_polynomial or len(map_spec.numerator) > len(map_spec.denominator):
        return d**n
    return d**n + 1


# ---- inverse branches ----------------------------------------------------

def _branch_kind(map_spec: RationalMapSpec) -> str | None:
    num = map_spec.numerator
    d = map_spec.degree
    if map_spec.is_polynomial and all(c == 0 for c in num[1:-1]):
        return "monomial"  # a*z^d + c
    if d == 2:
        return "quadratic"
    return None


def _inverse_branch(map_spec: RationalMapSpec, x: np.ndarray, branch: np.ndarray) -> np.ndarray:
    """Vectorized inverse branch selection; branch[i] in {0..d-1}."""
    kind = _branch_kind(map_spec)
    d = map_spec.degree
    if kind == "monomial":
        a = map_spec.numerator[-1]
        c = map_spec.numerator[0]
        w = (x - c) / a
        root = np.exp(np.log(np.where(w == 0, 1e-300, w)) / d)
        phases = np.exp(2j * np.pi * np.arange(d) / d)
        return root * phases[branch]
    if kind == "quadratic":
        num = list(map_spec.numerator) + [0j] * (3 - len(map_spec.numerator))
        den = list(map_spec.denominator) + [0j] * (3 - len(map_spec.denominator))
        a = num[2] - x * den[2]
        b = num[1] - x * den[1]
        c = num[0] - x * den[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            disc = np.sqrt(b * b - 4.0 * a * c)
            plus = (-b + disc) / (2.0 * a)
            minus = (-b - disc) / (2.0 * a)
        return np.where(branch == 0, plus, minus)
    raise BranchCutError(
        "no closed-form inverse branches for this map; use method='roots'"
    )


def backward_supported(map_spec: RationalMapSpec) -> bool:
    return _branch_kind(map_spec) is not None


def _backward_candidates(
    map_spec: RationalMapSpec,
    n: int,
    seed: complex,
    max_cycles: int = 300,
    tol: float = 1e-13,
) -> np.ndarray:
    """Limits of all d^n periodic inverse-branch words, then Newton-polished."""
    d = map_spec.degree
    count = d**n
    idx = np.arange(count)
    words = (idx[:, None] // d ** np.arange(n)[None, :]) % d  # (count, n)

    z = np.full(count, complex(seed), dtype=complex)
    prev = z.copy()
    for cycle in range(max_cycles):
        for j in range(n - 1, -1, -1):
            z = _inverse_branch(map_spec, z, words[:, j])
        lost = ~np.isfinite(z.real) | ~np.isfinite(z.imag)
        if lost.any():
            z[lost] = complex(seed)
        if cycle >= 2:
            delta = np.max(np.abs(z - prev))
            if delta < tol * (1.0 + np.max(np.abs(z))):
                break
        prev = z.copy()
    return newton_polish(map_spec, z, n)


def _dedup(points: np.ndarray, tol: float = PAIR_TOL) -> np.ndarray:
    if points.size == 0:
        return points
    xy = np.column_stack([points.real, points.imag])
    tree = cKDTree(xy)
    keep = np.ones(points.size, dtype=bool)
    for i, ball in enumerate(tree.query_ball_point(xy, r=tol)):
        if min(ball) < i:
            keep[i] = False
    out = points[keep]
    order = np.lexsort((out.imag, out.real))
    return out[order]


def _match_counts(a: np.ndarray, b: np.ndarray, tol: float = PAIR_TOL):
    """(#matched pairs, max distance over matches); a matched into b."""
    if a.size == 0 or b.size == 0:
        return 0, 0.0
    tree = cKDTree(np.column_stack([b.real, b.imag]))
    dist, _ = tree.query(np.column_stack([a.real, a.imag]), k=1)
    matched = dist <= tol
    return int(matched.sum()), float(dist[matched].max()) if matched.any() else 0.0


def _forward_closure(
    map_spec: RationalMapSpec,
    points: np.ndarray,
    n: int,
    tol: float = PAIR_TOL,
) -> np.ndarray:
    """Close the set under f; images of fixed points are fixed points."""
    pts = points
    for _ in range(n):
        if pts.size == 0:
            break
        images = map_values(map_spec, pts)
        images = images[np.isfinite(images.real) & np.isfinite(images.imag)]
        tree = cKDTree(np.column_stack([pts.real, pts.imag]))
        dist, _ = tree.query(np.column_stack([images.real, images.imag]), k=1)
        new = images[dist > tol]
        if new.size == 0:
            break
        new = newton_polish(map_spec, new, n)
        res = residuals(map_spec, new, n)
        new = new[res < 1e-9 * (1.0 + np.abs(new))]
        if new.size == 0:
            break
        pts = _dedup(np.concatenate([pts, new]), tol)
    return pts


def _fixed_point_seed(map_spec: RationalMapSpec) -> complex:
    """Repelling fixed point of largest multiplier modulus (deterministic)."""
    num = np.asarray(map_spec.numerator, dtype=complex)
    den = np.zeros(max(len(map_spec.numerator), len(map_spec.denominator) + 1), dtype=complex)
    den[1 : len(map_spec.denominator) + 1] = map_spec.denominator
    coeffs = np.zeros(max(num.size, den.size), dtype=complex)
    coeffs[: num.size] += num
    coeffs[: den.size] -= den
    coeffs = np.trim_zeros(coeffs[::-1], "f")
    fps = np.roots(coeffs) if coeffs.size > 1 else np.empty(0, complex)
    if fps.size == 0:
        raise MathDomainError("map has no finite fixed point to seed from")
    fps = newton_polish(map_spec, np.asarray(fps, complex), 1)
    mags = np.abs(derivative_values(map_spec, fps))
    best = int(np.argmax(np.nan_to_num(mags, nan=-1.0)))
    if not mags[best] > 1.0:
        raise MathDomainError("no repelling fixed point found for seeding")
    return complex(fps[best])


def _init_radius(map_spec: RationalMapSpec) -> float:
    num = np.asarray(map_spec.numerator, dtype=complex)
    den = np.zeros(max(len(map_spec.numerator), len(map_spec.denominator) + 1), dtype=complex)
    den[1 : len(map_spec.denominator) + 1] = map_spec.denominator
    coeffs = np.zeros(max(num.size, den.size), dtype=complex)
    coeffs[: num.size] += num
    coeffs[: den.size] -= den
    coeffs = np.trim_zeros(coeffs[::-1], "f")
    fps = np.roots(coeffs) if coeffs.size > 1 else np.empty(0, complex)
    top = float(np.abs(fps).max()) if fps.size else 1.0
    return 1.05 * max(1.0, top) + 0.05


_PROBE_CACHE: dict[str, str] = {}


def _cached_verdict(map_spec: RationalMapSpec) -> str:
    fp = map_spec.fingerprint
    if fp not in _PROBE_CACHE:
        _PROBE_CACHE[fp] = hyperbolicity_probe(map_spec).verdict
    return _PROBE_CACHE[fp]


# ---- fixed point drivers --------------------------------------------------

def fixed_points(
    map_spec: RationalMapSpec,
    n: int,
    method: str = "auto",
    roots_cap: int = ROOTS_CAP,
    override_hyperbolicity: bool = False,
    expected_repelling: int | None = None,
    _probe_bootstrap: bool = False,
) -> np.ndarray:
    """Fixed points of f^n, lexicographically sorted.

    method='backward' returns the repelling points only; 'roots' returns
    everything (non-repelling included) and is capped at d^n <= roots_cap;
    'both' runs the two routes, demands that their repelling sets agree
    point for point at the pairing tolerance, and returns the union.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = map_spec.degree
    if method == "auto":
        if backward_supported(map_spec):
            method = "backward"
        elif d**n <= roots_cap:
            method = "roots"
        else:
            raise DegreeOverflowError(
                f"d^n = {d**n} exceeds the roots cap and no inverse branches exist"
            )

    if method in ("backward", "both") and not (_probe_bootstrap or override_hyperbolicity):
        verdict = _cached_verdict(map_spec)
        if verdict != "hyperbolic-evidence":
            raise MathDomainError(
                f"hyperbolicity probe verdict is '{verdict}'; "
                "pass override_hyperbolicity=True to enumerate backward anyway"
            )

    if method == "roots":
        return _roots_route(map_spec, n, roots_cap)
    if method == "backward":
        return _backward_route(map_spec, n, expected_repelling, roots_cap)
    if method == "both":
        back = _backward_route(map_spec, n, expected_repelling, roots_cap)
        full = _roots_route(map_spec, n, roots_cap)
        deriv_mag = np.abs(1.0 + fn_shift(map_spec, full, n)[1])
        rep = full[deriv_mag > 1.0]
        m_ab, worst = _match_counts(back, rep)
        m_ba, _ = _match_counts(rep, back)
        if m_ab != back.size or m_ba != rep.size:
            raise OrbitMatchingError(
                f"backward/roots repelling sets disagree at n = {n}: "
                f"{back.size} vs {rep.size} points, "
                f"{back.size - m_ab} and {rep.size - m_ba} unmatched"
            )
        return _dedup(np.concatenate([full, back]))
    raise ValueError(f"unknown method '{method}'")


def _roots_route(map_spec: RationalMapSpec, n: int, roots_cap: int) -> np.ndarray:
    count = expected_fixed_count(map_spec, n)
    if count > roots_cap:
        raise DegreeOverflowError(f"d^n = {count} exceeds roots cap {roots_cap}")
    radius = _init_radius(map_spec)
    pts = aberth_fixed_points(map_spec, n, count, radius)
    res = residuals(map_spec, pts, n)
    pts = pts[res < 1e-9 * (1.0 + np.abs(pts))]
    pts = _dedup(pts)
    return _forward_closure(map_spec, pts, n)


def _backward_route(
    map_spec: RationalMapSpec,
    n: int,
    expected_repelling: int | None,
    roots_cap: int,
) -> np.ndarray:
    if not backward_supported(map_spec):
        raise BranchCutError(
            "no closed-form inverse branches for this map; use method='roots'"
        )
    seed = _fixed_point_seed(map_spec)
    cand = _backward_candidates(map_spec, n, seed)
    res = residuals(map_spec, cand, n)
    pts = cand[res < 1e-9 * (1.0 + np.abs(cand))]
    pts = _dedup(pts)
    pts = _forward_closure(map_spec, pts, n)
    if pts.size:
        # word iteration can land on attracting cycles (they repel the
        # inverse map only off their immediate basin); keep repelling alone
        deriv_mag = np.abs(1.0 + fn_shift(map_spec, pts, n)[1])
        pts = pts[deriv_mag > 1.0]
    if expected_repelling is not None and pts.size < expected_repelling:
        if map_spec.degree**n <= roots_cap:
            # word iteration lost whole cycles near a branch cut; the global
            # solver recovers them
            full = _roots_route(map_spec, n, roots_cap)
            deriv_mag = np.abs(1.0 + fn_shift(map_spec, full, n)[1])
            pts = _dedup(np.concatenate([pts, full[deriv_mag > 1.0]]))
    return pts


# ---- classification -------------------------------------------------------

def classify_orbits(
    map_spec: RationalMapSpec,
    points,
    n: int,
    pair_tol: float = PAIR_TOL,
) -> list[PeriodicOrbit]:
    """Group fixed points of f^n into cycles with least period m | n.

    Forward images are matched against the input list at the pairing
    tolerance; a miss or a collision raises OrbitMatchingError.  Cycles
    whose least period equals n are flagged primitive.
    """
    pts = np.asarray(points, dtype=complex)
    if pts.size == 0:
        return []
    images = map_values(map_spec, pts)
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    dist, idx = tree.query(np.column_stack([images.real, images.imag]), k=1)
    worst = float(np.nanmax(dist)) if dist.size else 0.0
    if not np.all(np.isfinite(dist)) or worst > pair_tol:
        raise OrbitMatchingError(
            f"forward image missed the point list by {worst:.3e} (tol {pair_tol:.1e})"
        )
    if np.unique(idx).size != pts.size:
        raise OrbitMatchingError("forward images collide; point list is not a census level")

    fp = derivative_values(map_spec, pts)
    mag = np.abs(fp)
    sup = mag < DERIV_FLOOR
    with np.errstate(divide="ignore"):
        r = np.where(sup, -np.inf, np.log(np.where(sup, 1.0, mag)))
    th = np.arctan2(fp.imag, fp.real)

    seen = np.zeros(pts.size, dtype=bool)
    out: list[PeriodicOrbit] = []
    for i in range(pts.size):
        if seen[i]:
            continue
        cycle = [i]
        seen[i] = True
        j = int(idx[i])
        while j != i:
            cycle.append(j)
            seen[j] = True
            j = int(idx[j])
        m = len(cycle)
        if n % m != 0:
            raise OrbitMatchingError(f"cycle length {m} does not divide n = {n}")
        cyc = np.asarray(cycle)
        log_abs = float(r[cyc].sum())
        if math.isinf(log_abs) and log_abs < 0:
            theta = 0.0
        else:
            theta = float(th[cyc].sum()) % TWO_PI
        reps = pts[cyc]
        k = int(np.lexsort((reps.imag, reps.real))[0])
        out.append(
            PeriodicOrbit(
                period=m,
                representative=complex(reps[k]),
                log_abs_multiplier=log_abs,
                holonomy_angle=theta,
                primitive=(m == n),
                repelling=bool(log_abs > 0.0),
            )
        )
    return out


# ---- critical cycle registry ----------------------------------------------

def _register_critical_cycles(
    map_spec: RationalMapSpec,
    db: OrbitDatabase,
    override_hyperbolicity: bool,
):
    """Probe once per database: verdict plus the non-repelling sidecar."""
    if db.hyperbolicity is not None:
        return
    report = hyperbolicity_probe(map_spec)
    db.hyperbolicity = report.verdict
    _PROBE_CACHE[map_spec.fingerprint] = report.verdict
    for status in report.critical_orbit_summary:
        if status.status != "attracting-cycle" or status.period is None:
            continue
        # settle the critical orbit onto its limit cycle, then polish
        w = complex(status.point)
        for _ in range(600):
            w = maps_mod.evaluate(map_spec, w)
        w = complex(newton_polish(map_spec, np.asarray([w]), status.period)[0])
        cycle_pts = []
        c = w
        for _ in range(status.period):
            cycle_pts.append(c)
            c = maps_mod.evaluate(map_spec, c)
        cyc = np.asarray(cycle_pts, dtype=complex)
        orbs = classify_orbits(map_spec, cyc, status.period)
        for orb in orbs:
            if orb.repelling:
                continue
            _merge_nonrepelling(db, replace(orb, primitive=True))
    total_nonrep = sum(len(e.nonrepelling) for e in db.entries.values())
    bound = 2 * map_spec.degree - 2
    if total_nonrep > bound:
        raise IncompleteCensusError(
            f"{total_nonrep} non-repelling primitive cycles exceed the 2d-2 bound {bound}"
        )


def _merge_nonrepelling(db: OrbitDatabase, orb: PeriodicOrbit):
    ent = db.entries.get(orb.period) or PeriodEntry(period=orb.period)
    for have in ent.nonrepelling:
        if abs(have.representative - orb.representative) <= PAIR_TOL:
            return
    side = tuple(
        sorted(
            ent.nonrepelling + (orb,),
            key=lambda o: (o.representative.real, o.representative.imag),
        )
    )
    db._set_entry(replace(ent, nonrepelling=side))


# ---- enumeration ----------------------------------------------------------

def enumerate_primitive(
    map_spec: RationalMapSpec,
    n: int,
    db: OrbitDatabase,
    method: str = "auto",
    override_hyperbolicity: bool = False,
    roots_cap: int = ROOTS_CAP,
) -> list[PeriodicOrbit]:
    """Primitive orbits of period n, enumerating divisors as needed.

    The period entry is marked complete only when the integer census
    identity holds; otherwise IncompleteCensusError is raised and nothing
    is recorded for period n.
    """
    if db.map_fingerprint != map_spec.fingerprint:
        raise FingerprintMismatchError(
            f"database fingerprint {db.map_fingerprint} does not match map "
            f"{map_spec.fingerprint}"
        )
    ent = db.entries.get(n)
    if ent is not None and ent.complete:
        return list(ent.orbits)
    _register_critical_cycles(map_spec, db, override_hyperbolicity)
    for m in divisors(n)[:-1]:
        enumerate_primitive(
            map_spec, m, db, method=method,
            override_hyperbolicity=override_hyperbolicity, roots_cap=roots_cap,
        )

    expected_total = expected_fixed_count(map_spec, n)
    nonrep_level = db.nonrepelling_level_count(n)
    requested = method
    if requested == "auto":
        requested = "backward" if backward_supported(map_spec) else "roots"
    pts = fixed_points(
        map_spec, n, method=requested, roots_cap=roots_cap,
        override_hyperbolicity=override_hyperbolicity or db.hyperbolicity == "hyperbolic-evidence",
        expected_repelling=expected_total - nonrep_level if requested != "roots" else None,
    )
    cycles = classify_orbits(map_spec, pts, n, pair_tol=db.tolerances["pairing"])

    new_rep = [c for c in cycles if c.period == n and c.repelling]
    for c in cycles:
        if c.period == n and not c.repelling:
            _merge_nonrepelling(db, c)

    # non-primitive cycles must reproduce the divisor censuses
    for m in divisors(n)[:-1]:
        got = sum(1 for c in cycles if c.period == m and c.repelling)
        want = len(db.entries[m].orbits)
        if requested != "backward":
            got_non = sum(1 for c in cycles if c.period == m and not c.repelling)
            want_non = len(db.entries[m].nonrepelling)
            if got_non != want_non:
                raise IncompleteCensusError(
                    f"period {m} non-repelling cycles: found {got_non}, census has {want_non}"
                )
        if got != want:
            raise IncompleteCensusError(
                f"period {m} repelling cycles seen at level {n}: {got} vs census {want}"
            )

    stub = db.entries.get(n) or PeriodEntry(period=n)
    entry = PeriodEntry(
        period=n,
        orbits=tuple(
            sorted(new_rep, key=lambda o: (o.representative.real, o.representative.imag))
        ),
        nonrepelling=stub.nonrepelling,
        complete=False,
        method=requested,
    )
    db._set_entry(entry)

    rep_total = sum(m * len(db.entries[m].orbits) for m in divisors(n))
    nonrep_total = db.nonrepelling_level_count(n)
    if rep_total + nonrep_total != expected_total:
        db.entries.pop(n, None)
        raise IncompleteCensusError(
            f"census failed at n = {n}: {rep_total} repelling + {nonrep_total} "
            f"non-repelling != {expected_total}"
        )
    db._set_entry(replace(entry, complete=True))
    return list(entry.orbits)


def census_counts(map_spec: RationalMapSpec, db: OrbitDatabase, n: int) -> tuple[int, int, int]:
    """(repelling, non-repelling, expected) fixed-point counts at level n."""
    rep_total = 0
    for m in divisors(n):
        ent = db.entries.get(m)
        if ent is None or not ent.complete:
            raise IncompleteCensusError(f"period {m} not complete")
        rep_total += m * len(ent.orbits)
    return rep_total, db.nonrepelling_level_count(n), expected_fixed_count(map_spec, n)


# ---- persistence -----------------------------------------------------------

def _orbit_record(orb: PeriodicOrbit) -> dict:
    rec = {
        "n": orb.period,
        "z": [orb.representative.real, orb.representative.imag],
        "log_abs": None if math.isinf(orb.log_abs_multiplier) else orb.log_abs_multiplier,
        "theta": orb.holonomy_angle,
        "primitive": orb.primitive,
        "repelling": orb.repelling,
    }
    if not orb.repelling:
        rec["nonrepelling"] = True
    return rec


def _orbit_from_record(rec: dict) -> PeriodicOrbit:
    log_abs = rec["log_abs"]
    return PeriodicOrbit(
        period=int(rec["n"]),
        representative=complex(rec["z"][0], rec["z"][1]),
        log_abs_multiplier=float("-inf") if log_abs is None else float(log_abs),
        holonomy_angle=float(rec["theta"]),
        primitive=bool(rec["primitive"]),
        repelling=bool(rec["repelling"]),
    )


def save_db(db: OrbitDatabase, path):
    """Write the census as JSON Lines: header, period summaries, orbits."""
    lines = [
        json.dumps(
            {
                "version": DB_VERSION,
                "fingerprint": db.map_fingerprint,
                "tolerances": db.tolerances,
                "hyperbolicity": db.hyperbolicity,
            },
            sort_keys=True,
        )
    ]
    for n in sorted(db.entries):
        ent = db.entries[n]
        lines.append(
            json.dumps(
                {"period": n, "complete": ent.complete, "method": ent.method},
                sort_keys=True,
            )
        )
        for orb in ent.orbits:
            lines.append(json.dumps(_orbit_record(orb), sort_keys=True))
        for orb in ent.nonrepelling:
            lines.append(json.dumps(_orbit_record(orb), sort_keys=True))
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_db(path, map_spec: RationalMapSpec | None = None) -> OrbitDatabase:
    with open(path) as fh:
        raw = [line for line in fh.read().splitlines() if line.strip()]
    if not raw:
        raise VersionMismatchError(f"{path}: empty cache file")
    try:
        header = json.loads(raw[0])
    except json.JSONDecodeError as exc:
        raise VersionMismatchError(f"{path}: corrupted header ({exc})") from None
    if not isinstance(header, dict) or header.get("version") != DB_VERSION:
        raise VersionMismatchError(
            f"{path}: cache version {header.get('version')!r}, expected {DB_VERSION}"
        )
    if map_spec is not None and header["fingerprint"] != map_spec.fingerprint:
        raise FingerprintMismatchError(
            f"{path}: cache fingerprint {header['fingerprint']} does not match "
            f"map {map_spec.fingerprint}"
        )
    db = OrbitDatabase(
        map_fingerprint=header["fingerprint"],
        tolerances=dict(header.get("tolerances", DEFAULT_TOLERANCES)),
        hyperbolicity=header.get("hyperbolicity"),
    )
    meta: dict[int, dict] = {}
    grouped: dict[int, dict[str, list[PeriodicOrbit]]] = {}
    for line in raw[1:]:
        rec = json.loads(line)
        if "period" in rec:
            meta[int(rec["period"])] = rec
            continue
        orb = _orbit_from_record(rec)
        bucket = grouped.setdefault(orb.period, {"rep": [], "non": []})
        bucket["rep" if orb.repelling else "non"].append(orb)
    periods = sorted(set(meta) | set(grouped))
    for n in periods:
        bucket = grouped.get(n, {"rep": [], "non": []})
        info = meta.get(n, {})
        db.entries[n] = PeriodEntry(
            period=n,
            orbits=tuple(bucket["rep"]),
            nonrepelling=tuple(bucket["non"]),
            complete=bool(info.get("complete", False)),
            method=info.get("method"),
        )
    return db
