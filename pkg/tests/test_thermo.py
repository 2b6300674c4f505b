"""Level sums, pressure, profiles, and the dimension root."""

import cmath
import math

import numpy as np
import pytest

from orbitctl import thermo
from orbitctl.errors import (
    AlphaOutOfRangeError,
    BracketError,
    DegenerateError,
    OverflowGuard,
)
from orbitctl.orbits import divisors

LOG2 = math.log(2.0)
LOG3 = math.log(3.0)


def brute_zn(db, n, s, k, alpha):
    """Re-derive Z_n straight from the primitive censuses of the divisors."""
    total = 0j
    for m in divisors(n):
        reps = n // m
        for orb in db.primitive_orbits(m):
            r = reps * orb.log_abs_multiplier
            th = reps * orb.holonomy_angle
            total += m * cmath.exp(s * (r - n * alpha) + 1j * k * th)
    return total


def test_zn_closed_form_circle(square_db):
    # every repelling level-n point of the doubling map has r = n log 2 and
    # trivial holonomy, so Z_n = (2^n - 1) e^{s n(log 2 - alpha)} for every k
    for n in (3, 6, 9):
        for s, k, alpha in ((0.4, 0, 0.0), (-1.2, 0, 0.3), (0.7, 3, 0.1)):
            closed = (2**n - 1) * math.exp(s * n * (LOG2 - alpha))
            got = thermo.zn_sum(square_db, n, s, k, alpha)
            assert got.real == pytest.approx(closed, rel=1e-12)
            assert abs(got.imag) < 1e-9 * abs(closed)


def test_zn_matches_divisor_sum(basilica_db):
    for n, s, k, alpha in ((6, 0.3, 1, 0.7), (8, -0.4, 2, 0.5), (12, 0.1, 0, 0.69)):
        got = thermo.zn_sum(basilica_db, n, s, k, alpha)
        want = brute_zn(basilica_db, n, s, k, alpha)
        assert got == pytest.approx(want, rel=1e-10)


def test_log_zn_consistent_with_zn(basilica_db):
    lz = thermo.log_zn(basilica_db, 10, 0.3, 1, 0.7)
    z = thermo.zn_sum(basilica_db, 10, 0.3, 1, 0.7)
    assert cmath.exp(lz) == pytest.approx(z, rel=1e-10)


def test_zn_real_and_positive_for_real_tilt(basilica_db):
    for s in (-1.0, 0.0, 0.8):
        z = thermo.zn_sum(basilica_db, 9, s, 0, 0.6)
        assert z.real > 0
        assert abs(z.imag) < 1e-10 * z.real


def test_zn_overflow_guard(basilica_db):
    with pytest.raises(OverflowGuard, match="log_zn"):
        thermo.zn_sum(basilica_db, 8, 200.0)
    lz = thermo.log_zn(basilica_db, 8, 200.0)
    assert lz.real > 705.0 and math.isfinite(lz.real)


def test_pressure_closed_form_square(square_db):
    # q_n(t) = (1+t)(log 2) - t*alpha + log(1 - 2^{-n})/n exactly
    for n in (6, 10, 12):
        for t in (-1.0, 0.0, 0.8):
            alpha = 0.25
            defect = math.log(1.0 - 2.0**-n) / n
            closed = LOG2 + t * (LOG2 - alpha) + defect
            assert thermo.pressure_estimate(square_db, n, t, alpha) == pytest.approx(
                closed, abs=1e-12
            )


def test_pressure_ratio_variant(square_db):
    t, alpha = 0.5, 0.2
    got = thermo.pressure_estimate(square_db, 10, t, alpha, variant="ratio")
    closed = (
        LOG2
        + t * (LOG2 - alpha)
        + math.log((1.0 - 2.0**-10) / (1.0 - 2.0**-9))
    )
    assert got == pytest.approx(closed, abs=1e-12)
    with pytest.raises(ValueError):
        thermo.pressure_estimate(square_db, 1, t, alpha, variant="ratio")


def test_pressure_derivatives_match_finite_differences(basilica_db):
    n, t, alpha, h = 12, 0.4, 0.7, 1e-3
    q1, q2 = thermo.pressure_derivatives(basilica_db, n, t, alpha)
    qp = thermo.pressure_estimate(basilica_db, n, t + h, alpha)
    qm = thermo.pressure_estimate(basilica_db, n, t - h, alpha)
    assert q1 == pytest.approx((qp - qm) / (2 * h), abs=5e-3)
    assert q2 >= 0.0


def test_pressure_curve_shape(basilica_db):
    curve = thermo.pressure_curve(basilica_db, 10, (-0.5, 0.0, 0.5), alpha=0.7)
    assert curve.variant == "direct" and curve.n_used == 10
    assert list(curve.t) == [-0.5, 0.0, 0.5]
    # q is convex, q1 increasing
    assert curve.q1[0] <= curve.q1[1] <= curve.q1[2]
    mid = 0.5 * (curve.q[0] + curve.q[2])
    assert curve.q[1] <= mid + 1e-3


def test_profile_maximal_entropy(basilica_db, maxent_alpha):
    prof = thermo.thermo_profile(basilica_db, maxent_alpha, 12)
    assert abs(prof.xi) < 1e-6
    assert prof.sigma2 > 0
    assert prof.entropy == pytest.approx(LOG2, abs=1e-3)


def test_profile_stable_in_level(basilica_db, maxent_alpha):
    a, b = (
        thermo.thermo_profile(basilica_db, maxent_alpha, 11),
        thermo.thermo_profile(basilica_db, maxent_alpha, 12),
    )
    assert abs(a.xi - b.xi) < 1e-2
    assert abs(a.sigma2 - b.sigma2) < 1e-2
    assert abs(a.entropy - b.entropy) < 1e-2


def test_profile_legendre_consistency(basilica_db):
    # at the solved tilt the centered pressure equals the entropy, and the
    # tilt grows with the target mean
    tilts = []
    for alpha in (0.5, 0.7, 0.9, 1.1):
        prof = thermo.thermo_profile(basilica_db, alpha, 12)
        q = thermo.pressure_estimate(basilica_db, 12, prof.xi, alpha)
        assert prof.entropy == pytest.approx(q, abs=1e-8)
        tilts.append(prof.xi)
    assert tilts == sorted(tilts)
    assert tilts[0] < 0 < tilts[-1]


def test_profile_degenerate_on_pure_power(square_db):
    with pytest.raises(DegenerateError):
        thermo.thermo_profile(square_db, LOG2, 12)


def test_profile_alpha_out_of_range(basilica_db):
    with pytest.raises(AlphaOutOfRangeError):
        thermo.thermo_profile(basilica_db, 5.0, 12)


def test_alpha_range_basilica(basilica_db):
    lo, hi = thermo.alpha_range(basilica_db, 12, t_span=3.0)
    assert lo == pytest.approx(0.27962705993929876, abs=1e-9)
    assert hi == pytest.approx(1.124872427249868, abs=1e-9)
    lo2, hi2 = thermo.alpha_range(basilica_db, 12, t_span=10.0)
    assert lo2 <= lo and hi2 >= hi
    assert lo2 < LOG2 < hi2


def test_alpha_range_degenerate_square(square_db):
    lo, hi = thermo.alpha_range(square_db, 10)
    assert lo == pytest.approx(LOG2, abs=1e-12)
    assert hi == pytest.approx(LOG2, abs=1e-12)


def test_maximal_entropy_alpha_is_untilted_mean(basilica_db):
    alpha = thermo.maximal_entropy_alpha(basilica_db, 12)
    r, _, w = thermo.level_terms(basilica_db, 12)
    assert alpha == pytest.approx(float(np.sum(w * r) / (12.0 * np.sum(w))), abs=1e-12)
    lo, hi = thermo.alpha_range(basilica_db, 12)
    assert lo < alpha < hi


def test_bowen_dimension_pure_powers(square_db, cubic_db):
    for db, n in ((square_db, 12), (cubic_db, 8)):
        res = thermo.bowen_dimension(db, n)
        assert abs(res.value - 1.0) < 1e-4
        direct = thermo.bowen_dimension(db, n, variant="direct")
        assert abs(direct.value - 1.0) < 1e-3


def test_bowen_dimension_basilica(basilica_db):
    res = thermo.bowen_dimension(basilica_db, 12)
    assert 1.0 < res.value < 1.5
    assert res.residual < 1e-8


def test_bowen_bracket_error(basilica_db):
    with pytest.raises(BracketError):
        thermo.bowen_dimension(basilica_db, 12, bracket=(1e-9, 0.2))


def test_expansion_shoulder(basilica_db, maxent_alpha):
    prof = thermo.thermo_profile(basilica_db, maxent_alpha, 12)
    t = (0.0, 0.02, 0.04, 0.08)
    chk = thermo.expansion_check(
        basilica_db, 12, maxent_alpha, prof.xi, prof.sigma2, t
    )
    assert chk.residual[0] < 1e-12
    # cubic decay of the remainder: slope of log residual vs log t
    slope = (math.log(chk.residual[3]) - math.log(chk.residual[1])) / math.log(4.0)
    assert slope > 2.5
    sym = thermo.expansion_check(
        basilica_db, 12, maxent_alpha, prof.xi, prof.sigma2, (-0.05, 0.05)
    )
    assert sym.residual[0] == pytest.approx(sym.residual[1], abs=1e-9)
