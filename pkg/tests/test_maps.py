"""Pointwise map evaluation, multiplier data, and the hyperbolicity probe."""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitctl import maps
from orbitctl.errors import (
    CriticalPointError,
    NotPeriodicError,
    PoleError,
    SuperattractingError,
)

LOG2 = math.log(2.0)
OMEGA = cmath.exp(2j * cmath.pi / 3)


def test_evaluate_square(square):
    z = 1.0 + 1.0j
    assert maps.evaluate(square, z) == z * z


def test_evaluate_at_pole_raises():
    inv = maps.RationalMapSpec(numerator=(1.0,), denominator=(0.0, 0.0, 1.0))  # 1/z^2
    assert maps.evaluate(inv, 5.0) == pytest.approx(0.04)
    with pytest.raises(PoleError):
        maps.evaluate(inv, 0.0)


def test_derivative_matches_finite_difference(basilica):
    h = 1e-6
    for z in (0.3 + 0.4j, -1.1 + 0.2j, 2.0 - 0.5j):
        fd = (maps.evaluate(basilica, z + h) - maps.evaluate(basilica, z - h)) / (2 * h)
        assert maps.derivative(basilica, z) == pytest.approx(fd, abs=1e-6)


def test_vector_evaluation_matches_scalar(basilica):
    zs = np.array([0.3 + 0.4j, -1.1 + 0.2j, 2.0 - 0.5j, 0.01j])
    vals = maps.map_values(basilica, zs)
    ders = maps.derivative_values(basilica, zs)
    for i, z in enumerate(zs):
        assert vals[i] == pytest.approx(maps.evaluate(basilica, complex(z)))
        assert ders[i] == pytest.approx(maps.derivative(basilica, complex(z)))


def test_distortion_rotation_square(square):
    z = 0.7 * cmath.exp(0.4j)
    log_abs, angle = maps.distortion_rotation(square, z)
    assert log_abs == pytest.approx(math.log(1.4), abs=1e-12)
    assert angle == pytest.approx(0.4, abs=1e-12)


def test_distortion_rotation_critical_point(square):
    with pytest.raises(CriticalPointError):
        maps.distortion_rotation(square, 0.0)


def test_birkhoff_sums_period_two_cycle(square):
    # omega -> omega^2 -> omega: derivative product is 4 omega^3 = 4
    r, theta = maps.birkhoff_sums(square, OMEGA, 2)
    assert r == pytest.approx(2 * LOG2, abs=1e-12)
    assert math.remainder(theta, 2 * math.pi) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    # |z| >= 1 keeps the squaring orbit clear of the superattracting basin
    st.complex_numbers(min_magnitude=1.0, max_magnitude=1.8, allow_nan=False),
    st.integers(min_value=1, max_value=4),
    st.integers(min_value=1, max_value=4),
)
def test_birkhoff_sums_additive_over_orbit_splits(z, a, b):
    # r_{a+b}(z) = r_a(z) + r_b(f^a z), same for the lifted angle
    sq = maps.RationalMapSpec(numerator=(0.0, 0.0, 1.0), denominator=(1.0,))
    r_full, th_full = maps.birkhoff_sums(sq, z, a + b)
    w = z
    for _ in range(a):
        w = maps.evaluate(sq, w)
    r_a, th_a = maps.birkhoff_sums(sq, z, a)
    r_b, th_b = maps.birkhoff_sums(sq, w, b)
    assert r_full == pytest.approx(r_a + r_b, rel=1e-9, abs=1e-9)
    assert th_full == pytest.approx(th_a + th_b, rel=1e-9, abs=1e-9)


def test_cycle_multiplier_fixed_point(square):
    log_abs, theta = maps.cycle_multiplier(square, 1.0, 1)
    assert log_abs == pytest.approx(LOG2, abs=1e-12)
    assert math.remainder(theta, 2 * math.pi) == pytest.approx(0.0, abs=1e-12)


def test_cycle_multiplier_two_cycle(square):
    log_abs, theta = maps.cycle_multiplier(square, OMEGA, 2)
    assert log_abs == pytest.approx(2 * LOG2, abs=1e-10)
    assert math.remainder(theta, 2 * math.pi) == pytest.approx(0.0, abs=1e-10)


def test_cycle_multiplier_rejects_nonperiodic(square):
    with pytest.raises(NotPeriodicError):
        maps.cycle_multiplier(square, 0.5, 1)


def test_cycle_multiplier_rejects_superattracting(square):
    with pytest.raises(SuperattractingError):
        maps.cycle_multiplier(square, 0.0, 1)


def test_critical_points_square(square):
    pts = maps.critical_points(square)
    assert len(pts) == 1
    assert abs(pts[0]) < 1e-12


def test_escape_radius_polynomial(square):
    radius = maps.escape_radius(square)
    assert radius is not None and radius >= 1.0
    w = radius * 1.5
    assert abs(maps.evaluate(square, w)) > abs(w)


def test_hyperbolicity_square(square):
    rep = maps.hyperbolicity_probe(square)
    assert rep.verdict == "hyperbolic-evidence"
    statuses = {s.status for s in rep.critical_orbit_summary}
    assert statuses == {"attracting-cycle"}
    assert rep.min_log_multiplier_rate > 0.05


def test_hyperbolicity_basilica(basilica):
    rep = maps.hyperbolicity_probe(basilica)
    assert rep.verdict == "hyperbolic-evidence"
    cycle = [s for s in rep.critical_orbit_summary if s.status == "attracting-cycle"]
    assert cycle and cycle[0].period == 2


def test_hyperbolicity_inconclusive_near_parabolic():
    # critical orbit of z^2 + 0.26 drifts out so slowly the probe refuses
    close = maps.RationalMapSpec(numerator=(0.26, 0.0, 1.0), denominator=(1.0,))
    rep = maps.hyperbolicity_probe(close)
    assert rep.verdict == "inconclusive"


def test_load_map_roundtrip(basilica, basilica_file):
    loaded = maps.load_map(basilica_file)
    assert loaded.fingerprint == basilica.fingerprint
    assert loaded.degree == 2
    assert loaded.is_polynomial


def test_fingerprint_distinguishes_maps(square, basilica):
    assert square.fingerprint != basilica.fingerprint
    assert square.to_dict() != basilica.to_dict()
    again = maps.RationalMapSpec.from_dict(square.to_dict())
    assert again.fingerprint == square.fingerprint
