"""Aberth-Ehrlich solver for f^n(z) = z, evaluated by composition."""

import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orbitctl import maps, rootfind


def sorted_points(pts):
    return np.array(sorted(pts, key=lambda w: (round(w.real, 9), round(w.imag, 9))))


def test_aberth_square_n2_exact(square):
    # z^4 = z: 0 and the cube roots of unity
    got = rootfind.aberth_fixed_points(square, 2, 4, 1.5)
    expected = [0.0, 1.0, cmath.exp(2j * cmath.pi / 3), cmath.exp(-2j * cmath.pi / 3)]
    gaps = np.abs(sorted_points(got) - sorted_points(expected))
    assert gaps.max() < 1e-12
    assert rootfind.residuals(square, np.asarray(got), 2).max() < 1e-12


def test_aberth_count_and_residuals_deeper(basilica):
    n = 7
    got = rootfind.aberth_fixed_points(basilica, n, 2**n, 2.0)
    assert len(got) == 2**n
    assert rootfind.residuals(basilica, np.asarray(got), n).max() < 1e-9
    # all distinct: hyperbolic maps have simple fixed-point equations
    diffs = np.abs(got[:, None] - got[None, :]) + np.eye(len(got))
    assert diffs.min() > 1e-8


def test_newton_polish_recovers_perturbed_roots(square):
    exact = np.array([1.0, cmath.exp(2j * cmath.pi / 3), cmath.exp(-2j * cmath.pi / 3)])
    rng = np.random.default_rng(7)
    noisy = exact + 1e-4 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
    polished = rootfind.newton_polish(square, noisy, 2)
    assert np.abs(sorted_points(polished) - sorted_points(exact)).max() < 1e-12


def test_fn_shift_flags_escaping_points(square):
    f_val, df_val, bad = rootfind.fn_shift(square, np.array([1e200 + 0j, 0.5 + 0j]), 3)
    assert bad[0] and not bad[1]
    assert np.isfinite(f_val[1])


def test_residuals_infinite_on_escape(square):
    res = rootfind.residuals(square, np.array([1e160 + 0j]), 4)
    assert np.isinf(res[0])


@settings(max_examples=40, deadline=None)
@given(
    st.complex_numbers(min_magnitude=0.2, max_magnitude=1.6, allow_nan=False),
    st.integers(min_value=1, max_value=5),
)
def test_fn_shift_matches_direct_composition(z, n):
    bas = maps.RationalMapSpec(numerator=(-1.0, 0.0, 1.0), denominator=(1.0,))
    f_val, df_val, bad = rootfind.fn_shift(bas, np.array([z]), n)
    assert not bad[0]
    w = z
    dw = 1.0 + 0j
    for _ in range(n):
        dw *= maps.derivative(bas, w)
        w = maps.evaluate(bas, w)
    assert f_val[0] == pytest.approx(w - z, rel=1e-9, abs=1e-9)
    assert df_val[0] == pytest.approx(dw - 1.0, rel=1e-9, abs=1e-9)
