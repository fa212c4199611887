import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonharmonic import quadrature as quad
from nonharmonic.eigensystem import ModelProblem, window_for
from nonharmonic.transform import (AliasingWarning, GridFunction, SpectralCoeffs, WindowMismatch, check_band,
                                   evaluate, forward_l, forward_lstar, inverse_l, inverse_lstar, l2_inner, l2_norm,
                                   plancherel_pair, random_band_limited, random_coeffs, sample_u, sample_v)

# [DERIVED] mpmath quadrature of f = 2^x exp(cos 2 pi x) against conj(u_xi), h = 2
FSTAR_H2 = {0: 2.8609859662912667, 1: 1.3809024525001368 + 0.66664861344741015j,
            -2: 0.39335389512879784 - 0.65311822868270266j}
# [DERIVED] modified Bessel values I_0(1), I_3(1)
BESSEL = {0: 1.2660658777520084, 3: 0.022168424924331905}


def _bessel_function(p, M):
    x = np.arange(M) / M
    return GridFunction(p, p.h[0] ** x * np.exp(np.cos(2 * np.pi * x)))


@pytest.mark.parametrize("xi", [0, 3, -7])
def test_biorthogonality(p1, xi):
    c = forward_l(sample_u(p1, xi, 64), 10)
    expected = SpectralCoeffs.delta(p1, 10, xi).values
    np.testing.assert_allclose(c.values, expected, atol=1e-12)
    cs = forward_lstar(sample_v(p1, xi, 64), 10)
    np.testing.assert_allclose(cs.values, expected, atol=1e-12)


def test_fstar_of_u0_h2():
    # (u_0, u_0) = int 4^x = 3 / (2 ln 2)
    p = ModelProblem.oh1d(2.0)
    c = forward_lstar(sample_u(p, 0, 16), 4)
    assert c[0] == pytest.approx(3 / (2 * np.log(2)), abs=1e-14)


@pytest.mark.parametrize("xi", [0, 3])
def test_forward_l_bessel_coefficients(xi):
    p = ModelProblem.oh1d(2.0)
    c = forward_l(_bessel_function(p, 64), 12)
    assert c[xi] == pytest.approx(BESSEL[xi], abs=1e-14)


@pytest.mark.parametrize("xi", [0, 1, -2])
def test_forward_lstar_against_mpmath(xi):
    p = ModelProblem.oh1d(2.0)
    c = forward_lstar(_bessel_function(p, 64), 12)
    assert c[xi] == pytest.approx(FSTAR_H2[xi], abs=1e-13)


def test_plancherel_for_bessel_function():
    # [DERIVED] ||2^x exp(cos 2 pi x)||_{L^2} by mpmath
    p = ModelProblem.oh1d(2.0)
    f = _bessel_function(p, 64)
    assert l2_norm(f) == pytest.approx(2.3009261890409176, rel=1e-13)
    r = plancherel_pair(forward_l(f, 20), forward_lstar(f, 20))
    assert r.real == pytest.approx(2.3009261890409176**2, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_plancherel_random(p1, seed):
    rng = np.random.default_rng(seed)
    f = random_band_limited(p1, 12, 64, rng)
    r = plancherel_pair(forward_l(f, 12), forward_lstar(f, 12))
    n2 = l2_norm(f) ** 2
    assert abs(r - n2) / n2 < 1e-12
    assert abs(r.imag) / n2 < 1e-13


def test_plancherel_against_gauss_legendre_2d(p2, rng):
    c = random_coeffs(p2, 4, rng)
    f = inverse_l(c, 16)
    x, w = quad.gauss_legendre(40)
    X = np.stack(np.meshgrid(x, x, indexing="ij"), axis=-1)
    vals = evaluate(c, X)
    ref = np.sum(w[:, None] * w[None, :] * np.abs(vals) ** 2)
    assert l2_norm(f) ** 2 == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("flavor", ["L", "Lstar"])
def test_round_trip(p1, rng, flavor):
    c = random_coeffs(p1, 10, rng, flavor=flavor)
    if flavor == "L":
        back = forward_l(inverse_l(c, 32), 10)
    else:
        back = forward_lstar(inverse_lstar(c, 32), 10)
    np.testing.assert_allclose(back.values, c.values, atol=1e-13)


def test_round_trip_2d(p2, rng):
    c = random_coeffs(p2, 3, rng)
    np.testing.assert_allclose(forward_l(inverse_l(c, 8), 3).values, c.values, atol=1e-13)


def test_lstar_transform_of_l_side_function_is_inner_product(rng):
    p = ModelProblem.oh1d(0.5)
    f = random_band_limited(p, 6, 32, rng)
    c = forward_lstar(f, 6)
    for xi in [0, -3, 5]:
        assert c[xi] == pytest.approx(l2_inner(f, sample_u(p, xi, 32)), abs=1e-13)


def test_evaluate_matches_samples(p1, rng):
    c = random_coeffs(p1, 5, rng)
    f = inverse_l(c, 16)
    np.testing.assert_allclose(evaluate(c, np.arange(16) / 16), f.values, atol=1e-13)


def test_boundary_condition_defect(p1, rng):
    f = random_band_limited(p1, 5, 32, rng)
    assert f.is_bc_compatible()


def test_aliasing_warning():
    with pytest.warns(AliasingWarning):
        check_band(8, 5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        check_band(12, 5)


def test_window_mismatch(rng):
    p = ModelProblem.oh1d(2.0)
    a = random_coeffs(p, 3, rng)
    b = random_coeffs(p, 4, rng, flavor="Lstar")
    with pytest.raises(WindowMismatch):
        plancherel_pair(a, b)


def test_grid_function_validation():
    p = ModelProblem.oh1d(1.0)
    with pytest.raises(ValueError):
        GridFunction(p, np.zeros((4, 4)))
    with pytest.raises(ValueError):
        GridFunction(p, np.zeros(4), side="R")
    with pytest.raises(ValueError):
        SpectralCoeffs(p, 2, "L", np.zeros(3))


def test_restrict_keeps_entries(rng):
    p = ModelProblem.oh1d(2.0)
    c = random_coeffs(p, 6, rng)
    r = c.restrict(2)
    for xi in window_for(p, 2).indices:
        assert r[xi] == c[xi]


@settings(max_examples=20, deadline=None)
@given(h=st.floats(0.2, 5.0), seed=st.integers(0, 2**31))
def test_plancherel_invariant(h, seed):
    p = ModelProblem.oh1d(h)
    f = random_band_limited(p, 8, 32, np.random.default_rng(seed), decay=1.0)
    n2 = l2_norm(f) ** 2
    r = plancherel_pair(forward_l(f, 8), forward_lstar(f, 8))
    assert abs(r - n2) <= 1e-10 * n2
