import numpy as np
import pytest

from nonharmonic import quadrature as quad


@pytest.mark.parametrize("h", [0.5, 2.0, 5.0])
@pytest.mark.parametrize("e", [-2, -1, 1, 2])
@pytest.mark.parametrize("k", [-3, 0, 4])
def test_moments_match_gauss_legendre(h, e, k):
    x, w = quad.gauss_legendre(80)
    ref = np.sum(w * h ** (e * x) * np.exp(2j * np.pi * k * x))
    assert quad.moments(h, e, k) == pytest.approx(ref, abs=1e-13)


def test_moments_unweighted_is_kronecker():
    np.testing.assert_array_equal(quad.moments(1.0, 2, np.array([-1, 0, 1])), [0, 1, 0])


def test_side_sign():
    assert quad.side_sign("L") == 1 and quad.side_sign("Lstar") == -1
    with pytest.raises(ValueError):
        quad.side_sign("R")


def test_grid_points_shape():
    g = quad.grid_points(4, 2)
    assert g.shape == (4, 4, 2)
    assert g[1, 2].tolist() == [0.25, 0.5]


@pytest.mark.parametrize("h", [0.5, 2.0])
def test_inner_of_weighted_exponentials_is_exact(h):
    M = 32
    x = np.arange(M) / M
    f = h**x * np.exp(2j * np.pi * 3 * x)
    g = h**x * np.exp(2j * np.pi * 1 * x)
    # int h^{2x} e^{4 pi i x}
    val = quad.inner(f, "L", g, "L", (h,))
    assert complex(val) == pytest.approx(quad.moments(h, 2, 2), abs=1e-14)


@pytest.mark.parametrize("p", [1, 2, np.inf])
def test_lp_norm_grid_constant(p):
    vals = np.full(16, 2.0 + 0j)
    assert float(quad.lp_norm_grid(vals, "L", (1.0,), p)) == pytest.approx(2.0)


def test_lp_norm_grid_weighted_l1():
    # ||2^x||_{L^1} = 1/ln 2
    vals = 2.0 ** (np.arange(32) / 32) + 0j
    assert float(quad.lp_norm_grid(vals, "L", (2.0,), 1, refine=16)) == pytest.approx(1 / np.log(2), rel=1e-5)
