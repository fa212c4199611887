import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from nonharmonic.calculus import (AdmissibleFamily, SingularFamily, WindowUnderflow, adjoint_symbol, alpha_factorial,
                                  amplitude_reduce, apply_derivative, asymptotic_sum, build_derivative_basis, chi,
                                  compose, difference_apply, fit_decay_slope, multi_indices, multi_indices_upto,
                                  shell_sup, symbol_class_fit)
from nonharmonic.eigensystem import ModelProblem, angle_weight, eigenvalue
from nonharmonic.quantization import (SymbolTable, amplitude_symbol_oracle, op_apply, op_apply_star,
                                      symbol_extract)
from nonharmonic.transform import inverse_lstar, l2_inner, random_band_limited, random_coeffs

from conftest import xcomp

TWO_PI_I = 2j * np.pi


def sin_family():
    x0, y0 = sp.symbols("x0 y0", real=True)
    return AdmissibleFamily([sp.sin(2 * sp.pi * (y0 - x0))], 1)


def test_multi_indices():
    assert multi_indices(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert len(multi_indices_upto(2, 3)) == 10
    assert alpha_factorial((3, 2)) == 12


@pytest.mark.parametrize("alpha,expected", [
    ((1,), {(1,): 1 / TWO_PI_I}),
    ((2,), {(1,): -1 / TWO_PI_I, (2,): 1 / TWO_PI_I**2}),
])
def test_default_basis_low_orders(alpha, expected):
    # [DERIVED] exact Taylor solve for q = e^{2 pi i (y - x)} - 1
    basis = build_derivative_basis(AdmissibleFamily.default(1), 3)
    got = basis[alpha]
    assert set(got) == set(expected)
    for beta, c in expected.items():
        assert got[beta] == pytest.approx(c, rel=1e-15)


def test_sin_family_basis():
    # q = sin 2 pi t: D1 = d/(2 pi), D2 = d^2/(2 pi)^2, D3 = d^3/(2 pi)^3 + d/(2 pi)
    basis = build_derivative_basis(sin_family(), 3)
    assert basis[(1,)] == pytest.approx({(1,): 1 / (2 * np.pi)})
    assert basis[(2,)] == pytest.approx({(2,): 1 / (2 * np.pi) ** 2})
    d3 = basis[(3,)]
    assert d3[(3,)] == pytest.approx(1 / (2 * np.pi) ** 3)
    assert d3[(1,)] == pytest.approx(1 / (2 * np.pi))


@pytest.mark.parametrize("n", [0, 1, 2, 3, 5])
def test_derivative_basis_on_exponentials(n):
    # D^{(k)} e^{2 pi i n x} = n (n-1) ... (n-k+1) e^{2 pi i n x}, a falling factorial
    basis = build_derivative_basis(AdmissibleFamily.default(1), 4)
    x = np.arange(32) / 32
    e = np.exp(TWO_PI_I * n * x)
    for k in range(1, 5):
        ff = np.prod([n - j for j in range(k)])
        np.testing.assert_allclose(apply_derivative(basis, (k,), e), ff * e, atol=1e-9)


def test_singular_family():
    x0, y0 = sp.symbols("x0 y0", real=True)
    fam = AdmissibleFamily([(y0 - x0) ** 2], 1)
    with pytest.raises(SingularFamily):
        build_derivative_basis(fam, 2)


def test_family_admissibility_check():
    info = AdmissibleFamily.default(2).check(8)
    assert info["rank_ok"] and info["diag_max"] < 1e-14 and info["min_offdiag"] > 0


def elliptic(p, M, N):
    return SymbolTable.from_function(p, M, N, lambda x, xi: eigenvalue(p, xi) + 2 + np.sin(2 * np.pi * xcomp(x)))


@pytest.mark.parametrize("alpha", [(1,), (2,), (3,)])
def test_difference_fast_equals_general(p1, alpha):
    a = SymbolTable.from_function(p1, 32, 10, lambda x, xi: eigenvalue(p1, xi) * (1 + 0.5 * np.cos(2 * np.pi * xcomp(x))))
    fast = difference_apply(a, alpha, method="fast")
    gen = difference_apply(a, alpha, method="general")
    np.testing.assert_allclose(fast.values, gen.values, atol=1e-10)


def test_difference_fast_equals_general_2d(p2):
    a = SymbolTable.from_function(p2, 16, 4, lambda x, xi: eigenvalue(p2, xi) * (1 + 0.5 * np.cos(2 * np.pi * xcomp(x))))
    for alpha in [(1, 0), (0, 1), (1, 1)]:
        fast = difference_apply(a, alpha, method="fast")
        gen = difference_apply(a, alpha, method="general")
        np.testing.assert_allclose(fast.values, gen.values, atol=1e-10 * np.abs(a.values).max())


def test_difference_lstar_family(p1):
    a = SymbolTable.from_function(p1, 32, 8, lambda x, xi: eigenvalue(p1, xi) + 0 * xcomp(x), flavor="Lstar")
    fast = difference_apply(a, (1,), method="fast")
    gen = difference_apply(a, (1,), method="general")
    np.testing.assert_allclose(fast.values, gen.values, atol=1e-10)
    # backward difference a(xi - 1) - a(xi) of lambda is -2 pi
    np.testing.assert_allclose(fast.values, -2 * np.pi, atol=1e-12)


def test_difference_of_lambda_is_two_pi(p1):
    a = SymbolTable.from_function(p1, 16, 6, lambda x, xi: eigenvalue(p1, xi) + 0 * xcomp(x))
    np.testing.assert_allclose(difference_apply(a, (1,)).values, 2 * np.pi, atol=1e-12)
    np.testing.assert_allclose(difference_apply(a, (2,)).values, 0, atol=1e-12)


def test_difference_flavor_mismatch(p1):
    a = SymbolTable.zeros(p1, 8, 3)
    with pytest.raises(ValueError):
        difference_apply(a, (1,), AdmissibleFamily.default(1, "Lstar"))


def test_compose_shift_is_exact(p1):
    a = SymbolTable.from_function(p1, 32, 10, lambda x, xi: eigenvalue(p1, xi) + 0 * xcomp(x))
    b = SymbolTable.from_function(p1, 32, 10, lambda x, xi: np.exp(TWO_PI_I * xcomp(x)) + 0 * xi[..., 0])
    c = compose(a, b, 2)
    ref = SymbolTable.from_function(p1, 32, c.N, lambda x, xi: eigenvalue(p1, xi + 1) * np.exp(TWO_PI_I * xcomp(x)))
    np.testing.assert_allclose(c.values, ref.values, atol=1e-11)


def test_compose_agrees_with_operator_product():
    # a second-order x-dependence terminates the expansion at three terms
    p = ModelProblem.oh1d(2.0)
    M, N = 32, 12
    a = SymbolTable.from_function(p, M, N, lambda x, xi: 1 / angle_weight(p, xi) + 0 * xcomp(x))
    b = SymbolTable.from_function(p, M, N, lambda x, xi: (1 + np.exp(4j * np.pi * xcomp(x))) / angle_weight(p, xi))
    c = compose(b, a, 3)
    ex = symbol_extract(lambda f: op_apply(b, op_apply(a, f)), p, M, c.N)
    # b after a: x-dependence of b is on the left, so one term suffices
    np.testing.assert_allclose(c.values, ex.values, atol=1e-13)
    c2 = compose(a, b, 3)
    ex2 = symbol_extract(lambda f: op_apply(a, op_apply(b, f)), p, M, c2.N)
    np.testing.assert_allclose(c2.values, ex2.values, atol=1e-12)


def test_compose_window_underflow(p1):
    a = SymbolTable.zeros(p1, 8, 1)
    with pytest.raises(WindowUnderflow):
        compose(a, a, 3)


def test_adjoint_pairing_positive_modes(p1, rng):
    a = SymbolTable.from_function(
        p1, 32, 12, lambda x, xi: (2 + np.exp(TWO_PI_I * xcomp(x)) + 0.5 * np.exp(3 * TWO_PI_I * xcomp(x)))
        / angle_weight(p1, xi))
    t = adjoint_symbol(a, 4)
    assert t.flavor == "Lstar"
    f = random_band_limited(p1, t.N, 32, rng)
    g = inverse_lstar(random_coeffs(p1, t.N, rng, flavor="Lstar"), 32)
    lhs = l2_inner(op_apply(a, f), g)
    assert l2_inner(f, op_apply_star(t, g)) == pytest.approx(lhs, rel=1e-11)


def test_adjoint_of_multiplier_is_conjugate(p1):
    a = SymbolTable.multiplier(p1, 16, 6, lambda xi: eigenvalue(p1, xi))
    t = adjoint_symbol(a, 3)
    np.testing.assert_allclose(t.values, np.conj(a.restrict(t.N).values), atol=1e-12)


def test_adjoint_negative_mode_is_asymptotic():
    # e^{-2 pi i x} does not terminate; the error still falls on high shells
    p = ModelProblem.oh1d(1.0)
    M, N = 64, 40
    a = SymbolTable.from_function(p, M, N, lambda x, xi: (2 + np.sin(2 * np.pi * xcomp(x))) / angle_weight(p, xi))
    xi = a.window.indices[:, 0]
    ah = np.fft.fft(a.values, axis=0) / M
    x = np.arange(M) / M
    pos = {int(k): j for j, k in enumerate(xi)}
    exact = np.zeros_like(a.values)
    for j, k in enumerate(xi):
        for n in (-1, 0, 1):
            if k - n in pos:
                exact[:, j] += np.conj(ah[n % M, pos[k - n]]) * np.exp(-TWO_PI_I * n * x)
    errs = []
    for nt in (1, 2, 3, 4):
        t = adjoint_symbol(a, nt)
        sel = (np.abs(xi[: t.values.shape[1]]) >= 20) & (np.abs(xi[: t.values.shape[1]]) <= 30)
        errs.append(np.abs(t.values - exact[:, : t.values.shape[1]])[:, sel].max())
    assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))


@pytest.mark.parametrize("h", [1.0, 2.0])
def test_amplitude_shift_reduces_exactly(h):
    p = ModelProblem.oh1d(h)
    psi = lambda xi: 1 / (1 + xi[..., 0] ** 2)  # noqa: E731
    amp = lambda x, y, xi: np.exp(TWO_PI_I * (xcomp(y) - xcomp(x))) * psi(xi)  # noqa: E731
    red = amplitude_reduce(p, amp, 32, 10, 2)
    ref = SymbolTable.from_function(p, 32, red.N, lambda x, xi: psi(xi + 1) + 0 * xcomp(x))
    np.testing.assert_allclose(red.values, ref.values, atol=1e-13)


def test_amplitude_reduce_matches_oracle():
    p = ModelProblem.oh1d(2.0)
    amp = lambda x, y, xi: (np.exp(TWO_PI_I * (xcomp(y) - xcomp(x))) - 1) / (1 + xi[..., 0] ** 2)  # noqa: E731
    orc = amplitude_symbol_oracle(p, amp, 32, 10)
    red = amplitude_reduce(p, amp, 32, 10, 2)
    np.testing.assert_allclose(red.values, orc.restrict(red.N).values, atol=1e-13)


def test_chi_ramp():
    t = np.array([0.0, 0.5, 0.75, 1.0, 3.0])
    v = chi(t)
    assert v[0] == 0 and v[1] == 0 and v[3] == 1 and v[4] == 1
    assert v[2] == pytest.approx(0.5)


@settings(max_examples=30, deadline=None)
@given(t=st.floats(0.5, 1.0))
def test_chi_monotone(t):
    assert 0 <= chi(np.array([t]))[0] <= chi(np.array([min(t + 0.05, 1.0)]))[0] + 1e-15


def test_asymptotic_sum(p1):
    a = SymbolTable.multiplier(p1, 8, 6, lambda xi: angle_weight(p1, xi))
    b = SymbolTable.multiplier(p1, 8, 5, lambda xi: np.ones(len(xi)))
    s = asymptotic_sum([a, b], [1, 0])
    assert s.N == 5
    # chi(<xi>) = 1 for every xi, chi(<xi>/2) = 0 at xi = 0 on every problem with <0> < 1
    assert s.values[0, 0] == pytest.approx(a.values[0, 0] + chi(np.array([a.window.weight[0] / 2]))[0])
    with pytest.raises(ValueError):
        asymptotic_sum([a, b], [0, 1])


def test_fit_decay_slope_of_power(p1):
    a = SymbolTable.multiplier(p1, 8, 40, lambda xi: angle_weight(p1, xi) ** -2.0)
    assert fit_decay_slope(a, n_min=8) == pytest.approx(-2.0, abs=1e-2)
    n, s = shell_sup(a)
    assert len(n) == 41 and s[0] == pytest.approx(angle_weight(p1, 0) ** -2)


def test_symbol_class_fit_finite(p1):
    a = SymbolTable.from_function(p1, 32, 12, lambda x, xi: eigenvalue(p1, xi) + 2 + np.sin(2 * np.pi * xcomp(x)))
    table = symbol_class_fit(a, 1.0)
    assert max(table.values()) < 10


def test_compose_remainder_slopes():
    # compose(b, a) against the exact operator product, b of order -1, a of order 1
    p = ModelProblem.oh1d(1.0)
    M, N = 128, 40
    a = elliptic(p, M, N)
    b = SymbolTable.from_function(
        p, M, N, lambda x, xi: (2 + np.cos(2 * np.pi * xcomp(x)) + 0.3 * np.sin(4 * np.pi * xcomp(x))) / angle_weight(p, xi))
    ex = symbol_extract(lambda f: op_apply(b, op_apply(a, f)), p, M, N - 1)
    slopes = []
    for nt in (1, 2, 3):
        c = compose(b, a, nt)
        n = min(c.N, ex.N)
        slopes.append(fit_decay_slope(ex.restrict(n) - c.restrict(n), n_max=n - 2))
    for nt, s in zip((1, 2, 3), slopes):
        assert s <= 0 - nt + 0.5
    steps = -np.diff(slopes)
    assert np.all(np.abs(steps - 1) <= 0.3)
