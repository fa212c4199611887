"""Sobolev spaces H^s_L, the l^p(L) / l^p(L*) scales and the related inequalities.

The Sobolev norm is ``||f||_{H^s} = ||phi_{-s} f||_{L^2}`` where ``phi_t`` is
the L-Fourier multiplier ``<xi>^{-t}``.  At ``s = 0`` and for ``h = 1`` this is
the familiar ``sum <xi>^{2s} f^(xi) conj(f^_*(xi))``.  For ``h != 1`` that
sum is in general complex, so it is kept only as the diagnostic
:func:`sobolev_radicand_literal`.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import quadrature as quad
from .eigensystem import ModelProblem
from .transform import (GridFunction, SpectralCoeffs, WindowMismatch, forward_l, forward_lstar,
                        inverse_l, l2_norm, project_values, synthesize_values)


class NegativeRadicand(ArithmeticError):
    """A Sobolev radicand came out clearly negative (aliasing or bad input)."""


@dataclass(frozen=True)
class SobolevParams:
    s: float


@dataclass
class BoundReport:
    lhs: float
    rhs: float
    ratio: float
    passed: bool | None = None
    p: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def _grid_size(N: int) -> int:
    M = 2
    while M < 2 * (N + 1):
        M *= 2
    return M


def coeff_sobolev_inner(a: SpectralCoeffs, b: SpectralCoeffs, s: float) -> complex:
    """``(f, g)_{H^s}`` from the L-coefficients of ``f`` and ``g``."""
    if a.problem != b.problem or a.N != b.N:
        raise WindowMismatch("coefficient windows differ")
    if a.flavor != "L" or b.flavor != "L":
        raise WindowMismatch("expected L coefficients")
    w = a.window
    ws = w.weight ** s
    if a.problem.self_adjoint:
        return complex(np.sum(ws * a.values * ws * np.conj(b.values)))
    # (phi_{-s} g)^_* via the exact quadrature of the synthesised function
    p = a.problem
    M = _grid_size(a.N)
    vals = synthesize_values(p, ws * b.values, "L", a.N, M)
    gstar = project_values(p, vals, "L", "Lstar", a.N)
    return complex(np.sum(ws * a.values * np.conj(gstar)))


def _check_radicand(r: complex, scale: float) -> float:
    tol_im = 1e-12 * max(scale, 1.0)
    if abs(r.imag) > max(tol_im, 1e-10 * abs(r.real)):
        raise NegativeRadicand(f"Sobolev radicand has imaginary part {r.imag:.3e}")
    if r.real < -1e-8 * max(scale, 1.0):
        raise NegativeRadicand(f"Sobolev radicand {r.real:.3e} is negative")
    return max(r.real, 0.0)


def coeff_sobolev_norm(a: SpectralCoeffs, s: float) -> float:
    r = coeff_sobolev_inner(a, a, s)
    scale = float(np.sum(np.abs(a.values * a.window.weight ** s) ** 2))
    return float(np.sqrt(_check_radicand(r, scale)))


def sobolev_inner(f: GridFunction, g: GridFunction, s: float, N: int) -> complex:
    """``(f, g)_{H^s_L} = (phi_{-s} f, phi_{-s} g)_{L^2}`` on the window ``|xi|_inf <= N``."""
    return coeff_sobolev_inner(forward_l(f, N), forward_l(g, N), s)


def sobolev_norm(f: GridFunction, s: float, N: int) -> float:
    """``||f||_{H^s_L}``; raises :class:`NegativeRadicand` for a radicand below ``-1e-8``."""
    return coeff_sobolev_norm(forward_l(f, N), s)


def sobolev_radicand_literal(f: GridFunction, s: float, N: int) -> complex:
    """``sum <xi>^{2s} f^(xi) conj(f^_*(xi))`` without any symmetrisation."""
    a, b = forward_l(f, N), forward_lstar(f, N)
    return complex(np.sum(a.window.weight ** (2 * s) * a.values * np.conj(b.values)))


def phi_s(f: GridFunction, s: float, N: int) -> GridFunction:
    """The multiplier ``<xi>^{-s}``, an isometry ``H^t -> H^{t+s}``."""
    c = forward_l(f, N)
    return inverse_l(c.with_values(c.values * c.window.weight ** (-s)), f.M)


def _sup_norms(p: ModelProblem, flavor: str):
    """(sup|first family|, sup|partner family|) for a coefficient flavor."""
    if flavor == "L":
        return p.u_sup, p.v_sup
    if flavor == "Lstar":
        return p.v_sup, p.u_sup
    raise ValueError(f"flavor must be 'L' or 'Lstar', got {flavor!r}")


def lp_norm(c: SpectralCoeffs, p: float, flavor: str | None = None) -> float:
    """Weighted ``l^p(L)`` or ``l^p(L*)`` norm of a coefficient table.

    For flavor L, ``1 <= p <= 2`` weights ``|c|^p`` by ``||u_xi||_inf^{2-p}``,
    ``2 <= p < inf`` by ``||v_xi||_inf^{2-p}`` and ``p = inf`` takes
    ``sup |c| / ||v_xi||_inf``.  Flavor Lstar swaps ``u`` and ``v``.
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    flavor = c.flavor if flavor is None else flavor
    su, sv = _sup_norms(c.problem, flavor)
    a = np.abs(c.values)
    if np.isinf(p):
        return float(a.max() / sv) if a.size else 0.0
    wt = su if p <= 2 else sv
    return float(np.sum(a**p * wt ** (2 - p)) ** (1 / p))


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return np.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1)


def lp_norm_function(f: GridFunction, p: float, refine: int = 4) -> float:
    """``||f||_{L^p}`` by the trapezoid rule on the refined grid (endpoints from the BC)."""
    return float(quad.lp_norm_grid(f.values, f.side, f.problem.h, p, refine))


def hausdorff_young_check(f: GridFunction, p: float, N: int, refine: int = 4) -> BoundReport:
    """``||f^||_{l^{p'}(L)}`` against ``||f||_{L^p}``; asserted only at ``p = 1``."""
    if not 1 <= p <= 2:
        raise ValueError("Hausdorff-Young needs 1 <= p <= 2")
    lhs = lp_norm(forward_l(f, N), conjugate_exponent(p), "L")
    rhs = lp_norm_function(f, p, refine)
    ratio = lhs / rhs if rhs > 0 else 0.0
    passed = ratio <= 1 + 1e-8 if p == 1 else None
    return BoundReport(lhs, rhs, ratio, passed, p)


def duality_pair_check(s1: SpectralCoeffs, s2: SpectralCoeffs, p: float) -> BoundReport:
    """``|sum s1 s2| <= ||s1||_{l^p(L)} ||s2||_{l^{p'}(L*)}``."""
    if s1.problem != s2.problem or s1.N != s2.N:
        raise WindowMismatch("coefficient windows differ")
    lhs = float(abs(np.sum(s1.values * s2.values)))
    rhs = lp_norm(s1, p, "L") * lp_norm(s2, conjugate_exponent(p), "Lstar")
    ratio = lhs / rhs if rhs > 0 else 0.0
    return BoundReport(lhs, rhs, ratio, lhs <= rhs + 1e-10, p)


def l2_equivalence_ratio(f: GridFunction, N: int) -> float:
    """Plancherel norm over ``lp_norm(f^, 2, L)``; lies in ``[prod min(1,h), prod max(1,h)]``."""
    num = l2_norm(f)
    den = lp_norm(forward_l(f, N), 2, "L")
    if den == 0:
        raise ZeroDivisionError("zero input")
    return num / den


def embedding_ratio(f: GridFunction, k: float, kappa: float, N: int, refine: int = 4) -> float:
    """``sup|f| / ||f||_{H^{kappa k}}``, a diagnostic for the embedding into C."""
    den = sobolev_norm(f, kappa * k, N)
    if den == 0:
        raise ZeroDivisionError("zero Sobolev norm")
    sup = float(quad.lp_norm_grid(f.values, f.side, f.problem.h, np.inf, refine))
    return sup / den


def riesz_ratio(f: GridFunction, N: int) -> float:
    """``sum |f^|^2 / ||f||^2``, bounded by the Riesz constants of the basis."""
    c = forward_l(f, N)
    return float(np.sum(np.abs(c.values) ** 2) / l2_norm(f) ** 2)


__all__ = [
    "BoundReport", "NegativeRadicand", "SobolevParams", "coeff_sobolev_inner", "coeff_sobolev_norm",
    "sobolev_inner", "sobolev_norm", "sobolev_radicand_literal", "phi_s", "lp_norm", "lp_norm_function",
    "conjugate_exponent", "hausdorff_young_check", "duality_pair_check", "l2_equivalence_ratio",
    "embedding_ratio", "riesz_ratio",
]
