"""L- and L*-convolution.

The spectral routes multiply coefficient tables.  For ``Oh1D`` the
L-convolution also has the explicit form

    (f * g)(x) = int_0^x f(x - t) g(t) dt + (1/h) int_x^1 f(1 + x - t) g(t) dt,

which :func:`conv_integral_oh1` evaluates by quadrature as an independent
oracle.
"""
from __future__ import annotations

import numpy as np

from . import quadrature as quad
from .transform import (GridFunction, WindowMismatch, _same_grid, forward_l, forward_lstar,
                        inverse_l, inverse_lstar)


def conv_spectral(f: GridFunction, g: GridFunction, N: int) -> GridFunction:
    """``sum_xi f^(xi) g^(xi) u_xi`` sampled on the common grid."""
    _same_grid(f, g)
    fh, gh = forward_l(f, N), forward_l(g, N)
    return inverse_l(fh.with_values(fh.values * gh.values), f.M)


def conv_star_spectral(f: GridFunction, g: GridFunction, N: int) -> GridFunction:
    """``sum_xi f^_*(xi) g^_*(xi) v_xi`` sampled on the common grid."""
    _same_grid(f, g)
    fh, gh = forward_lstar(f, N), forward_lstar(g, N)
    return inverse_lstar(fh.with_values(fh.values * gh.values), f.M)


def _horner_eval(coeffs, N, h, y):
    """``sum_{|xi|<=N} c_xi h^y e^{2 pi i y xi}`` with c in ascending xi order."""
    z = np.exp(2j * np.pi * y)
    acc = np.zeros_like(z)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc * z ** (-N) * h**y


def _ascending(c):
    w = c.window
    order = np.argsort(w.indices[:, 0])
    return c.values[order]


def conv_integral_oh1(f: GridFunction, g: GridFunction, N: int | None = None,
                      method: str = "trapezoid", order: int = 20, panels: int | None = None) -> GridFunction:
    """Quadrature of the explicit O_h^(1) convolution integral at every grid point.

    Parameters
    ----------
    f, g : GridFunction
        Samples on the same ``Oh1D`` grid.
    N : int, optional
        Window used for band-limited evaluation of ``f`` and ``g`` off the
        grid (``method="gauss"`` only).  Defaults to ``M//2 - 1``.
    method : {"trapezoid", "gauss"}
        ``"trapezoid"`` is the split trapezoid rule on the grid itself, with
        the node ``t = x`` shared by both pieces.  For band-limited input it
        is exact up to roundoff: the boundary condition glues the two pieces
        into one periodic trigonometric polynomial in ``t``.  ``"gauss"``
        uses composite Gauss-Legendre on ``[0, x]`` and ``[x, 1]`` with
        off-grid band-limited evaluation, and does not rely on that gluing.
    order, panels : int
        Gauss points per panel and panels per unit length.
    """
    _same_grid(f, g)
    p = f.problem
    if p.kind != "Oh1D":
        raise ValueError("the integral convolution formula is stated for Oh1D only")
    h = p.h[0]
    M = f.M
    if method == "trapezoid":
        return _conv_trapezoid(f, g)
    if method != "gauss":
        raise ValueError(f"unknown method {method!r}")
    if N is None:
        N = M // 2 - 1
    cf = _ascending(forward_l(f, N))
    cg = _ascending(forward_l(g, N))
    if panels is None:
        # keep the phase swept per panel small compared with the rule's degree
        panels = max(2, int(np.ceil(2 * np.pi * (2 * N + 1) / order)))
    t0, w0 = quad.gauss_legendre(order)
    x = np.arange(M) / M
    out = np.zeros(M, dtype=complex)

    def piece(a, b, shift):
        # sum over panels of [a, b] for every x at once; a, b are arrays over x
        n_pan = np.maximum(1, np.ceil((b - a) * panels)).astype(int)
        res = np.zeros(M, dtype=complex)
        for k in range(n_pan.max()):
            active = k < n_pan
            width = (b - a) / n_pan
            lo = a + k * width
            t = lo[:, None] + width[:, None] * t0[None, :]
            wt = width[:, None] * w0[None, :]
            vals = _horner_eval(cf, N, h, shift + x[:, None] - t) * _horner_eval(cg, N, h, t)
            res += np.where(active, np.sum(wt * vals, axis=1), 0)
        return res

    out += piece(np.zeros(M), x, 0.0)
    out += piece(x, np.ones(M), 1.0) / h
    return GridFunction(p, out, "L")


def _conv_trapezoid(f: GridFunction, g: GridFunction) -> GridFunction:
    p = f.problem
    h = p.h[0]
    M = f.M
    fe = quad.extend_endpoint(f.values, f.side, p.h)  # f at j/M, j = 0..M
    ge = quad.extend_endpoint(g.values, g.side, p.h)
    out = np.empty(M, dtype=complex)
    for k in range(M):
        # [0, x_k]: t_j = j/M, j = 0..k, argument x - t = (k-j)/M
        a = fe[: k + 1][::-1] * ge[: k + 1]
        left = (a.sum() - 0.5 * (a[0] + a[-1])) / M if k > 0 else 0.0
        # [x_k, 1]: t_j, j = k..M, argument 1 + x - t = (M+k-j)/M
        b = fe[k:][::-1] * ge[k:]
        right = (b.sum() - 0.5 * (b[0] + b[-1])) / M
        out[k] = left + right / h
    return GridFunction(p, out, "L")


def conv_l1_ratio(f: GridFunction, g: GridFunction, N: int) -> float:
    """``||f * g||_{L^1} / (||f||_2 ||g||_2)`` for fitting the L^1 bound constant."""
    from .transform import l2_norm

    c = conv_spectral(f, g, N)
    num = float(quad.lp_norm_grid(c.values, "L", f.problem.h, 1.0))
    den = l2_norm(f) * l2_norm(g)
    if den == 0:
        raise ZeroDivisionError("zero input")
    return num / den


__all__ = ["conv_spectral", "conv_star_spectral", "conv_integral_oh1", "conv_l1_ratio", "WindowMismatch"]
