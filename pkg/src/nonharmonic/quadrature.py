"""Exact integration of weighted trigonometric interpolants on uniform grids.

A function sampled on ``{k/M}^d`` that lives on the ``L`` side is read as
``f(x) = prod_j h_j^{x_j} p(x)`` and on the ``Lstar`` side as
``f(x) = prod_j h_j^{-x_j} p(x)``, with ``p`` the trigonometric interpolant of
the de-weighted samples.  Every integral used by the package reduces to
``int prod_j h_j^{e x_j} r(x) dx`` with ``r`` a trigonometric polynomial and
``e`` an integer exponent, and the one-dimensional moments

    int_0^1 h^{e x} e^{2 pi i k x} dx = (h^e - 1) / (e ln h + 2 pi i k)

are known in closed form.  The Nyquist coefficient of an even grid is split
symmetrically between ``-M/2`` and ``+M/2``.
"""
from __future__ import annotations

import numpy as np
from scipy import fft as sfft
from scipy.signal import fftconvolve

SIDES = {"L": 1, "Lstar": -1}


def side_sign(side: str) -> int:
    try:
        return SIDES[side]
    except KeyError:
        raise ValueError(f"side must be 'L' or 'Lstar', got {side!r}") from None


def grid_points(M: int, d: int = 1) -> np.ndarray:
    """Uniform grid ``{k/M}^d`` with shape (M, ..., M, d)."""
    x = np.arange(M) / M
    mesh = np.meshgrid(*([x] * d), indexing="ij")
    return np.stack(mesh, axis=-1)


def weight(h, exponent, M: int) -> np.ndarray:
    """``prod_j h_j^{exponent x_j}`` on the grid, shape (M,)*d."""
    h = np.atleast_1d(h)
    x = np.arange(M) / M
    out = np.ones((M,) * len(h))
    for j, hj in enumerate(h):
        shape = [1] * len(h)
        shape[j] = M
        out = out * (hj ** (exponent * x)).reshape(shape)
    return out


def moments(h: float, e: int, k) -> np.ndarray:
    """``int_0^1 h^{e x} e^{2 pi i k x} dx`` for integer frequencies ``k``."""
    k = np.asarray(k, dtype=float)
    a = e * np.log(h)
    if a == 0.0:
        return (k == 0).astype(complex)
    return (np.expm1(a) + 0j) / (a + 2j * np.pi * k)


def split_coeffs(values, d: int) -> np.ndarray:
    """Interpolant coefficients of periodic samples over the trailing ``d`` axes.

    Output modes run ``-M/2 .. M/2`` (length M+1 per axis) for even M and
    ``-(M-1)/2 .. (M-1)/2`` for odd M.
    """
    axes = tuple(range(-d, 0))
    M = values.shape[-1]
    c = sfft.fftn(values, axes=axes) / M**d
    c = sfft.fftshift(c, axes=axes)
    if M % 2 == 0:
        for ax in axes:
            first = np.take(c, [0], axis=ax) / 2
            c = np.concatenate([first, np.take(c, np.arange(1, M), axis=ax), first], axis=ax)
    return c


def coeff_freqs(M: int) -> np.ndarray:
    if M % 2 == 0:
        return np.arange(-M // 2, M // 2 + 1)
    return np.arange(-(M - 1) // 2, (M - 1) // 2 + 1)


def _contract(c, mats, d):
    """Apply one matrix per trailing axis: out[..., i_j, ...] = sum mats[j][i_j, n_j] c[..., n_j, ...]."""
    for j, T in enumerate(mats):
        ax = c.ndim - d + j
        c = np.moveaxis(np.tensordot(c, T, axes=([ax], [1])), -1, ax)
    return c


def project(values, side: str, target: str, h, freqs) -> np.ndarray:
    """Coefficient integrals of sampled functions against a biorthogonal family.

    Computes ``int f(x) conj(w_xi(x)) dx`` over the cube of frequencies
    ``freqs`` (1D integer array, the same per axis) where ``w = v`` for
    ``target == "L"`` and ``w = u`` for ``target == "Lstar"``.  When the
    total exponent vanishes this is the plain DFT of the de-weighted samples
    (periodic in xi, so out-of-band requests alias); otherwise it is the
    exact integral of the interpolant.
    """
    h = np.atleast_1d(h)
    d = len(h)
    s = side_sign(side)
    t = -side_sign(target)
    M = values.shape[-1]
    p = values * weight(h, -s, M)
    e = s + t
    if e == 0 or np.all(h == 1.0):
        axes = tuple(range(-d, 0))
        c = sfft.fftn(p, axes=axes) / M**d
        idx = np.mod(freqs, M)
        for j in range(d):
            c = np.take(c, idx, axis=c.ndim - d + j)
        return c
    c = split_coeffs(p, d)
    eta = coeff_freqs(M)
    mats = [moments(hj, e, eta[None, :] - np.asarray(freqs)[:, None]) for hj in h]
    return _contract(c, mats, d)


def inner(f, side_f: str, g, side_g: str, h) -> np.ndarray:
    """Exact ``int f conj(g) dx`` for sampled functions (batched over leading axes)."""
    h = np.atleast_1d(h)
    d = len(h)
    M = f.shape[-1]
    sf, sg = side_sign(side_f), side_sign(side_g)
    c = split_coeffs(f * weight(h, -sf, M), d)
    dd = split_coeffs(g * weight(h, -sg, M), d)
    e = sf + sg
    if e == 0 or np.all(h == 1.0):
        axes = tuple(range(-d, 0))
        return np.sum(c * np.conj(dd), axis=axes)
    axes = tuple(range(-d, 0))
    rev = np.conj(np.flip(dd, axis=axes))
    r = fftconvolve(c, rev, axes=axes)
    K = r.shape[-1]
    k = np.arange(K) - (K - 1) // 2
    # contract trailing axes, last first
    for hj in reversed(h):
        r = r @ moments(hj, e, k)
    return r


def upsample(values, side: str, h, factor: int) -> np.ndarray:
    """Samples of the interpolant on the grid refined by ``factor`` per axis."""
    h = np.atleast_1d(h)
    d = len(h)
    M = values.shape[-1]
    if factor == 1:
        return np.array(values, dtype=complex)
    s = side_sign(side)
    c = split_coeffs(values * weight(h, -s, M), d)
    eta = coeff_freqs(M)
    Mf = M * factor
    full = np.zeros(c.shape[: c.ndim - d] + (Mf,) * d, dtype=complex)
    idx = np.mod(eta, Mf)
    # scatter-add per axis through an index grid
    grids = np.meshgrid(*([idx] * d), indexing="ij")
    np.add.at(full, (Ellipsis,) + tuple(grids), c)
    fine = sfft.ifftn(full, axes=tuple(range(-d, 0))) * Mf**d
    return fine * weight(h, s, Mf)


def extend_endpoint(values, side: str, h) -> np.ndarray:
    """Append the samples at ``x_j = 1`` using the boundary condition."""
    h = np.atleast_1d(h)
    d = len(h)
    s = side_sign(side)
    out = values
    for j in range(d):
        ax = out.ndim - d + j
        first = np.take(out, [0], axis=ax) * h[j] ** s
        out = np.concatenate([out, first], axis=ax)
    return out


def lp_norm_grid(values, side: str, h, p: float, refine: int = 4) -> np.ndarray:
    """``||f||_{L^p}`` by the endpoint-inclusive trapezoid rule on a refined grid."""
    h = np.atleast_1d(h)
    d = len(h)
    fine = upsample(values, side, h, refine)
    if np.isinf(p):
        return np.max(np.abs(extend_endpoint(fine, side, h)), axis=tuple(range(-d, 0)))
    g = np.abs(extend_endpoint(fine, side, h)) ** p
    n = g.shape[-1] - 1
    w = np.full(n + 1, 1.0 / n)
    w[0] = w[-1] = 0.5 / n
    for _ in range(d):
        g = g @ w
    return g ** (1.0 / p)


def gauss_legendre(n: int, a: float = 0.0, b: float = 1.0):
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * t + 0.5 * (b + a), 0.5 * (b - a) * w
