"""Symbols, L-quantization and operator-level diagnostics.

An operator is stored through its symbol ``a(x, xi)`` tabulated on the grid
``{k/M}^d`` times the window ``|xi|_inf <= N``:

    Op_L(a) f(x) = sum_xi u_xi(x) a(x, xi) f^(xi),
    Op_L*(t) g(x) = sum_xi v_xi(x) t(x, xi) g^_*(xi).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import lru_cache
import itertools
import logging
from typing import Callable

import numpy as np
from scipy import linalg

from . import quadrature as quad
from .eigensystem import ModelProblem, Window, eval_u, eval_v, window_for
from .transform import (GridFunction, SpectralCoeffs, WindowMismatch, check_band, forward_l,
                        forward_lstar, inverse_l, inverse_lstar, project_values, sample_u, sample_v)

log = logging.getLogger(__name__)

Operator = Callable[[GridFunction], GridFunction]


@lru_cache(maxsize=64)
def basis_matrix(p: ModelProblem, M: int, N: int, family: str = "L") -> np.ndarray:
    """``w_xi(x_k)`` with shape (M^d, W); ``w = u`` for family L and ``v`` for Lstar."""
    w = window_for(p, N)
    pts = quad.grid_points(M, p.d).reshape(-1, 1, p.d)
    fn = eval_u if family == "L" else eval_v
    out = fn(p, w.indices[None, :, :], pts)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SymbolTable:
    """``a(x_k, xi)`` over the grid (flattened, C order) times the window.

    Parameters
    ----------
    problem : ModelProblem
    M : int
        Grid points per axis.
    N : int
        Window truncation.
    values : ndarray, shape (M**d, W)
    flavor : {"L", "Lstar"}
        Whether the table is quantized against ``u`` (an L-symbol sigma) or
        against ``v`` (an L*-symbol tau).
    """

    problem: ModelProblem
    M: int
    N: int
    values: np.ndarray
    flavor: str = "L"

    def __post_init__(self):
        quad.side_sign(self.flavor)
        vals = np.asarray(self.values, dtype=complex)
        shape = (self.M**self.problem.d, self.window.size)
        if vals.shape != shape:
            try:
                vals = np.broadcast_to(vals, shape).copy()
            except ValueError:
                raise ValueError(f"symbol table needs shape {shape}, got {vals.shape}") from None
        object.__setattr__(self, "values", vals)

    # construction -------------------------------------------------------
    @classmethod
    def from_function(cls, p: ModelProblem, M: int, N: int, fn, flavor="L") -> "SymbolTable":
        """Tabulate ``fn(x, xi)``; ``x`` has shape (M^d, 1, d), ``xi`` (1, W, d)."""
        w = window_for(p, N)
        x = quad.grid_points(M, p.d).reshape(-1, 1, p.d)
        xi = w.indices[None, :, :]
        return cls(p, M, N, fn(x, xi), flavor)

    @classmethod
    def multiplier(cls, p: ModelProblem, M: int, N: int, sigma, flavor="L") -> "SymbolTable":
        """x-independent table from window-ordered values or a callable of xi (W, d)."""
        w = window_for(p, N)
        vals = sigma(w.indices) if callable(sigma) else np.asarray(sigma)
        return cls(p, M, N, np.broadcast_to(vals, (M**p.d, w.size)), flavor)

    @classmethod
    def zeros(cls, p, M, N, flavor="L"):
        return cls(p, M, N, np.zeros((M**p.d, window_for(p, N).size)), flavor)

    # views ----------------------------------------------------------------
    @property
    def window(self) -> Window:
        return window_for(self.problem, self.N)

    @property
    def points(self) -> np.ndarray:
        return quad.grid_points(self.M, self.problem.d).reshape(-1, self.problem.d)

    @property
    def x_independent(self) -> bool:
        v = self.values
        return bool(np.all(np.abs(v - v[:1]) <= 1e-14 * max(1.0, np.abs(v).max(initial=0.0))))

    def at(self, xi) -> np.ndarray:
        """The x-slice ``a(., xi)`` on the grid, shape (M,)*d."""
        return self.values[:, self.window.position(xi)].reshape((self.M,) * self.problem.d)

    def with_values(self, values, N=None, flavor=None) -> "SymbolTable":
        return SymbolTable(self.problem, self.M, self.N if N is None else N, values,
                           self.flavor if flavor is None else flavor)

    def restrict(self, N: int) -> "SymbolTable":
        sub = window_for(self.problem, N)
        return self.with_values(self.window.restrict(self.values, sub), N=N)

    def cube(self) -> np.ndarray:
        """Values as (M^d, 2N+1, ..., 2N+1); entries are dense since windows are cubes."""
        return self.window.to_cube(self.values)

    def conj(self) -> "SymbolTable":
        return self.with_values(np.conj(self.values))

    def _compatible(self, other: "SymbolTable") -> "SymbolTable":
        if (self.problem, self.M, self.flavor) != (other.problem, other.M, other.flavor):
            raise WindowMismatch("symbol tables live on different problems, grids or flavors")
        return other

    def __add__(self, other):
        if isinstance(other, SymbolTable):
            self._compatible(other)
            n = min(self.N, other.N)
            return self.restrict(n).with_values(self.restrict(n).values + other.restrict(n).values)
        return self.with_values(self.values + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, SymbolTable):
            return self + (-1.0) * other
        return self.with_values(self.values - other)

    def __mul__(self, other):
        if isinstance(other, SymbolTable):
            self._compatible(other)
            n = min(self.N, other.N)
            return self.restrict(n).with_values(self.restrict(n).values * other.restrict(n).values)
        return self.with_values(self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def max_abs(self) -> float:
        return float(np.abs(self.values).max(initial=0.0))


def _check_table(a: SymbolTable, f: GridFunction):
    if a.problem != f.problem or a.M != f.M:
        raise WindowMismatch("symbol table and function live on different problems or grids")


def apply_coeffs(a: SymbolTable, c: np.ndarray) -> np.ndarray:
    """``sum_xi w_xi(x) a(x, xi) c(xi)`` on the grid (batched over leading axes of c)."""
    B = basis_matrix(a.problem, a.M, a.N, a.flavor)
    out = np.asarray(c) @ (B * a.values).T
    return out.reshape(out.shape[:-1] + (a.M,) * a.problem.d)


def op_apply(a: SymbolTable, f: GridFunction) -> GridFunction:
    """``Op_L(a) f``; ``a`` must be an L-symbol."""
    _check_table(a, f)
    if a.flavor != "L":
        raise WindowMismatch("op_apply quantizes L-symbols; use op_apply_star")
    check_band(a.M, a.N)
    return GridFunction(a.problem, apply_coeffs(a, forward_l(f, a.N).values), "L")


def op_apply_star(t: SymbolTable, g: GridFunction) -> GridFunction:
    """``Op_L*(t) g = sum_xi v_xi t(x, xi) g^_*(xi)``."""
    _check_table(t, g)
    if t.flavor != "Lstar":
        raise WindowMismatch("op_apply_star quantizes L*-symbols")
    check_band(t.M, t.N)
    return GridFunction(t.problem, apply_coeffs(t, forward_lstar(g, t.N).values), "Lstar")


def symbol_extract(A: Operator, p: ModelProblem, M: int, N: int, flavor: str = "L") -> SymbolTable:
    """``a(x, xi) = w_xi(x)^{-1} (A w_xi)(x)`` with ``w = u`` (L) or ``v`` (Lstar).

    Division is safe because ``|w_xi| >= prod min(h, 1/h) > 0`` on the grid.
    """
    w = window_for(p, N)
    B = basis_matrix(p, M, N, flavor)
    if np.abs(B).min() <= 0:
        raise ZeroDivisionError("eigenfunction vanishes on the grid")
    sample = sample_u if flavor == "L" else sample_v
    cols = np.empty((M**p.d, w.size), dtype=complex)
    for j, xi in enumerate(w.indices):
        cols[:, j] = np.asarray(A(sample(p, xi, M)).values).reshape(-1)
    return SymbolTable(p, M, N, cols / B, flavor)


def schwartz_kernel(a: SymbolTable) -> np.ndarray:
    """``K(x_k, y_l) = sum_xi u_xi(x_k) a(x_k, xi) conj(v_xi(y_l))``, shape (M^d, M^d).

    For an L*-table the roles of ``u`` and ``v`` are swapped.
    """
    B = basis_matrix(a.problem, a.M, a.N, a.flavor)
    partner = basis_matrix(a.problem, a.M, a.N, "Lstar" if a.flavor == "L" else "L")
    return (B * a.values) @ np.conj(partner).T


def kernel_apply(K: np.ndarray, f: GridFunction) -> GridFunction:
    """Trapezoid quadrature of ``int K(x, y) f(y) dy`` on the grid."""
    M, d = f.M, f.problem.d
    vals = K @ f.values.reshape(-1) / M**d
    return f.with_values(vals.reshape((M,) * d))


def conv_kernel(a: SymbolTable) -> np.ndarray:
    """``k_A(x_k, y_l) = sum_xi a(x_k, xi) u_xi(y_l)``, shape (M^d, M^d)."""
    B = basis_matrix(a.problem, a.M, a.N, "L")
    return a.values @ B.T


def conv_kernel_apply(a: SymbolTable, f: GridFunction) -> GridFunction:
    """``A f(x) = (f *_L k_A(x, .))(x)``, evaluated one x at a time."""
    from .convolution import conv_spectral

    _check_table(a, f)
    k = conv_kernel(a)
    shape = (a.M,) * a.problem.d
    out = np.empty(a.M**a.problem.d, dtype=complex)
    for i in range(out.size):
        kx = GridFunction(a.problem, k[i].reshape(shape), "L")
        out[i] = conv_spectral(f, kx, a.N).values.reshape(-1)[i]
    return f.with_values(out.reshape(shape), side="L")


# multipliers --------------------------------------------------------------
def _sigma_values(p: ModelProblem, N: int, sigma) -> np.ndarray:
    w = window_for(p, N)
    vals = sigma(w.indices) if callable(sigma) else np.asarray(sigma, dtype=complex)
    if vals.shape != (w.size,):
        raise ValueError(f"multiplier needs {w.size} window values, got {vals.shape}")
    return vals


def multiplier_apply(sigma, f: GridFunction, N: int) -> GridFunction:
    """``sum_xi sigma(xi) f^(xi) u_xi``."""
    c = forward_l(f, N)
    return inverse_l(c.with_values(_sigma_values(f.problem, N, sigma) * c.values), f.M)


def multiplier_apply_star(sigma, g: GridFunction, N: int) -> GridFunction:
    """L*-multiplier ``sum_xi sigma(xi) g^_*(xi) v_xi``."""
    c = forward_lstar(g, N)
    return inverse_lstar(c.with_values(_sigma_values(g.problem, N, sigma) * c.values), g.M)


def adjoint_multiplier(sigma):
    """The L*-symbol of the adjoint of an L-multiplier: ``conj(sigma)``."""
    if callable(sigma):
        return lambda xi: np.conj(sigma(xi))
    return np.conj(np.asarray(sigma))


# amplitudes ---------------------------------------------------------------
def tabulate_amplitude(p: ModelProblem, amp, M: int, N: int) -> np.ndarray:
    """``amp(x, y, xi)`` as an array (M^d, M^d, W); arguments broadcast with trailing axis d."""
    w = window_for(p, N)
    pts = quad.grid_points(M, p.d).reshape(-1, p.d)
    vals = amp(pts[:, None, None, :], pts[None, :, None, :], w.indices[None, None, :, :])
    return np.broadcast_to(vals, (pts.shape[0], pts.shape[0], w.size))


def amplitude_apply(p: ModelProblem, amp, f: GridFunction, N: int, table=None) -> GridFunction:
    """``sum_xi u_xi(x) int conj(v_xi(y)) amp(x, y, xi) f(y) dy`` by the trapezoid rule in y.

    The y-integrand is periodic when ``amp`` is periodic in y and ``f`` is an
    L-side function, so the rule is exact on band-limited data.
    """
    M = f.M
    T = tabulate_amplitude(p, amp, M, N) if table is None else table
    V = basis_matrix(p, M, N, "Lstar")
    U = basis_matrix(p, M, N, "L")
    fy = f.values.reshape(-1)
    # inner[x, xi] = (1/M^d) sum_y conj(v_xi(y)) amp(x, y, xi) f(y)
    inner = np.einsum("yw,xyw,y->xw", np.conj(V), T, fy) / M**p.d
    out = np.sum(U * inner, axis=1)
    return GridFunction(p, out.reshape((M,) * p.d), "L")


def amplitude_symbol_oracle(p: ModelProblem, amp, M: int, N: int) -> SymbolTable:
    """Symbol of the amplitude operator, extracted at operator level."""
    T = tabulate_amplitude(p, amp, M, N)
    return symbol_extract(lambda f: amplitude_apply(p, amp, f, N, table=T), p, M, N)


# kernel decay -------------------------------------------------------------
@dataclass
class KernelDecayReport:
    peak: float
    offdiag_max: float
    offdiag_ratio: float
    slope: float | None
    shells: list = field(default_factory=list)
    passed_offdiag: bool | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def torus_distance(p: ModelProblem, M: int) -> np.ndarray:
    """Euclidean torus distance between grid points, shape (M^d, M^d)."""
    pts = quad.grid_points(M, p.d).reshape(-1, p.d)
    diff = np.abs(pts[:, None, :] - pts[None, :, :])
    diff = np.minimum(diff, 1 - diff)
    return np.sqrt(np.sum(diff**2, axis=-1))


def kernel_decay_report(a: SymbolTable, mu: float, min_shells: int = 3, offdiag_tol: float = 0.01,
                        far: float = 0.25) -> KernelDecayReport:
    """Shell maxima of ``|K(x, y)|`` in torus distance and a log-log slope fit.

    Shells are ``[2^{-j-1}, 2^{-j})`` for ``j = 1, 2, ...`` down to the grid
    spacing.  ``offdiag_ratio`` compares the largest ``|K|`` at distance
    above ``far`` with the diagonal peak.
    """
    if mu > -2:
        log.warning("kernel decay is only expected for mu <= -2 (got %s)", mu)
    K = np.abs(schwartz_kernel(a))
    dist = torus_distance(a.problem, a.M)
    peak = float(np.abs(np.diagonal(K)).max())
    far_mask = dist > far
    off = float(K[far_mask].max()) if far_mask.any() else 0.0
    shells = []
    j = 1
    while 2.0 ** (-j - 1) >= 1.0 / a.M:
        lo, hi = 2.0 ** (-j - 1), 2.0 ** (-j)
        mask = (dist >= lo) & (dist < hi)
        if mask.any():
            shells.append({"lo": lo, "hi": hi, "max": float(K[mask].max())})
        j += 1
    if len(shells) < min_shells:
        raise ValueError(f"only {len(shells)} distance shells available")
    r = np.array([np.sqrt(s["lo"] * s["hi"]) for s in shells])
    m = np.array([s["max"] for s in shells])
    slope = float(np.polyfit(np.log(r), np.log(m), 1)[0]) if np.all(m > 0) else None
    ratio = off / peak if peak > 0 else 0.0
    return KernelDecayReport(peak, off, ratio, slope, shells, ratio <= offdiag_tol)


# operator norms -------------------------------------------------------------
def window_gram(p: ModelProblem, N: int) -> np.ndarray:
    """``G[i, j] = (u_{xi_j}, u_{xi_i})_{L^2}`` over the window."""
    w = window_for(p, N)
    diff = w.indices[None, :, :] - w.indices[:, None, :]
    G = np.ones(diff.shape[:2], dtype=complex)
    for j, hj in enumerate(p.h):
        G = G * quad.moments(hj, 2, diff[..., j])
    return G


@lru_cache(maxsize=32)
def _gram_factor(p: ModelProblem, N: int) -> np.ndarray:
    """Upper factor ``R`` with ``G = R^H R`` so that ``||sum c u|| = ||R c||``."""
    if p.self_adjoint:
        return np.eye(window_for(p, N).size)
    G = window_gram(p, N)
    return linalg.cholesky((G + G.conj().T) / 2, lower=False)


@dataclass
class PowerIterationResult:
    value: float
    iterations: int
    converged: bool


def power_iteration(T: np.ndarray, iters: int = 20, tol: float = 1e-6, seed: int = 0) -> PowerIterationResult:
    """Largest singular value of ``T`` by power iteration on ``T^H T``."""
    n = T.shape[1]
    if n == 0 or not np.any(T):
        return PowerIterationResult(0.0, 0, True)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    est = 0.0
    for k in range(1, iters + 1):
        y = T.conj().T @ (T @ x)
        new = float(np.sqrt(np.linalg.norm(y)))
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return PowerIterationResult(0.0, k, True)
        x = y / nrm
        if abs(new - est) <= tol * max(new, 1e-300):
            return PowerIterationResult(new, k, True)
        est = new
    log.debug("power iteration stopped after %d steps at %.6g", iters, est)
    return PowerIterationResult(est, iters, False)


def operator_matrix(a: SymbolTable, s: float = 0.0, t: float = 0.0, N_out: int | None = None) -> np.ndarray:
    """Matrix of ``Op_L(a): H^s -> H^t`` in orthonormal coordinates.

    The input space is the window of ``a``; the output is measured on the
    window ``N_out`` (default ``M//2 - 1``, the whole band the grid resolves).
    """
    p = a.problem
    N_out = a.M // 2 - 1 if N_out is None else N_out
    w_in, w_out = a.window, window_for(p, N_out)
    cols = apply_coeffs(a, np.eye(w_in.size))  # samples of A u_xi, one per input index
    P = project_values(p, cols, "L", "L", N_out).T  # (W_out, W_in)
    Y = _gram_factor(p, N_out) @ (P * (w_out.weight**t)[:, None]) / w_in.weight**s
    # T R_in = Y
    R_in = _gram_factor(p, a.N)
    return linalg.solve_triangular(R_in.T, Y.T, lower=True).T


@dataclass
class L2BoundReport:
    op_norm_estimate: float
    symbol_bound: float
    c_geom: float
    ratio: float
    converged: bool
    passed: bool

    def as_dict(self) -> dict:
        return asdict(self)


def x_derivative(values: np.ndarray, M: int, d: int, alpha) -> np.ndarray:
    """Spectral ``d^alpha/dx^alpha`` of periodic data over the leading d grid axes.

    ``values`` has shape (M^d, ...).  The Nyquist mode is treated
    symmetrically, so odd derivatives annihilate it.
    """
    from scipy import fft as sfft

    rest = values.shape[1:]
    v = values.reshape((M,) * d + rest)
    k = sfft.fftfreq(M, 1.0 / M)
    out = sfft.fftn(v, axes=tuple(range(d)))
    for j, aj in enumerate(alpha):
        if aj == 0:
            continue
        mult = (2j * np.pi * k) ** aj
        if M % 2 == 0 and aj % 2 == 1:
            mult[M // 2] = 0.0
        shape = [1] * out.ndim
        shape[j] = M
        out = out * mult.reshape(shape)
    res = sfft.ifftn(out, axes=tuple(range(d)))
    return res.reshape(values.shape)


def symbol_derivative_bound(a: SymbolTable, k: int, weight_power: float = 0.0) -> float:
    """``max_{|alpha| <= k} sup |d^alpha_x a(x, xi)| <xi>^{-weight_power}``."""
    d = a.problem.d
    scale = a.window.weight ** (-weight_power)
    best = 0.0
    for order in range(k + 1):
        for alpha in itertools.product(range(order + 1), repeat=d):
            if sum(alpha) != order:
                continue
            da = x_derivative(a.values, a.M, d, alpha) if order else a.values
            best = max(best, float(np.abs(da * scale).max(initial=0.0)))
    return best


def geometric_constant(p: ModelProblem, M: int, k: int) -> float:
    """``prod max(h, 1/h) * sum_n min(1, (2 pi |n|_inf)^{-k})`` over the grid band.

    Writing ``a(x, xi) = sum_n a_n(xi) e^{2 pi i n x}`` gives
    ``||Op(a)|| <= sum_n ||Op(a_n)|| <= prod max(h,1/h) sum_n sup|a_n|``, and
    ``sup|a_n| <= C min(1, (2 pi |n|_inf)^{-k})`` with ``C`` the symbol bound.
    """
    n = np.arange(-(M // 2), M // 2 + 1)
    mesh = np.meshgrid(*([np.abs(n)] * p.d), indexing="ij")
    ninf = np.max(mesh, axis=0).astype(float)
    terms = np.ones_like(ninf)
    nz = ninf > 0
    terms[nz] = np.minimum(1.0, (2 * np.pi * ninf[nz]) ** (-float(k)))
    return float(p.u_sup * p.v_sup * terms.sum())


def l2_bound_check(a: SymbolTable, k: int = 1, iters: int = 20, tol: float = 1e-6) -> L2BoundReport:
    """Power-iteration estimate of ``||Op_L(a)||_{L^2 -> L^2}`` against its symbol bound."""
    if k < 1:
        raise ValueError("k must be at least 1")
    T = operator_matrix(a)
    res = power_iteration(T, iters, tol)
    C = symbol_derivative_bound(a, k)
    cg = geometric_constant(a.problem, a.M, k)
    bound = cg * C
    ratio = res.value / bound if bound > 0 else 0.0
    return L2BoundReport(res.value, C, cg, ratio, res.converged, res.value <= bound * (1 + 1e-9) + 1e-12)


__all__ = [
    "SymbolTable", "basis_matrix", "apply_coeffs", "op_apply", "op_apply_star", "symbol_extract",
    "schwartz_kernel", "kernel_apply", "conv_kernel", "conv_kernel_apply", "multiplier_apply",
    "multiplier_apply_star", "adjoint_multiplier", "tabulate_amplitude", "amplitude_apply",
    "amplitude_symbol_oracle", "KernelDecayReport", "kernel_decay_report", "torus_distance",
    "window_gram", "power_iteration", "PowerIterationResult", "operator_matrix", "L2BoundReport",
    "l2_bound_check", "x_derivative", "symbol_derivative_bound", "geometric_constant",
]
