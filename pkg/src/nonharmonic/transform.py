"""L- and L*-Fourier transforms between grid samples and coefficient windows."""
from __future__ import annotations

from dataclasses import dataclass
import warnings

import numpy as np
from scipy import fft as sfft

from . import quadrature as quad
from .eigensystem import ModelProblem, Window, eval_u, eval_v, window_for


class AliasingWarning(UserWarning):
    """Raised when the grid is too coarse for the requested window."""


class WindowMismatch(ValueError):
    pass


def _check_grid(M: int):
    if M < 1 or M & (M - 1):
        raise ValueError(f"samples per axis must be a power of two, got {M}")


def check_band(M: int, N: int):
    if M < 2 * (N + 1):
        warnings.warn(f"grid M={M} cannot resolve window N={N} (needs M >= {2 * (N + 1)})",
                      AliasingWarning, stacklevel=3)
        return False
    return True


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex samples on ``{k/M}^d``.

    ``side`` says which biorthogonal family the samples are read in: ``"L"``
    functions are ``h^x`` times a trigonometric polynomial, ``"Lstar"``
    functions ``h^{-x}`` times one.
    """

    problem: ModelProblem
    values: np.ndarray
    side: str = "L"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        d = self.problem.d
        if vals.ndim != d or len(set(vals.shape)) != 1:
            raise ValueError(f"expected an (M,)*{d} array, got shape {vals.shape}")
        _check_grid(vals.shape[0])
        quad.side_sign(self.side)
        object.__setattr__(self, "values", vals)

    @property
    def M(self) -> int:
        return self.values.shape[0]

    @property
    def points(self) -> np.ndarray:
        return quad.grid_points(self.M, self.problem.d)

    def with_values(self, values, side=None) -> "GridFunction":
        return GridFunction(self.problem, values, self.side if side is None else side)

    def __add__(self, other):
        _same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        _same_grid(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar):
        return self.with_values(self.values * scalar)

    __rmul__ = __mul__

    def bc_defect(self) -> float:
        """Relative size of the upper-half band of the de-weighted interpolant.

        Samples of a smooth function satisfying the boundary condition give
        a de-weighted periodic function whose coefficients are negligible near
        Nyquist; a violated condition leaves an O(1/k) tail there.
        """
        M, d = self.M, self.problem.d
        c = np.abs(quad.split_coeffs(self.values * quad.weight(self.problem.h, -quad.side_sign(self.side), M), d))
        k = quad.coeff_freqs(M)
        mesh = np.meshgrid(*([np.abs(k)] * d), indexing="ij")
        high = np.max(mesh, axis=0) > M // 4
        top = c.max()
        return float(c[high].max() / top) if top > 0 and high.any() else 0.0

    def is_bc_compatible(self, tol=1e-8) -> bool:
        return self.bc_defect() <= tol


def _same_grid(f: GridFunction, g: GridFunction):
    if f.problem != g.problem or f.M != g.M:
        raise WindowMismatch("grid functions live on different problems or grids")


@dataclass(frozen=True, eq=False)
class SpectralCoeffs:
    """Dense coefficients over ``index_window(problem, N)`` in window order."""

    problem: ModelProblem
    N: int
    flavor: str
    values: np.ndarray

    def __post_init__(self):
        quad.side_sign(self.flavor)
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.window.size,):
            raise ValueError(f"window N={self.N} needs {self.window.size} coefficients, got {vals.shape}")
        object.__setattr__(self, "values", vals)

    @property
    def window(self) -> Window:
        return window_for(self.problem, self.N)

    def __getitem__(self, xi) -> complex:
        return self.values[self.window.position(xi)]

    def with_values(self, values) -> "SpectralCoeffs":
        return SpectralCoeffs(self.problem, self.N, self.flavor, values)

    def restrict(self, N: int) -> "SpectralCoeffs":
        vals = self.window.restrict(self.values, window_for(self.problem, N))
        return SpectralCoeffs(self.problem, N, self.flavor, vals)

    @classmethod
    def delta(cls, problem, N, xi, flavor="L"):
        w = window_for(problem, N)
        vals = np.zeros(w.size, dtype=complex)
        vals[w.position(xi)] = 1.0
        return cls(problem, N, flavor, vals)


def project_values(problem: ModelProblem, values, side: str, target: str, N: int) -> np.ndarray:
    """Window-ordered coefficients of (possibly batched) grid samples."""
    w = window_for(problem, N)
    cube = quad.project(values, side, target, problem.h, np.arange(-N, N + 1))
    return w.from_cube(cube)


def synthesize_values(problem: ModelProblem, coeffs, family: str, N: int, M: int) -> np.ndarray:
    """Samples of ``sum_xi c(xi) w_xi`` on the M-grid, w = u (family L) or v (Lstar).

    Batched over leading axes of ``coeffs``.  Frequencies beyond the grid's
    band fold back (the usual DFT aliasing).
    """
    w = window_for(problem, N)
    d = problem.d
    coeffs = np.asarray(coeffs, dtype=complex)
    lead = coeffs.shape[:-1]
    full = np.zeros(lead + (M,) * d, dtype=complex)
    pos = tuple(np.mod(w.indices[:, j], M) for j in range(d))
    np.add.at(full, (Ellipsis,) + pos, coeffs)
    vals = sfft.ifftn(full, axes=tuple(range(-d, 0))) * M**d
    return vals * quad.weight(problem.h, quad.side_sign(family), M)


def forward_l(f: GridFunction, N: int) -> SpectralCoeffs:
    """``f^(xi) = int f conj(v_xi)`` on the window ``|xi|_inf <= N``."""
    check_band(f.M, N)
    return SpectralCoeffs(f.problem, N, "L", project_values(f.problem, f.values, f.side, "L", N))


def forward_lstar(f: GridFunction, N: int) -> SpectralCoeffs:
    """``f^_*(xi) = int f conj(u_xi)`` on the window ``|xi|_inf <= N``."""
    check_band(f.M, N)
    return SpectralCoeffs(f.problem, N, "Lstar", project_values(f.problem, f.values, f.side, "Lstar", N))


def inverse_l(c: SpectralCoeffs, M: int) -> GridFunction:
    _check_grid(M)
    check_band(M, c.N)
    return GridFunction(c.problem, synthesize_values(c.problem, c.values, "L", c.N, M), "L")


def inverse_lstar(c: SpectralCoeffs, M: int) -> GridFunction:
    _check_grid(M)
    check_band(M, c.N)
    return GridFunction(c.problem, synthesize_values(c.problem, c.values, "Lstar", c.N, M), "Lstar")


def plancherel_pair(a: SpectralCoeffs, b_star: SpectralCoeffs) -> complex:
    """``sum_xi a(xi) conj(b_*(xi))``: the L^2 pairing of the underlying functions."""
    if a.problem != b_star.problem or a.N != b_star.N:
        raise WindowMismatch("coefficient windows differ")
    if a.flavor != "L" or b_star.flavor != "Lstar":
        raise WindowMismatch("plancherel_pair pairs an L table with an L* table")
    return complex(np.sum(a.values * np.conj(b_star.values)))


def l2_inner(f: GridFunction, g: GridFunction) -> complex:
    """``(f, g)_{L^2}``, exact for the interpolants of the samples."""
    _same_grid(f, g)
    return complex(quad.inner(f.values, f.side, g.values, g.side, f.problem.h))


def l2_norm(f: GridFunction) -> float:
    return float(np.sqrt(max(l2_inner(f, f).real, 0.0)))


def evaluate(c: SpectralCoeffs, points) -> np.ndarray:
    """Direct summation ``sum_xi c(xi) w_xi(x)`` at arbitrary points (..., d)."""
    p = c.problem
    basis = eval_u if c.flavor == "L" else eval_v
    pts = np.asarray(points, dtype=float)
    if p.d == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
        pts = pts[..., None]
    out = np.zeros(pts.shape[:-1], dtype=complex)
    for xi, cv in zip(c.window.indices, c.values):
        if cv != 0:
            out += cv * basis(p, xi, pts)
    return out


def sample_u(p: ModelProblem, xi, M: int) -> GridFunction:
    return GridFunction(p, eval_u(p, xi, quad.grid_points(M, p.d)), "L")


def sample_v(p: ModelProblem, xi, M: int) -> GridFunction:
    return GridFunction(p, eval_v(p, xi, quad.grid_points(M, p.d)), "Lstar")


def random_coeffs(p: ModelProblem, N: int, rng, decay: float = 0.0, flavor="L", support=None) -> SpectralCoeffs:
    """Gaussian coefficients scaled by ``<xi>^{-decay}``, zero outside ``|xi|_inf <= support``.

    With ``support`` set, the draws are made on the support window only, so
    the same generator state gives the same function for every ``N >= support``.
    """
    w = window_for(p, N)
    n = N if support is None else min(int(support), N)
    ws = window_for(p, n)
    vals = (rng.standard_normal(ws.size) + 1j * rng.standard_normal(ws.size)) / np.sqrt(2)
    vals *= ws.weight ** (-decay)
    if n == N:
        return SpectralCoeffs(p, N, flavor, vals)
    cube = ws.to_cube(vals)
    full = np.zeros(w.cube_shape, dtype=complex)
    full[(slice(N - n, N + n + 1),) * p.d] = cube
    return SpectralCoeffs(p, N, flavor, w.from_cube(full))


def random_band_limited(p: ModelProblem, N: int, M: int, rng, decay: float = 0.0) -> GridFunction:
    return inverse_l(random_coeffs(p, N, rng, decay), M)
