"""Difference operators, the D^{(alpha)} derivative basis and the symbolic calculus.

An admissible family ``q = (q_1, ..., q_d)`` defines

* the difference operators ``Delta_q^alpha`` acting on symbols in ``xi``, via
  ``Delta^alpha a(x, xi) = u_xi(x)^{-1} sum_eta F_L(q^alpha(x, .) u_xi)(eta) a(x, eta) u_eta(x)``;
* the derivatives ``D^{(alpha)}``, fixed by the Taylor-type recurrence
  ``d^beta f(x) = sum_{|alpha| <= |beta|} (1/alpha!) [d_y^beta q^alpha(x, y)]_{y=x} D^{(alpha)} f(x)``.

For the default family ``q_j = e^{2 pi i (y_j - x_j)} - 1`` the difference is
the forward difference ``a(x, xi + e_j) - a(x, xi)`` and the conjugate
(L*) family gives ``a(x, xi - e_j) - a(x, xi)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import itertools
from math import factorial, prod
from typing import Sequence

import numpy as np
import sympy as sp

from . import quadrature as quad
from .eigensystem import ModelProblem, window_for
from .quantization import SymbolTable, basis_matrix, tabulate_amplitude, x_derivative
from .transform import project_values


class WindowUnderflow(ValueError):
    """The requested operation needs a wider frequency window."""


class SingularFamily(ValueError):
    """The Taylor recurrence of an admissible family cannot be solved."""


def multi_indices(d: int, order: int):
    """All alpha in N^d with |alpha| == order, in lexicographic order."""
    return [a for a in itertools.product(range(order + 1), repeat=d) if sum(a) == order][::-1]


def multi_indices_upto(d: int, order: int):
    return [a for k in range(order + 1) for a in multi_indices(d, k)]


def alpha_factorial(alpha) -> int:
    return prod(factorial(a) for a in alpha)


# admissible families ------------------------------------------------------
class AdmissibleFamily:
    """Functions ``q_j(x, y)`` vanishing on the diagonal.

    Parameters
    ----------
    exprs : sequence of sympy expressions
        One per axis, in the symbols ``x0.., y0..``.
    d : int
    flavor : {"L", "Lstar"}
        Which biorthogonal family the differences are taken against.
    kind : str, optional
        ``"exp"`` marks the default exponential family (and ``"exp-conj"`` its
        conjugate), enabling the shift fast path.
    """

    def __init__(self, exprs: Sequence, d: int, flavor: str = "L", kind: str | None = None):
        quad.side_sign(flavor)
        self.d = d
        self.x = sp.symbols(f"x0:{d}", real=True)
        self.y = sp.symbols(f"y0:{d}", real=True)
        self.exprs = tuple(sp.sympify(e) for e in exprs)
        if len(self.exprs) != d:
            raise ValueError(f"need {d} functions, got {len(self.exprs)}")
        self.flavor = flavor
        self.kind = kind
        self._fns = [sp.lambdify((self.x, self.y), e, "numpy") for e in self.exprs]

    @classmethod
    def default(cls, d: int = 1, flavor: str = "L") -> "AdmissibleFamily":
        x = sp.symbols(f"x0:{d}", real=True)
        y = sp.symbols(f"y0:{d}", real=True)
        exprs = [sp.exp(2 * sp.pi * sp.I * (y[j] - x[j])) - 1 for j in range(d)]
        fam = cls(exprs, d, "L", "exp")
        return fam.conjugate() if flavor == "Lstar" else fam

    def conjugate(self) -> "AdmissibleFamily":
        """The L*-flavor family ``conj(q_j)`` (and back)."""
        kind = {"exp": "exp-conj", "exp-conj": "exp"}.get(self.kind)
        flavor = "Lstar" if self.flavor == "L" else "L"
        return AdmissibleFamily([sp.conjugate(e) for e in self.exprs], self.d, flavor, kind)

    @property
    def key(self):
        return (tuple(sp.srepr(e) for e in self.exprs), self.flavor)

    def __eq__(self, other):
        return isinstance(other, AdmissibleFamily) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def q(self, j: int, x, y) -> np.ndarray:
        """``q_j(x, y)`` with points broadcasting over a trailing axis of length d."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        xs = [x[..., k] for k in range(self.d)]
        ys = [y[..., k] for k in range(self.d)]
        out = self._fns[j](xs, ys)
        return np.broadcast_to(np.asarray(out, dtype=complex), np.broadcast_shapes(x.shape[:-1], y.shape[:-1]))

    def q_alpha(self, alpha, x, y) -> np.ndarray:
        out = None
        for j, aj in enumerate(alpha):
            if aj:
                t = self.q(j, x, y) ** aj
                out = t if out is None else out * t
        if out is None:
            shape = np.broadcast_shapes(np.shape(x)[:-1], np.shape(y)[:-1])
            return np.ones(shape, dtype=complex)
        return out

    def rank_matrix(self, x=None) -> np.ndarray:
        """``[d q_j / d y_k]`` at ``y = x`` (default x = 0)."""
        x = np.zeros(self.d) if x is None else np.asarray(x, dtype=float)
        sub = {**{self.x[k]: x[k] for k in range(self.d)}, **{self.y[k]: x[k] for k in range(self.d)}}
        return np.array([[complex(sp.diff(e, self.y[k]).subs(sub).evalf()) for k in range(self.d)]
                         for e in self.exprs])

    def check(self, M: int = 16) -> dict:
        """Admissibility diagnostics on the grid ``{k/M}^d``."""
        pts = quad.grid_points(M, self.d).reshape(-1, self.d)
        qs = np.stack([self.q(j, pts[:, None, :], pts[None, :, :]) for j in range(self.d)])
        mag = np.sqrt(np.sum(np.abs(qs) ** 2, axis=0))
        diag = float(np.abs(np.diagonal(mag)).max())
        off = mag + np.diag(np.full(len(pts), np.inf))
        R = self.rank_matrix()
        return {"diag_max": diag, "min_offdiag": float(off.min()),
                "rank_matrix": R, "rank_ok": bool(abs(np.linalg.det(R)) > 1e-12)}


# derivative basis ---------------------------------------------------------
@dataclass(frozen=True)
class DerivativeBasis:
    """``D^{(alpha)} = sum_beta coeffs[alpha][beta] d^beta`` for ``|alpha| <= max_order``."""

    d: int
    max_order: int
    coeffs: dict = field(repr=False)

    def __getitem__(self, alpha) -> dict:
        return self.coeffs[tuple(alpha)]


def _family_jets(family: AdmissibleFamily, order: int) -> sp.Matrix:
    """``C[beta, alpha] = [d_y^beta q^alpha]_{y=x} / alpha!`` (must be x-independent)."""
    idx = multi_indices_upto(family.d, order)
    sub_y = {family.y[k]: family.x[k] for k in range(family.d)}
    C = sp.zeros(len(idx), len(idx))
    separable = all(e.free_symbols <= {family.x[j], family.y[j]} for j, e in enumerate(family.exprs))
    if separable and family.d > 1:
        # q^alpha factorizes over axes, so the jets are products of 1D jets
        jets = []
        for j, e in enumerate(family.exprs):
            J = {}
            for a in range(order + 1):
                expr = e**a
                for b in range(order + 1):
                    J[b, a] = sp.expand(expr.subs(family.y[j], family.x[j]))
                    expr = sp.diff(expr, family.y[j])
            jets.append(J)
        for ia, alpha in enumerate(idx):
            for ib, beta in enumerate(idx):
                if sum(beta) >= sum(alpha):
                    val = sp.Mul(*[jets[j][beta[j], alpha[j]] for j in range(family.d)])
                    if val.free_symbols:
                        raise NotImplementedError("families with x-dependent diagonal jets are not supported")
                    C[ib, ia] = val / alpha_factorial(alpha)
        return C
    for ia, alpha in enumerate(idx):
        qa = sp.Mul(*[family.exprs[j] ** alpha[j] for j in range(family.d)])
        for ib, beta in enumerate(idx):
            if sum(beta) < sum(alpha):
                continue
            expr = qa
            for k, bk in enumerate(beta):
                if bk:
                    expr = sp.diff(expr, family.y[k], bk)
            val = sp.expand(expr.subs(sub_y))
            if val.free_symbols:
                val = sp.simplify(val)
            if val.free_symbols:
                raise NotImplementedError("families with x-dependent diagonal jets are not supported")
            C[ib, ia] = val / alpha_factorial(alpha)
    return C


@lru_cache(maxsize=16)
def build_derivative_basis(family: AdmissibleFamily, max_order: int = 6) -> DerivativeBasis:
    """Solve the triangular Taylor system for ``D^{(alpha)}``, ``|alpha| <= max_order``.

    The system is solved exactly in sympy, so the coefficients carry no
    roundoff beyond the final conversion to complex floats.
    """
    if not 0 <= max_order <= 6:
        raise ValueError("max_order must lie in [0, 6]")
    idx = multi_indices_upto(family.d, max_order)
    C = _family_jets(family, max_order)
    if any(C[i, i] == 0 for i in range(len(idx))):
        raise SingularFamily("the Taylor system of this family is singular")
    # D^{(alpha)} = sum_beta Dm[alpha, beta] d^beta with Dm = C^{-1}
    Dm = C.lower_triangular_solve(sp.eye(len(idx)))
    coeffs = {}
    for ia, alpha in enumerate(idx):
        coeffs[alpha] = {beta: complex(sp.N(Dm[ia, ib], 20)) for ib, beta in enumerate(idx)
                         if sp.expand(Dm[ia, ib]) != 0}
    return DerivativeBasis(family.d, max_order, coeffs)


def apply_derivative(basis: DerivativeBasis, alpha, f):
    """``D^{(alpha)}`` by spectral differentiation in x.

    ``f`` may be an (M,)*d array, a GridFunction (treated as periodic data) or a
    SymbolTable (differentiated column by column).
    """
    alpha = tuple(alpha)
    if isinstance(f, SymbolTable):
        return f.with_values(_apply_flat(basis, alpha, f.values, f.M, f.problem.d))
    if hasattr(f, "values") and hasattr(f, "problem"):
        vals = _apply_flat(basis, alpha, f.values.reshape(-1, 1), f.M, f.problem.d)
        return f.with_values(vals.reshape(f.values.shape))
    arr = np.asarray(f)
    d, M = arr.ndim, arr.shape[0]
    return _apply_flat(basis, alpha, arr.reshape(-1, 1), M, d).reshape(arr.shape)


def _apply_flat(basis, alpha, values, M, d):
    if sum(alpha) > basis.max_order:
        raise ValueError(f"|alpha| = {sum(alpha)} exceeds the basis order {basis.max_order}")
    out = np.zeros(values.shape, dtype=complex)
    for beta, c in basis[alpha].items():
        out += c * (x_derivative(values, M, d, beta) if sum(beta) else values)
    return out


# differences --------------------------------------------------------------
def _shift_difference(a: SymbolTable, alpha, backward: bool) -> SymbolTable:
    d, N = a.problem.d, a.N
    n_new = N - sum(alpha)
    if n_new < 0:
        raise WindowUnderflow(f"window N={N} is too small for |alpha|={sum(alpha)}")
    cube = a.cube()
    lo = [-N] * d
    for j, aj in enumerate(alpha):
        ax = 1 + j
        for _ in range(aj):
            n = cube.shape[ax]
            head = np.take(cube, np.arange(0, n - 1), axis=ax)
            tail = np.take(cube, np.arange(1, n), axis=ax)
            if backward:
                cube = head - tail  # a(xi - e_j) - a(xi), indexed by xi
                lo[j] += 1
            else:
                cube = tail - head  # a(xi + e_j) - a(xi), indexed by xi
    sl = [slice(None)] + [slice(-n_new - lo[j], n_new - lo[j] + 1) for j in range(d)]
    sub = window_for(a.problem, n_new)
    return a.with_values(sub.from_cube(cube[tuple(sl)]), N=n_new)


def _general_difference(a: SymbolTable, alpha, family: AdmissibleFamily) -> SymbolTable:
    p, M, N = a.problem, a.M, a.N
    n_new = N - sum(alpha)
    if n_new < 0:
        raise WindowUnderflow(f"window N={N} is too small for |alpha|={sum(alpha)}")
    side = family.flavor
    w_sub = window_for(p, n_new)
    B = basis_matrix(p, M, N, side)  # (M^d, W)
    Bs = basis_matrix(p, M, n_new, side)  # (M^d, W')
    pts = quad.grid_points(M, p.d).reshape(-1, p.d)
    out = np.empty((pts.shape[0], w_sub.size), dtype=complex)
    shape = (M,) * p.d
    for i, x in enumerate(pts):
        qa = family.q_alpha(alpha, x[None, :], pts)  # (M^d,) over y
        g = (qa[:, None] * Bs).T.reshape((w_sub.size,) + shape)
        coef = project_values(p, g, side, side, N)  # (W', W)
        out[i] = coef @ (a.values[i] * B[i]) / Bs[i]
    return a.with_values(out, N=n_new)


def difference_apply(a: SymbolTable, alpha, family: AdmissibleFamily | None = None,
                     method: str = "auto") -> SymbolTable:
    """``Delta_q^alpha a`` on the window shrunk by ``|alpha|``.

    ``method="fast"`` (default family only) takes shift differences in xi;
    ``"general"`` evaluates the transform formula; ``"auto"`` picks the fast
    path when it applies.
    """
    alpha = tuple(int(v) for v in alpha)
    family = AdmissibleFamily.default(a.problem.d, a.flavor) if family is None else family
    if family.d != a.problem.d:
        raise ValueError("family dimension does not match the problem")
    if family.flavor != a.flavor:
        raise ValueError(f"{family.flavor} family applied to an {a.flavor} symbol")
    if sum(alpha) == 0:
        return a
    fast_ok = family.kind in ("exp", "exp-conj")
    if method == "fast" and not fast_ok:
        raise ValueError("the shift fast path needs the default exponential family")
    if method == "general" or not fast_ok:
        return _general_difference(a, alpha, family)
    return _shift_difference(a, alpha, backward=(family.kind == "exp-conj"))


# symbol classes and expansions --------------------------------------------
def symbol_class_fit(a: SymbolTable, m: float, rho: float = 1.0, delta: float = 0.0,
                     max_alpha: int = 2, max_beta: int = 2, family: AdmissibleFamily | None = None) -> dict:
    """``C_{alpha beta} = max |Delta^alpha D^{(beta)} a| / <xi>^{m - rho|alpha| + delta|beta|}``."""
    family = AdmissibleFamily.default(a.problem.d, a.flavor) if family is None else family
    basis = build_derivative_basis(family if family.flavor == "L" else family.conjugate(), max(max_beta, 1))
    d = a.problem.d
    table = {}
    for beta in multi_indices_upto(d, max_beta):
        db = apply_derivative(basis, beta, a) if sum(beta) else a
        for alpha in multi_indices_upto(d, max_alpha):
            t = difference_apply(db, alpha, family)
            order = m - rho * sum(alpha) + delta * sum(beta)
            table[(alpha, beta)] = float(np.max(np.abs(t.values) / t.window.weight ** order, initial=0.0))
    return table


def _default_basis(d: int, order: int) -> DerivativeBasis:
    return build_derivative_basis(AdmissibleFamily.default(d, "L"), max(1, min(6, order)))


def compose(a: SymbolTable, b: SymbolTable, n_terms: int, family: AdmissibleFamily | None = None) -> SymbolTable:
    """``sum_{|alpha| < n_terms} (1/alpha!) Delta^alpha a * D^{(alpha)} b`` (symbol of AB)."""
    if a.flavor != "L" or b.flavor != "L":
        raise ValueError("compose works on L-symbols")
    if a.problem != b.problem or a.M != b.M:
        raise ValueError("symbols live on different problems or grids")
    if n_terms < 1:
        raise ValueError("n_terms must be at least 1")
    d = a.problem.d
    family = AdmissibleFamily.default(d) if family is None else family
    basis = build_derivative_basis(family, max(1, n_terms - 1)) if n_terms > 1 else None
    n0 = min(a.N, b.N)
    n_new = n0 - (n_terms - 1)
    if n_new < 0:
        raise WindowUnderflow(f"window N={n0} is too small for {n_terms} terms")
    a0, b0 = a.restrict(n0), b.restrict(n0)
    total = np.zeros((a.M**d, window_for(a.problem, n_new).size), dtype=complex)
    for alpha in multi_indices_upto(d, n_terms - 1):
        da = difference_apply(a0, alpha, family).restrict(n_new)
        db = (apply_derivative(basis, alpha, b0) if sum(alpha) else b0).restrict(n_new)
        total += da.values * db.values / alpha_factorial(alpha)
    return a0.with_values(total, N=n_new)


def adjoint_symbol(a: SymbolTable, n_terms: int, family: AdmissibleFamily | None = None) -> SymbolTable:
    """L*-symbol of the adjoint: ``sum (1/alpha!) Dtilde-Delta^alpha conj(D^{(alpha)} a)``."""
    if a.flavor != "L":
        raise ValueError("adjoint_symbol expects an L-symbol")
    d = a.problem.d
    family = AdmissibleFamily.default(d) if family is None else family
    star = family.conjugate()
    basis = build_derivative_basis(family, max(1, n_terms - 1))
    n_new = a.N - (n_terms - 1)
    if n_new < 0:
        raise WindowUnderflow(f"window N={a.N} is too small for {n_terms} terms")
    total = np.zeros((a.M**d, window_for(a.problem, n_new).size), dtype=complex)
    for alpha in multi_indices_upto(d, n_terms - 1):
        da = apply_derivative(basis, alpha, a) if sum(alpha) else a
        t = da.with_values(np.conj(da.values), flavor="Lstar")
        total += difference_apply(t, alpha, star).restrict(n_new).values / alpha_factorial(alpha)
    return SymbolTable(a.problem, a.M, n_new, total, "Lstar")


def amplitude_reduce(p: ModelProblem, amp, M: int, N: int, n_terms: int,
                     family: AdmissibleFamily | None = None) -> SymbolTable:
    """``sum_{|alpha| < n_terms} (1/alpha!) Delta^alpha_x [D_y^{(alpha)} amp(x, y, xi)]_{y=x}``."""
    d = p.d
    family = AdmissibleFamily.default(d) if family is None else family
    basis = build_derivative_basis(family, max(1, n_terms - 1))
    n_new = N - (n_terms - 1)
    if n_new < 0:
        raise WindowUnderflow(f"window N={N} is too small for {n_terms} terms")
    T = np.asarray(tabulate_amplitude(p, amp, M, N))  # (x, y, xi)
    Md = M**d
    total = np.zeros((Md, window_for(p, n_new).size), dtype=complex)
    diag = np.arange(Md)
    for alpha in multi_indices_upto(d, n_terms - 1):
        if sum(alpha):
            # differentiate in y: move y to the front so the grid axes lead
            ty = np.moveaxis(T, 1, 0).reshape(Md, -1)
            dy = _apply_flat(basis, alpha, ty, M, d).reshape(Md, Md, -1)
            slice_ = dy[diag, diag]  # y index first, then x: dy[y, x, xi]
        else:
            slice_ = T[diag, diag]
        sym = SymbolTable(p, M, N, slice_)
        total += difference_apply(sym, alpha, family).restrict(n_new).values / alpha_factorial(alpha)
    return SymbolTable(p, M, n_new, total)


def chi(t) -> np.ndarray:
    """Smooth ramp: 0 for t <= 1/2, 1 for t >= 1, C^infinity in between."""
    t = np.asarray(t, dtype=float)

    def psi(s):
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1.0 / s[pos])
        return out

    num = psi(t - 0.5)
    return num / (num + psi(1.0 - t))


def asymptotic_sum(symbols: Sequence[SymbolTable], orders: Sequence[float], eps=None,
                   p: ModelProblem | None = None, M: int | None = None, N: int | None = None) -> SymbolTable:
    """``sum_j chi(eps_j <xi>) sigma_j`` with ``eps_j = 2^{-j}`` by default."""
    if len(symbols) != len(orders):
        raise ValueError("one order per symbol is required")
    if any(b >= a for a, b in zip(orders, orders[1:])):
        raise ValueError("orders must be strictly decreasing")
    if not symbols:
        if p is None or M is None or N is None:
            raise ValueError("an empty sum needs p, M and N")
        return SymbolTable.zeros(p, M, N)
    eps = [2.0 ** (-j) for j in range(len(symbols))] if eps is None else list(eps)
    n0 = min(s.N for s in symbols)
    first = symbols[0].restrict(n0)
    wt = first.window.weight
    total = np.zeros_like(first.values)
    for s, e in zip(symbols, eps):
        total += chi(e * wt)[None, :] * s.restrict(n0).values
    return first.with_values(total)


def shell_sup(a: SymbolTable) -> tuple[np.ndarray, np.ndarray]:
    """``(n, max_{x, |xi|_inf = n} |a|)`` for ``n = 0..N``."""
    w = a.window
    shell = np.max(np.abs(w.indices), axis=1)
    mags = np.abs(a.values).max(axis=0)
    n = np.arange(a.N + 1)
    return n, np.array([mags[shell == k].max() for k in n])


def fit_decay_slope(a: SymbolTable, n_min: int = 4, n_max: int | None = None, floor: float = 1e-13) -> float:
    """Least-squares slope of ``log shell_sup`` against ``log <xi>`` on shells ``n_min..n_max``.

    ``<xi>`` of a shell is taken at its axis point ``(n, 0, ..., 0)``.
    """
    from .eigensystem import angle_weight

    n, s = shell_sup(a)
    n_max = a.N if n_max is None else n_max
    sel = (n >= n_min) & (n <= n_max) & (s > floor * max(s.max(), 1e-300))
    if sel.sum() < 2:
        raise ValueError("not enough shells above the noise floor for a slope fit")
    xi = np.zeros((sel.sum(), a.problem.d), dtype=int)
    xi[:, 0] = n[sel]
    wt = angle_weight(a.problem, xi)
    return float(np.polyfit(np.log(wt), np.log(s[sel]), 1)[0])


__all__ = [
    "AdmissibleFamily", "DerivativeBasis", "WindowUnderflow", "SingularFamily", "multi_indices",
    "multi_indices_upto", "alpha_factorial", "build_derivative_basis", "apply_derivative",
    "difference_apply", "symbol_class_fit", "compose", "adjoint_symbol", "amplitude_reduce", "chi",
    "asymptotic_sum", "shell_sup", "fit_decay_slope",
]
