"""Ellipticity, the parametrix recursion and elliptic solves."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
import logging

import numpy as np

from .calculus import (AdmissibleFamily, apply_derivative, build_derivative_basis, difference_apply,
                       multi_indices, alpha_factorial)
from .eigensystem import window_for
from .quantization import (SymbolTable, operator_matrix, op_apply, power_iteration,
                           symbol_derivative_bound)
from .spaces import coeff_sobolev_norm
from .transform import GridFunction, forward_l, l2_norm

log = logging.getLogger(__name__)

REGULARIZATION = 1e-6
MAX_REFINE = 32
# roundoff floor of ||A u - f|| / ||f||; a solve below it counts as converged
RESIDUAL_FLOOR = 1e-10


class EllipticityError(ValueError):
    pass


class DivergenceError(RuntimeError):
    pass


@dataclass
class EllipticityReport:
    C0: float
    N0: int
    elliptic: bool
    shell_min: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return asdict(self)


def ellipticity_check(a: SymbolTable, mu: float, tol: float = 1e-10) -> EllipticityReport:
    """Scan the shells ``|xi|_inf = n`` for ``|a| >= C0 <xi>^mu``.

    ``N0`` is the smallest shell from which every outer shell stays above
    ``tol`` times the largest shell minimum; ``C0`` is the smallest shell
    minimum from ``N0`` outward.
    """
    w = a.window
    shell = np.max(np.abs(w.indices), axis=1)
    ratio = np.abs(a.values).min(axis=0) / w.weight**mu
    mins = np.array([ratio[shell == n].min() for n in range(a.N + 1)])
    floor = tol * max(mins.max(), 1e-300)
    bad = np.nonzero(mins <= floor)[0]
    N0 = int(bad.max() + 1) if bad.size else 0
    if N0 > a.N:
        return EllipticityReport(0.0, N0, False, mins.tolist())
    C0 = float(mins[N0:].min())
    return EllipticityReport(C0, N0, bool(C0 > 0 and N0 < a.N / 2), mins.tolist())


def regularized_reciprocal(a: SymbolTable, mu: float, N0: int) -> SymbolTable:
    """``1/a`` on shells ``>= N0`` and ``conj(a) / (|a|^2 + 1e-6 <xi>^{2 mu})`` below."""
    w = a.window
    shell = np.max(np.abs(w.indices), axis=1)
    vals = np.empty_like(a.values)
    hi = shell >= N0
    vals[:, hi] = 1.0 / a.values[:, hi]
    lo = ~hi
    if lo.any():
        av = a.values[:, lo]
        vals[:, lo] = np.conj(av) / (np.abs(av) ** 2 + REGULARIZATION * w.weight[lo] ** (2 * mu))
    return a.with_values(vals)


def parametrix_terms(a: SymbolTable, mu: float, n_terms: int, family: AdmissibleFamily | None = None,
                     check: bool = True) -> list:
    """``[B_0, ..., B_{n_terms-1}]``; ``B_k`` lives on the window ``N - k``.

    ``B_N = -(1/a) sum_{k<N} sum_{|alpha| = N-k} (1/alpha!) Delta^alpha a D^{(alpha)} B_k``,
    which makes ``Op(a) Op(sum B_k)`` the identity up to order ``-n_terms``.
    """
    rep = ellipticity_check(a, mu)
    if check and not rep.elliptic:
        raise EllipticityError(f"symbol is not elliptic of order {mu} (C0={rep.C0:.3g}, N0={rep.N0})")
    if n_terms < 1:
        raise ValueError("n_terms must be at least 1")
    if a.N - (n_terms - 1) < 0:
        raise ValueError("window too small for the requested number of terms")
    d = a.problem.d
    family = AdmissibleFamily.default(d) if family is None else family
    basis = build_derivative_basis(family, max(1, n_terms - 1)) if n_terms > 1 else None
    inv = regularized_reciprocal(a, mu, rep.N0)
    terms = [inv]
    diffs = {}
    for n in range(1, n_terms):
        n_new = a.N - n
        acc = np.zeros((a.M**d, window_for(a.problem, n_new).size), dtype=complex)
        for k in range(n):
            for alpha in multi_indices(d, n - k):
                if alpha not in diffs:
                    diffs[alpha] = difference_apply(a, alpha, family)
                da = diffs[alpha].restrict(n_new)
                db = apply_derivative(basis, alpha, terms[k]).restrict(n_new)
                acc += da.values * db.values / alpha_factorial(alpha)
        terms.append(inv.restrict(n_new).with_values(-inv.restrict(n_new).values * acc))
    return terms


def parametrix(a: SymbolTable, mu: float, n_terms: int, family: AdmissibleFamily | None = None,
               check: bool = True) -> SymbolTable:
    """``sum_{k < n_terms} B_k`` on the window ``N - (n_terms - 1)``."""
    terms = parametrix_terms(a, mu, n_terms, family, check)
    n_new = terms[-1].N
    total = sum(t.restrict(n_new).values for t in terms)
    return terms[-1].with_values(total)


@dataclass
class SolveReport:
    residuals: list
    iterations: int
    converged: bool

    def rows(self):
        return [{"iter": i, "residual": r} for i, r in enumerate(self.residuals)]


def elliptic_solve(a: SymbolTable, f: GridFunction, mu: float, n_terms: int, refine_iters: int = 8,
                   tol: float = 1e-14, B: SymbolTable | None = None, method: str = "neumann"):
    """Parametrix solve of ``Op(a) u = f``.

    ``method="neumann"`` starts from ``u_0 = B f`` and refines with
    ``u += B (f - A u)``; two consecutive steps whose residual exceeds the
    best one so far raise :class:`DivergenceError`.  ``method="gmres"`` runs ``refine_iters``
    GMRES steps on ``A B y = f`` and returns ``u = B y``; it uses the same
    operator applications per step and also converges when ``I - BA`` has
    spectral radius near or above one at low frequencies.

    Returns ``(u, report)``; the report lists the relative residual
    ``||A u - f|| / ||f||`` after every step.
    """
    if method not in ("neumann", "gmres"):
        raise ValueError(f"unknown method {method!r}")
    refine_iters = min(int(refine_iters), MAX_REFINE)
    if B is None:
        B = parametrix(a, mu, n_terms)
    nf = l2_norm(f)
    if nf == 0:
        return f.with_values(np.zeros_like(f.values), side="L"), SolveReport([0.0], 0, True)
    if method == "gmres":
        return _gmres_solve(a, B, f, refine_iters, tol)
    u = op_apply(B, f)
    res = []
    ups = 0
    for it in range(refine_iters + 1):
        r = f - op_apply(a, u)
        rel = l2_norm(r) / nf
        res.append(rel)
        log.debug("iteration %d residual %.3e", it, rel)
        # an increase is measured against the best residual so far, so that
        # a period-two oscillation with growing amplitude is caught as well
        if len(res) > 1 and rel > min(res[:-1]):
            ups += 1
            if ups >= 2:
                raise DivergenceError(f"residual above its best value for two consecutive steps (now {rel:.3e})")
        else:
            ups = 0
        if rel <= tol or it == refine_iters:
            break
        u = u + op_apply(B, r)
    return u, SolveReport(res, len(res) - 1, res[-1] <= max(tol, RESIDUAL_FLOOR))


def _gmres_solve(a: SymbolTable, B: SymbolTable, f: GridFunction, iters: int, tol: float):
    from scipy.sparse.linalg import LinearOperator, gmres

    n = f.values.size
    shape = f.values.shape

    def matvec(y):
        g = f.with_values(np.asarray(y).reshape(shape))
        return op_apply(a, op_apply(B, g)).values.ravel()

    AB = LinearOperator((n, n), matvec=matvec, dtype=complex)
    hist = []
    y, _ = gmres(AB, f.values.ravel().astype(complex), rtol=tol, atol=0.0, restart=max(iters, 1),
                 maxiter=1, callback=hist.append, callback_type="pr_norm")
    u = op_apply(B, f.with_values(y.reshape(shape)))
    rel = l2_norm(op_apply(a, u) - f) / l2_norm(f)
    res = [float(r) for r in hist] + [rel]
    log.debug("gmres: %d steps, residual %.3e", len(hist), rel)
    return u, SolveReport(res, len(hist), rel <= max(tol, RESIDUAL_FLOOR))


@dataclass
class AprioriReport:
    lhs: float
    rhs: float
    ratio: float
    residual: float

    def as_dict(self) -> dict:
        return asdict(self)


def apriori_check(a: SymbolTable, u: GridFunction, f: GridFunction, s: float, n_neg: float, mu: float,
                  N: int | None = None, residual_tol: float = 1e-8) -> AprioriReport:
    """``||u||_{H^{s+mu}}`` against ``||f||_{H^s} + ||u||_{H^{-n_neg}}``."""
    N = a.N if N is None else N
    nf = l2_norm(f)
    residual = l2_norm(op_apply(a, u) - f) / nf if nf > 0 else l2_norm(op_apply(a, u))
    if residual > residual_tol:
        raise ValueError(f"A u = f holds only to {residual:.2e}; cannot certify the estimate")
    cu, cf = forward_l(u, N), forward_l(f, N)
    lhs = coeff_sobolev_norm(cu, s + mu)
    rhs = coeff_sobolev_norm(cf, s) + coeff_sobolev_norm(cu, -n_neg)
    if rhs == 0:
        raise ZeroDivisionError("degenerate input u = f = 0")
    return AprioriReport(lhs, rhs, lhs / rhs, residual)


@dataclass
class SobolevBoundReport:
    norm: float
    converged: bool
    symbol_bound: float
    s: float
    mu: float

    def as_dict(self) -> dict:
        return asdict(self)


def sobolev_bound_check(a: SymbolTable, mu: float, s: float, k: int = 1, iters: int = 20,
                        tol: float = 1e-6) -> SobolevBoundReport:
    """Empirical ``||Op_L(a)||_{H^s -> H^{s - mu}}`` by power iteration in weighted coordinates."""
    T = operator_matrix(a, s=s, t=s - mu)
    res = power_iteration(T, iters, tol)
    return SobolevBoundReport(res.value, res.converged, symbol_derivative_bound(a, k, mu), s, mu)


def manufactured_problem(a: SymbolTable, rng, support: int, decay: float = 2.0):
    """Random band-limited ``u*`` on ``|xi|_inf <= support`` and ``f = Op(a) u*``."""
    from .transform import inverse_l, random_coeffs

    c = random_coeffs(a.problem, a.N, rng, decay=decay, support=support)
    u = inverse_l(c, a.M)
    return u, op_apply(a, u)


__all__ = [
    "EllipticityError", "DivergenceError", "EllipticityReport", "ellipticity_check",
    "regularized_reciprocal", "parametrix_terms", "parametrix", "SolveReport", "elliptic_solve",
    "AprioriReport", "apriori_check", "SobolevBoundReport", "sobolev_bound_check",
    "manufactured_problem",
]
