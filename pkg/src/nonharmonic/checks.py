"""Invariant checks shared by ``nonharmonic verify`` and the acceptance tests.

Each check returns a :class:`Check` with the measured value, the tolerance
and a status of ``"pass"``, ``"fail"`` or ``"skipped"``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
import logging
import warnings

import numpy as np

from .calculus import (AdmissibleFamily, adjoint_symbol, amplitude_reduce, compose, difference_apply,
                       fit_decay_slope)
from .convolution import conv_integral_oh1, conv_spectral
from .eigensystem import ModelProblem, angle_weight, eigenvalue, window_for
from .parametrix import parametrix
from .quantization import SymbolTable, op_apply, op_apply_star, symbol_extract
from .spaces import hausdorff_young_check
from .transform import (AliasingWarning, forward_l, forward_lstar, inverse_lstar, l2_inner, l2_norm,
                        plancherel_pair, random_band_limited, random_coeffs, sample_u)

log = logging.getLogger(__name__)


@dataclass
class Check:
    name: str
    measured: float | None
    tolerance: float
    status: str
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def as_dict(self) -> dict:
        return asdict(self)


def band_ok(M: int, N: int) -> bool:
    return M >= 2 * (N + 1)


def _result(name, measured, tol, ok, detail=""):
    return Check(name, float(measured), float(tol), "pass" if ok else "fail", detail)


def _skipped(name, tol, M, N):
    return Check(name, None, float(tol), "skipped", f"M={M} < 2(N+1) with N={N}")


def _x(x):
    return x[..., 0]


# ---------------------------------------------------------------- transform

def check_biorthogonality(p: ModelProblem, M: int, N: int, tol: float = 1e-10) -> Check:
    """``max |(u_xi, v_eta) - delta|`` through the forward transform of each ``u_xi``."""
    name = "biorthogonality"
    if not band_ok(M, N):
        return _skipped(name, tol, M, N)
    w = window_for(p, N)
    err = 0.0
    for j, xi in enumerate(w.indices):
        c = forward_l(sample_u(p, xi, M), N).values.copy()
        c[j] -= 1.0
        err = max(err, float(np.abs(c).max()))
    return _result(name, err, tol, err <= tol)


def check_plancherel(p: ModelProblem, M: int, N: int, rng, count: int = 10, tol: float = 1e-10,
                     tol_imag: float = 1e-12) -> Check:
    name = "plancherel"
    if not band_ok(M, N):
        return _skipped(name, tol, M, N)
    err, imag = 0.0, 0.0
    for _ in range(count):
        f = random_band_limited(p, N, M, rng)
        n2 = l2_norm(f) ** 2
        r = plancherel_pair(forward_l(f, N), forward_lstar(f, N))
        err = max(err, abs(n2 - r) / n2)
        imag = max(imag, abs(r.imag) / n2)
    ok = err <= tol and imag <= tol_imag
    return _result(name, err, tol, ok, f"max relative imaginary part {imag:.3e}")


def check_convolution(p: ModelProblem, M: int, N: int, rng, count: int = 5, tol: float = 1e-8) -> Check:
    """Spectral product against the integral formula (one dimension) or the homomorphism."""
    name = "convolution"
    if not band_ok(M, N):
        return _skipped(name, tol, M, N)
    err = 0.0
    for _ in range(count):
        f = random_band_limited(p, N, M, rng, decay=1.0)
        g = random_band_limited(p, N, M, rng, decay=1.0)
        s = conv_spectral(f, g, N)
        if p.kind == "Oh1D":
            ref = conv_integral_oh1(f, g)
            err = max(err, float(np.abs(s.values - ref.values).max()))
        else:
            lhs = forward_l(s, N).values
            err = max(err, float(np.abs(lhs - forward_l(f, N).values * forward_l(g, N).values).max()))
    how = "integral formula" if p.kind == "Oh1D" else "homomorphism"
    return _result(name, err, tol, err <= tol, how)


def check_hausdorff_young(p: ModelProblem, M: int, N: int, rng, count: int = 20, tol: float = 1e-8) -> Check:
    name = "hausdorff_young_p1"
    if not band_ok(M, N):
        return _skipped(name, tol, M, N)
    worst = 0.0
    for _ in range(count):
        f = random_band_limited(p, N, M, rng, decay=float(rng.uniform(0, 3)))
        worst = max(worst, hausdorff_young_check(f, 1.0, N).ratio)
    return _result(name, worst, 1 + tol, worst <= 1 + tol, "max ratio")


# ---------------------------------------------------------------- quantization and calculus

def symbol_grid(p: ModelProblem, M: int, N: int) -> tuple[int, int]:
    """Grid for the symbol-level checks, capped so that tables stay small."""
    cap_m = {1: 128, 2: 32, 3: 16}[p.d]
    cap_n = {1: 24, 2: 6, 3: 3}[p.d]
    return min(M, cap_m), min(N, cap_n)


def check_quantization(p: ModelProblem, M: int, N: int, tol: float = 1e-12) -> Check:
    name = "quantization_round_trip"
    Ms, Ns = symbol_grid(p, M, N)
    if not band_ok(Ms, Ns):
        return _skipped(name, tol, Ms, Ns)
    a = SymbolTable.from_function(p, Ms, Ns, lambda x, xi: (2 + np.cos(2 * np.pi * _x(x))) / angle_weight(p, xi))
    back = symbol_extract(lambda f: op_apply(a, f), p, Ms, Ns)
    err = float(np.abs(back.values - a.values).max())
    return _result(name, err, tol, err <= tol)


def check_difference_paths(p: ModelProblem, M: int, N: int, tol: float = 1e-10) -> Check:
    name = "difference_fast_path"
    Ms, Ns = symbol_grid(p, M, N)
    if not band_ok(Ms, Ns):
        return _skipped(name, tol, Ms, Ns)
    a = SymbolTable.from_function(p, Ms, Ns, lambda x, xi: eigenvalue(p, xi) * (1 + 0.5 * np.sin(2 * np.pi * _x(x))))
    fam = AdmissibleFamily.default(p.d)
    err = 0.0
    for alpha in [tuple(int(i == j) for i in range(p.d)) for j in range(p.d)] + [(2,) + (0,) * (p.d - 1)]:
        fast = difference_apply(a, alpha, fam, method="fast")
        gen = difference_apply(a, alpha, fam, method="general")
        err = max(err, float(np.abs(fast.values - gen.values).max()))
    return _result(name, err, tol, err <= tol)


def check_compose_exact(p: ModelProblem, M: int, N: int, tol: float = 1e-10) -> Check:
    """``compose(lambda, e^{2 pi i x}) = lambda_{xi + e_1} e^{2 pi i x}`` exactly at two terms."""
    name = "compose_exact"
    Ms, Ns = symbol_grid(p, M, N)
    if not band_ok(Ms, Ns) or Ns < 2:
        return _skipped(name, tol, Ms, Ns)
    e1 = np.eye(p.d, dtype=int)[0]
    a = SymbolTable.from_function(p, Ms, Ns, lambda x, xi: eigenvalue(p, xi) + 0 * _x(x))
    b = SymbolTable.from_function(p, Ms, Ns, lambda x, xi: np.exp(2j * np.pi * _x(x)) + 0 * xi[..., 0])
    c = compose(a, b, 2)
    ref = SymbolTable.from_function(p, Ms, c.N, lambda x, xi: eigenvalue(p, xi + e1) * np.exp(2j * np.pi * _x(x)))
    err = float(np.abs(c.values - ref.values).max() / np.abs(ref.values).max())
    return _result(name, err, tol, err <= tol, "relative to max |symbol|")


def check_adjoint(p: ModelProblem, M: int, N: int, rng, n_terms: int = 4, tol: float = 1e-6) -> Check:
    """Pairing ``(A f, g) = (f, A* g)`` with the expanded adjoint symbol."""
    name = "adjoint_pairing"
    Ms, Ns = symbol_grid(p, M, N)
    if not band_ok(Ms, Ns) or Ns < n_terms + 1:
        return _skipped(name, tol, Ms, Ns)
    a = SymbolTable.from_function(
        p, Ms, Ns, lambda x, xi: (2 + np.exp(2j * np.pi * _x(x)) + 0.5 * np.exp(6j * np.pi * _x(x)))
        / angle_weight(p, xi))
    t = adjoint_symbol(a, n_terms)
    err = 0.0
    for _ in range(3):
        f = random_band_limited(p, t.N, Ms, rng)
        g = inverse_lstar(random_coeffs(p, t.N, rng), Ms)
        lhs = l2_inner(op_apply(a, f), g)
        rhs = l2_inner(f, op_apply_star(t, g))
        err = max(err, abs(lhs - rhs) / abs(lhs))
    return _result(name, err, tol, err <= tol, f"n_terms={n_terms}")


def check_amplitude(p: ModelProblem, M: int, N: int, tol: float = 1e-10) -> Check:
    """``e^{2 pi i (y - x)_1} psi(xi)`` reduces to ``psi(xi + e_1)``."""
    name = "amplitude_exact"
    Ms, Ns = symbol_grid(p, M, N)
    # the amplitude table holds M^d x M^d x W entries
    Ms, Ns = (min(Ms, 32), min(Ns, 10)) if p.d == 1 else (min(Ms, 8), min(Ns, 3))
    if not band_ok(Ms, Ns):
        return _skipped(name, tol, Ms, Ns)
    e1 = np.eye(p.d, dtype=int)[0]

    def psi(xi):
        return 1.0 / (1.0 + np.sum(xi**2, axis=-1))

    amp = lambda x, y, xi: np.exp(2j * np.pi * (_x(y) - _x(x))) * psi(xi)  # noqa: E731
    red = amplitude_reduce(p, amp, Ms, Ns, 2)
    ref = SymbolTable.from_function(p, Ms, red.N, lambda x, xi: psi(xi + e1) + 0 * _x(x))
    err = float(np.abs(red.values - ref.values).max())
    return _result(name, err, tol, err <= tol)


def parametrix_symbol(p: ModelProblem, M: int, N: int) -> SymbolTable:
    """The elliptic preset ``lambda_xi + 2 + sin 2 pi x_1``."""
    return SymbolTable.from_function(p, M, N, lambda x, xi: eigenvalue(p, xi) + 2 + np.sin(2 * np.pi * _x(x)))


def parametrix_slopes(a: SymbolTable, n_terms_list=(2, 3, 4), side: str = "left") -> dict:
    """Fitted decay slope of ``compose(B, a) - 1`` (left) or ``compose(a, B) - 1`` (right)."""
    out = {}
    for nt in n_terms_list:
        B = parametrix(a, 1, nt)
        r = compose(B, a.restrict(B.N), nt) if side == "left" else compose(a.restrict(B.N), B, nt)
        r = r.with_values(r.values - 1.0)
        out[nt] = fit_decay_slope(r, n_max=r.N - 1)
    return out


def check_parametrix(p: ModelProblem, M: int, N: int, slack: float = 0.5) -> Check:
    name = "parametrix_decay"
    if p.d > 1:
        Ms, Ns = min(M, 32), min(N, 12)
    else:
        Ms, Ns = min(M, 128), min(N, 40)
    need = 16 if p.d == 1 else 12
    if not band_ok(Ms, Ns) or Ns < need:
        return Check(name, None, slack, "skipped", f"needs a window of at least {need} (have {Ns})")
    a = parametrix_symbol(p, Ms, Ns)
    worst = -np.inf
    parts = []
    for side in ("left", "right"):
        for nt, s in parametrix_slopes(a, side=side).items():
            worst = max(worst, s + (nt - slack))
            parts.append(f"{side}{nt}={s:.2f}")
    return _result(name, worst, 0.0, worst <= 0.0, "slope + (n_terms - 0.5); " + " ".join(parts))


def run_all(p: ModelProblem, M: int, N: int, seed: int = 0) -> tuple[list[Check], list[str]]:
    """Run every check; returns ``(checks, warnings)``."""
    rng = np.random.default_rng(seed)
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AliasingWarning)
        checks = [
            check_biorthogonality(p, M, N),
            check_plancherel(p, M, N, rng),
            check_convolution(p, M, N, rng),
            check_quantization(p, M, N),
            check_difference_paths(p, M, N),
            check_compose_exact(p, M, N),
            check_adjoint(p, M, N, rng),
            check_amplitude(p, M, N),
            check_parametrix(p, M, N),
            check_hausdorff_young(p, M, N, rng),
        ]
    notes += sorted({str(w.message) for w in caught})
    if not band_ok(M, N):
        notes.append(f"aliasing: M={M} is below 2(N+1)={2 * (N + 1)}")
    for c in checks:
        log.info("%-26s %-7s %s", c.name, c.status, c.measured)
    return checks, notes


__all__ = [
    "Check", "band_ok", "symbol_grid", "check_biorthogonality", "check_plancherel", "check_convolution",
    "check_hausdorff_young", "check_quantization", "check_difference_paths", "check_compose_exact",
    "check_adjoint", "check_amplitude", "parametrix_symbol", "parametrix_slopes", "check_parametrix",
    "run_all",
]
