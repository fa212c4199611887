"""Command line front end: ``nonharmonic verify`` and ``nonharmonic run <task>``.

Exit codes: 0 success, 1 failed checks, 2 configuration, format or I/O errors.

CSV outputs of ``run``::

    convolve_check.csv    method, max_abs_diff
    compose_check.csv     n_terms, max_abs_error
    remainder_slopes.csv  side, n_terms, slope
    solve_residuals.csv   iter, residual
    solve_summary.csv     method, n_terms, iterations, rel_error, converged
    table_convergence.csv N, roundtrip_error, sobolev_norm
    table_kernel_decay.csv lo, hi, max
    table_remainder_slopes.csv side, n_terms, slope
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import checks
from .calculus import compose
from .convolution import conv_integral_oh1, conv_spectral
from .eigensystem import ModelProblem, angle_weight, eigenvalue
from .parametrix import DivergenceError, EllipticityError, elliptic_solve, manufactured_problem, parametrix
from .quantization import SymbolTable, kernel_decay_report, op_apply, schwartz_kernel
from .spaces import sobolev_norm
from .textio import (Config, FormatError, load_config, read_any, write_coeffs,
                     write_csv, write_grid_function, write_matrix_csv, write_symbol)
from .transform import (GridFunction, SpectralCoeffs, forward_l, forward_lstar, inverse_l, inverse_lstar, l2_norm,
                        random_band_limited, sample_u)

log = logging.getLogger("nonharmonic")

TASKS = ("transform", "convolve", "quantize", "compose", "parametrix", "solve", "tables")
KERNEL_CSV_MAX = 4096


class UsageError(ValueError):
    pass


def _x(x):
    return x[..., 0]


def preset_symbol(name: str, p: ModelProblem, M: int, N: int) -> SymbolTable:
    """Named symbols used by ``quantize``."""
    presets = {
        "elliptic": lambda x, xi: eigenvalue(p, xi) + 2 + np.sin(2 * np.pi * _x(x)),
        "smoothing": lambda x, xi: angle_weight(p, xi) ** -4 + 0 * _x(x),
        "shift": lambda x, xi: np.exp(2j * np.pi * _x(x)) + 0 * xi[..., 0],
        "laplace": lambda x, xi: eigenvalue(p, xi) + 0 * _x(x),
    }
    if name not in presets:
        raise UsageError(f"unknown symbol preset {name!r}; choose from {sorted(presets)}")
    return SymbolTable.from_function(p, M, N, presets[name])


def _inputs(args, count: int | None = None) -> list:
    files = args.input or []
    if count is not None and files and len(files) != count:
        raise UsageError(f"expected {count} input file(s), got {len(files)}")
    return [read_any(f) for f in files]


# ---------------------------------------------------------------- tasks

def task_transform(cfg: Config, args, out: Path, rng) -> None:
    flavor = cfg.get("flavor", "L")
    objs = _inputs(args, 1)
    if objs:
        obj = objs[0]
    else:
        xi = [int(v) for v in cfg.get("xi", "3").replace(",", " ").split()]
        xi = xi + [0] * (cfg.problem.d - len(xi))
        obj = sample_u(cfg.problem, np.array(xi[: cfg.problem.d]), cfg.M)
        write_grid_function(out / "sample.txt", obj)
    if isinstance(obj, GridFunction):
        c = forward_l(obj, cfg.N) if flavor == "L" else forward_lstar(obj, cfg.N)
        write_coeffs(out / "transform.txt", c)
    elif isinstance(obj, SpectralCoeffs):
        f = inverse_l(obj, cfg.M) if obj.flavor == "L" else inverse_lstar(obj, cfg.M)
        write_grid_function(out / "transform.txt", f)
    else:
        raise UsageError("transform takes a GridFunction or SpectralCoeffs file")


def task_convolve(cfg: Config, args, out: Path, rng) -> None:
    objs = _inputs(args, 2)
    if objs:
        f, g = objs
        if not (isinstance(f, GridFunction) and isinstance(g, GridFunction)):
            raise UsageError("convolve takes two GridFunction files")
    else:
        f = random_band_limited(cfg.problem, cfg.N, cfg.M, rng, decay=1.0)
        g = random_band_limited(cfg.problem, cfg.N, cfg.M, rng, decay=1.0)
    s = conv_spectral(f, g, cfg.N)
    write_grid_function(out / "convolve.txt", s)
    if cfg.problem.kind == "Oh1D":
        ref = conv_integral_oh1(f, g)
        write_csv(out / "convolve_check.csv",
                  [{"method": "trapezoid", "max_abs_diff": float(np.abs(s.values - ref.values).max())}])


def task_quantize(cfg: Config, args, out: Path, rng) -> None:
    objs = _inputs(args)
    sym = next((o for o in objs if isinstance(o, SymbolTable)), None)
    f = next((o for o in objs if isinstance(o, GridFunction)), None)
    if sym is None:
        sym = preset_symbol(cfg.get("symbol", "elliptic"), cfg.problem, cfg.M, cfg.N)
    if f is None:
        f = random_band_limited(sym.problem, sym.N, sym.M, rng, decay=2.0)
    write_symbol(out / "symbol.txt", sym)
    write_grid_function(out / "applied.txt", op_apply(sym, f))
    if sym.M**sym.problem.d <= KERNEL_CSV_MAX:
        write_matrix_csv(out / "kernel.csv", schwartz_kernel(sym))
    else:
        log.info("kernel.csv skipped: %d grid points exceed %d", sym.M**sym.problem.d, KERNEL_CSV_MAX)


def task_compose(cfg: Config, args, out: Path, rng) -> None:
    n_terms = cfg.get("n_terms", 2, int)
    objs = _inputs(args, 2)
    p = cfg.problem
    if objs:
        a, b = objs
        if not (isinstance(a, SymbolTable) and isinstance(b, SymbolTable)):
            raise UsageError("compose takes two SymbolTable files")
        write_symbol(out / "compose.txt", compose(a, b, n_terms))
        return
    # preset: L after multiplication by e^{2 pi i x_1}
    a = preset_symbol("laplace", p, cfg.M, cfg.N)
    b = preset_symbol("shift", p, cfg.M, cfg.N)
    c = compose(a, b, n_terms)
    e1 = np.eye(p.d, dtype=int)[0]
    ref = SymbolTable.from_function(p, cfg.M, c.N, lambda x, xi: eigenvalue(p, xi + e1) * np.exp(2j * np.pi * _x(x)))
    write_symbol(out / "compose.txt", c)
    write_csv(out / "compose_check.csv",
              [{"n_terms": n_terms, "max_abs_error": float(np.abs(c.values - ref.values).max())}])


def _slope_rows(a: SymbolTable, n_terms_list) -> list[dict]:
    rows = []
    for side in ("left", "right"):
        for nt in n_terms_list:
            try:
                s = checks.parametrix_slopes(a, (nt,), side)[nt]
            except ValueError as exc:
                # window too small for a fit; keep the row so the table shape is fixed
                log.warning("slope %s n_terms=%d: %s", side, nt, exc)
                s = float("nan")
            rows.append({"side": side, "n_terms": nt, "slope": s})
    return rows


def task_parametrix(cfg: Config, args, out: Path, rng) -> None:
    n_terms = cfg.get("n_terms", 3, int)
    mu = cfg.get("mu", 1.0, float)
    objs = _inputs(args, 1)
    a = objs[0] if objs else preset_symbol("elliptic", cfg.problem, cfg.M, cfg.N)
    if not isinstance(a, SymbolTable):
        raise UsageError("parametrix takes a SymbolTable file")
    write_symbol(out / "parametrix.txt", parametrix(a, mu, n_terms))
    write_csv(out / "remainder_slopes.csv", _slope_rows(a, range(2, n_terms + 1)) if n_terms > 1 else [],
              ["side", "n_terms", "slope"])


def task_solve(cfg: Config, args, out: Path, rng) -> None:
    n_terms = cfg.get("n_terms", 1, int)
    mu = cfg.get("mu", 1.0, float)
    method = cfg.get("method", "neumann")
    iters = cfg.get("refine_iters", 8, int)
    a = preset_symbol("elliptic", cfg.problem, cfg.M, cfg.N)
    objs = _inputs(args, 1)
    if objs:
        f = objs[0]
        if not isinstance(f, GridFunction):
            raise UsageError("solve takes a GridFunction right-hand side")
        u_true = None
    else:
        u_true, f = manufactured_problem(a, rng, support=cfg.get("support", cfg.N // 2, int),
                                         decay=cfg.get("decay", 2.0, float))
    u, rep = elliptic_solve(a, f, mu, n_terms, iters, method=method)
    write_csv(out / "solve_residuals.csv", rep.rows(), ["iter", "residual"])
    write_grid_function(out / "solution.txt", u)
    err = float(l2_norm(u - u_true) / l2_norm(u_true)) if u_true is not None else float("nan")
    write_csv(out / "solve_summary.csv", [{"method": method, "n_terms": n_terms, "iterations": rep.iterations,
                                           "rel_error": err, "converged": int(rep.converged)}])
    log.info("solve: %s, %d iterations, relative error %.3e", method, rep.iterations, err)


def task_tables(cfg: Config, args, out: Path, rng) -> None:
    p = cfg.problem
    # spectral convergence of a smooth function that is not band-limited
    rows = []
    if p.d == 1:
        M = cfg.M
        x = np.arange(M) / M
        f = GridFunction(p, p.h[0] ** x * np.exp(np.cos(2 * np.pi * x)))
        for N in (2, 4, 8, 16, 32):
            if 2 * (N + 1) > M:
                break
            back = inverse_l(forward_l(f, N), M)
            rows.append({"N": N, "roundtrip_error": float(l2_norm(back - f) / l2_norm(f)),
                         "sobolev_norm": sobolev_norm(f, 1.0, N)})
    write_csv(out / "table_convergence.csv", rows, ["N", "roundtrip_error", "sobolev_norm"])
    Mk = min(cfg.M, 256 if p.d == 1 else 16)
    Nk = min(cfg.N, Mk // 2 - 1)
    rep = kernel_decay_report(preset_symbol("smoothing", p, Mk, Nk), -4.0)
    write_csv(out / "table_kernel_decay.csv", rep.shells, ["lo", "hi", "max"])
    Ms, Ns = (min(cfg.M, 128), min(cfg.N, 40)) if p.d == 1 else (min(cfg.M, 32), min(cfg.N, 12))
    write_csv(out / "table_remainder_slopes.csv", _slope_rows(preset_symbol("elliptic", p, Ms, Ns), (2, 3, 4)),
              ["side", "n_terms", "slope"])


TASK_FUNCS = {"transform": task_transform, "convolve": task_convolve, "quantize": task_quantize,
              "compose": task_compose, "parametrix": task_parametrix, "solve": task_solve, "tables": task_tables}


# ---------------------------------------------------------------- commands

def cmd_verify(cfg: Config, args, out: Path | None) -> int:
    results, notes = checks.run_all(cfg.problem, cfg.M, cfg.N, args.seed)
    report = {
        "problem": cfg.problem.to_config(),
        "M": cfg.M,
        "N": cfg.N,
        "seed": args.seed,
        "checks": [c.as_dict() for c in results],
        "warnings": notes,
        "passed": all(c.status != "fail" for c in results),
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    if out is not None:
        (out / "verify.json").write_text(text + "\n")
    print(text)
    return 0 if report["passed"] else 1


def cmd_run(cfg: Config, args, out: Path | None) -> int:
    out = Path(".") if out is None else out
    rng = np.random.default_rng(args.seed)
    TASK_FUNCS[args.task](cfg, args, out, rng)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="config file with [problem], [grid], [experiment] sections")
    common.add_argument("--out", type=Path, help="output directory (created if missing)")
    common.add_argument("--seed", type=int, default=0, help="seed for random ensembles (default 0)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="more log output on stderr")
    parser = argparse.ArgumentParser(prog="nonharmonic", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="run the invariant suite and print a JSON report")
    run = sub.add_parser("run", parents=[common], help="run one task and write its outputs",
                         description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    run.add_argument("task", choices=TASKS)
    run.add_argument("--input", nargs="+", type=Path, help="input files in the columnar text format")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else Config()
        out = args.out
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
        if args.command == "verify":
            return cmd_verify(cfg, args, out)
        return cmd_run(cfg, args, out)
    except (FormatError, UsageError, OSError) as exc:
        print(f"nonharmonic: error: {exc}", file=sys.stderr)
        return 2
    except (EllipticityError, DivergenceError) as exc:
        print(f"nonharmonic: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
