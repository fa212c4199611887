"""Columnar text files, configuration records and CSV tables.

Every file starts with ``# key = value`` header lines followed by whitespace
separated rows.  Numbers are written with 17 significant digits so that a
write/read round trip is exact.
"""
from __future__ import annotations

import configparser
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .eigensystem import ModelProblem, window_for
from .quantization import SymbolTable
from .transform import GridFunction, SpectralCoeffs

FMT = "%.17g"


class FormatError(ValueError):
    """Malformed input file; the message carries ``path:line``."""


def _fmt(v) -> str:
    return FMT % v


def _header_lines(header: dict) -> list[str]:
    out = []
    for k, v in header.items():
        if isinstance(v, (list, tuple)):
            v = " ".join(_fmt(x) if isinstance(x, float) else str(x) for x in v)
        elif isinstance(v, float):
            v = _fmt(v)
        out.append(f"# {k} = {v}")
    return out


def _problem_header(p: ModelProblem) -> dict:
    return {"problem": p.kind, "h": list(p.h), "d": p.d}


def _write(path, header: dict, rows) -> None:
    lines = _header_lines(header)
    lines += [" ".join(r) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def _read(path):
    """Return ``(header, rows, row_line_numbers)`` with ``rows`` as float arrays."""
    path = Path(path)
    header, rows, lines = {}, [], []
    for n, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if "=" not in line:
                raise FormatError(f"{path}:{n}: header line without '='")
            k, v = line[1:].split("=", 1)
            header[k.strip()] = v.strip()
            continue
        try:
            rows.append([float(t) for t in line.split()])
        except ValueError as exc:
            raise FormatError(f"{path}:{n}: {exc}") from None
        lines.append(n)
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        w0 = len(rows[0])
        bad = next(i for i, r in enumerate(rows) if len(r) != w0)
        raise FormatError(f"{path}:{lines[bad]}: expected {w0} columns, got {len(rows[bad])}")
    arr = np.array(rows, dtype=float) if rows else np.zeros((0, 0))
    return header, arr, lines


def _need(header: dict, key: str, path):
    if key not in header:
        raise FormatError(f"{path}:1: missing header key {key!r}")
    return header[key]


def _problem_from_header(header: dict, path) -> ModelProblem:
    try:
        return ModelProblem.from_config({"kind": _need(header, "problem", path), "h": _need(header, "h", path),
                                         "d": header.get("d", "1")})
    except (ValueError, KeyError) as exc:
        raise FormatError(f"{path}:1: {exc}") from None


def _positions(w, idx: np.ndarray, lines, path) -> np.ndarray:
    """Window positions of integer index rows, with the offending line on failure."""
    idx = idx.astype(int)
    bad = np.nonzero(np.any(np.abs(idx) > w.N, axis=1))[0]
    if bad.size:
        raise FormatError(f"{path}:{lines[bad[0]]}: index {tuple(idx[bad[0]])} outside the window N={w.N}")
    flat = np.ravel_multi_index(tuple((idx + w.N).T), w.cube_shape)
    return w._inverse[flat]


def _complex(rows: np.ndarray) -> np.ndarray:
    return rows[:, -2] + 1j * rows[:, -1]


# ---------------------------------------------------------------- grid functions

def write_grid_function(path, f: GridFunction) -> None:
    p = f.problem
    header = {"kind": "GridFunction", **_problem_header(p), "M": f.M, "side": f.side}
    idx = np.indices(f.values.shape).reshape(p.d, -1).T
    vals = f.values.ravel()
    rows = ([str(int(i)) for i in ix] + [_fmt(v.real), _fmt(v.imag)] for ix, v in zip(idx, vals))
    _write(path, header, rows)


def read_grid_function(path) -> GridFunction:
    header, rows, lines = _read(path)
    if header.get("kind") != "GridFunction":
        raise FormatError(f"{path}:1: not a GridFunction file")
    p = _problem_from_header(header, path)
    M = int(_need(header, "M", path))
    if rows.shape != (M**p.d, p.d + 2):
        raise FormatError(f"{path}:{lines[0] if lines else 1}: expected {M**p.d} rows of {p.d + 2} columns")
    vals = np.zeros((M,) * p.d, dtype=complex)
    vals[tuple(rows[:, :p.d].astype(int).T)] = _complex(rows)
    return GridFunction(p, vals, header.get("side", "L"))


# ---------------------------------------------------------------- coefficients

def write_coeffs(path, c: SpectralCoeffs) -> None:
    p = c.problem
    header = {"kind": "SpectralCoeffs", **_problem_header(p), "N": c.N, "flavor": c.flavor}
    rows = ([str(int(i)) for i in ix] + [_fmt(v.real), _fmt(v.imag)]
            for ix, v in zip(c.window.indices, c.values))
    _write(path, header, rows)


def read_coeffs(path) -> SpectralCoeffs:
    header, rows, lines = _read(path)
    if header.get("kind") != "SpectralCoeffs":
        raise FormatError(f"{path}:1: not a SpectralCoeffs file")
    p = _problem_from_header(header, path)
    N = int(_need(header, "N", path))
    w = window_for(p, N)
    if rows.shape[0] == 0 or rows.shape[1] != p.d + 2:
        raise FormatError(f"{path}:{lines[0] if lines else 1}: expected rows of {p.d + 2} columns")
    vals = np.zeros(w.size, dtype=complex)
    vals[_positions(w, rows[:, :p.d], lines, path)] = _complex(rows)
    return SpectralCoeffs(p, N, header.get("flavor", "L"), vals)


# ---------------------------------------------------------------- symbols

def write_symbol(path, a: SymbolTable) -> None:
    p = a.problem
    header = {"kind": "SymbolTable", **_problem_header(p), "M": a.M, "N": a.N, "flavor": a.flavor}
    idx = a.window.indices

    def rows():
        for k in range(a.values.shape[0]):
            for j in range(idx.shape[0]):
                v = a.values[k, j]
                yield [str(k)] + [str(int(i)) for i in idx[j]] + [_fmt(v.real), _fmt(v.imag)]

    _write(path, header, rows())


def read_symbol(path) -> SymbolTable:
    header, rows, lines = _read(path)
    if header.get("kind") != "SymbolTable":
        raise FormatError(f"{path}:1: not a SymbolTable file")
    p = _problem_from_header(header, path)
    M, N = int(_need(header, "M", path)), int(_need(header, "N", path))
    w = window_for(p, N)
    if rows.shape != (M**p.d * w.size, p.d + 3):
        raise FormatError(f"{path}:{lines[0] if lines else 1}: expected {M**p.d * w.size} rows of {p.d + 3} columns")
    vals = np.zeros((M**p.d, w.size), dtype=complex)
    vals[rows[:, 0].astype(int), _positions(w, rows[:, 1:1 + p.d], lines, path)] = _complex(rows)
    return SymbolTable(p, M, N, vals, header.get("flavor", "L"))


def read_any(path):
    """Dispatch on the ``kind`` header."""
    header, _, _ = _read(path)
    kind = header.get("kind")
    readers = {"GridFunction": read_grid_function, "SpectralCoeffs": read_coeffs, "SymbolTable": read_symbol}
    if kind not in readers:
        raise FormatError(f"{path}:1: unknown kind {kind!r}")
    return readers[kind](path)


# ---------------------------------------------------------------- CSV

def write_csv(path, rows: list[dict], columns: list[str] | None = None) -> None:
    columns = list(rows[0]) if columns is None and rows else (columns or [])
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(columns)
        for r in rows:
            wr.writerow([_fmt(r[c]) if isinstance(r[c], (float, np.floating)) else r[c] for c in columns])


def write_matrix_csv(path, K: np.ndarray) -> None:
    """Dense complex matrix as CSV with ``re`` and ``im`` blocks side by side."""
    K = np.atleast_2d(K)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        for row in K:
            wr.writerow([_fmt(v) for v in row.real] + [_fmt(v) for v in row.imag])


# ---------------------------------------------------------------- configuration

@dataclass
class Config:
    """``[problem]``, ``[grid]`` and ``[experiment]`` sections of a config file."""

    problem: ModelProblem = field(default_factory=lambda: ModelProblem.oh1d(2.0))
    M: int = 1024
    N: int = 64
    experiment: dict = field(default_factory=dict)

    def get(self, key: str, default=None, cast=str):
        v = self.experiment.get(key)
        return default if v is None else cast(v)

    def to_text(self) -> str:
        p = self.problem
        lines = ["[problem]", f"kind = {p.kind}", "h = " + " ".join(_fmt(v) for v in p.h), f"d = {p.d}", "",
                 "[grid]", f"M = {self.M}", f"N = {self.N}", "", "[experiment]"]
        lines += [f"{k} = {v}" for k, v in sorted(self.experiment.items())]
        return "\n".join(lines) + "\n"


def parse_config(text: str, source: str = "<config>") -> Config:
    """Parse config text; every error is a :class:`FormatError` naming the line."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        msg = getattr(exc, "message", str(exc)).splitlines()[0]
        if isinstance(exc, configparser.DuplicateOptionError):
            msg = f"option {exc.option!r} repeated in section [{exc.section}]"
        where = f"{source}:{line}" if line else source
        raise FormatError(f"{where}: {msg}") from None
    unknown = set(cp.sections()) - {"problem", "grid", "experiment"}
    if unknown:
        raise FormatError(f"{source}: unknown section(s) {sorted(unknown)}")
    cfg = Config()
    if cp.has_section("problem"):
        sec = dict(cp["problem"])
        try:
            cfg.problem = ModelProblem.from_config({"kind": sec.get("kind", "Oh1D"), "h": sec.get("h", "1"),
                                                    **({"d": sec["d"]} if "d" in sec else {})})
        except (ValueError, KeyError) as exc:
            raise FormatError(f"{source} [problem]: {exc}") from None
    if cp.has_section("grid"):
        for key in ("M", "N"):
            if key.lower() in cp["grid"]:
                try:
                    setattr(cfg, key, int(cp["grid"][key.lower()]))
                except ValueError:
                    raise FormatError(f"{source} [grid]: {key} must be an integer") from None
    if cfg.M < 2 or cfg.N < 0:
        raise FormatError(f"{source} [grid]: need M >= 2 and N >= 0")
    if cp.has_section("experiment"):
        cfg.experiment = dict(cp["experiment"])
    return cfg


def load_config(path) -> Config:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path))


__all__ = [
    "FormatError", "write_grid_function", "read_grid_function", "write_coeffs", "read_coeffs",
    "write_symbol", "read_symbol", "read_any", "write_csv", "write_matrix_csv", "Config", "parse_config",
    "load_config",
]
