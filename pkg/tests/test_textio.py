import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonharmonic.eigensystem import ModelProblem
from nonharmonic.quantization import SymbolTable
from nonharmonic.textio import (Config, FormatError, load_config, parse_config, read_any, read_coeffs,
                                read_grid_function, read_symbol, write_coeffs, write_csv, write_grid_function,
                                write_symbol)
from nonharmonic.transform import random_band_limited, random_coeffs

PROBLEMS = [ModelProblem.oh1d(2.0), ModelProblem.oh1d(0.5), ModelProblem.ohnd((2.0, 0.5))]


@pytest.mark.parametrize("p", PROBLEMS, ids=lambda p: f"{p.kind}-{p.h}")
def test_grid_function_round_trip(p, tmp_path, rng):
    f = random_band_limited(p, 3, 8, rng)
    write_grid_function(tmp_path / "f.txt", f)
    g = read_grid_function(tmp_path / "f.txt")
    assert g.problem == p and g.side == f.side
    np.testing.assert_array_equal(g.values, f.values)


@pytest.mark.parametrize("p", PROBLEMS, ids=lambda p: f"{p.kind}-{p.h}")
def test_coeffs_round_trip(p, tmp_path, rng):
    c = random_coeffs(p, 4, rng)
    write_coeffs(tmp_path / "c.txt", c)
    c2 = read_any(tmp_path / "c.txt")
    assert c2.N == c.N and c2.flavor == c.flavor
    np.testing.assert_array_equal(c2.values, c.values)


@pytest.mark.parametrize("p", PROBLEMS, ids=lambda p: f"{p.kind}-{p.h}")
def test_symbol_round_trip(p, tmp_path, rng):
    M, N = 4, 2
    a = SymbolTable.from_function(p, M, N, lambda x, xi: 0 * xi[..., 0] + 1.0)
    a = a.with_values(rng.standard_normal(a.values.shape) + 1j * rng.standard_normal(a.values.shape))
    write_symbol(tmp_path / "a.txt", a)
    b = read_symbol(tmp_path / "a.txt")
    assert (b.M, b.N) == (M, N)
    np.testing.assert_array_equal(b.values, a.values)


@settings(max_examples=50, deadline=None)
@given(z=st.complex_numbers(allow_nan=False, allow_infinity=False, max_magnitude=1e300))
def test_seventeen_digits_round_trip(z, tmp_path_factory):
    p = ModelProblem.oh1d(1.0)
    c = random_coeffs(p, 0, np.random.default_rng(0))
    c = c.with_values(np.array([z]))
    path = tmp_path_factory.mktemp("rt") / "c.txt"
    write_coeffs(path, c)
    assert read_coeffs(path).values[0] == z


def test_output_is_deterministic(tmp_path):
    p = ModelProblem.oh1d(2.0)
    f = random_band_limited(p, 3, 8, np.random.default_rng(5))
    write_grid_function(tmp_path / "a.txt", f)
    write_grid_function(tmp_path / "b.txt", f)
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()


def _coeff_file(tmp_path, body):
    path = tmp_path / "bad.txt"
    path.write_text("# kind = SpectralCoeffs\n# problem = Oh1D\n# h = 2\n# d = 1\n# N = 1\n# flavor = L\n" + body)
    return path


@pytest.mark.parametrize("body, line, fragment", [
    ("0 1 0\n1 0 zz\n", 8, "zz"),
    ("0 1 0\n1 0\n", 8, "columns"),
    ("0 1 0\n5 0 0\n", 8, "outside"),
])
def test_format_errors_name_the_line(tmp_path, body, line, fragment):
    path = _coeff_file(tmp_path, body)
    with pytest.raises(FormatError, match=rf"bad.txt:{line}:.*{fragment}"):
        read_coeffs(path)


def test_wrong_kind_and_missing_header(tmp_path):
    path = _coeff_file(tmp_path, "0 1 0\n")
    with pytest.raises(FormatError, match="not a GridFunction"):
        read_grid_function(path)
    path.write_text("# kind = SpectralCoeffs\n# problem = Oh1D\n# h = 2\n0 1 0\n")
    with pytest.raises(FormatError, match="'N'"):
        read_coeffs(path)
    path.write_text("# kind = Mystery\n")
    with pytest.raises(FormatError, match="unknown kind"):
        read_any(path)


def test_header_without_equals(tmp_path):
    path = tmp_path / "x.txt"
    path.write_text("# kind SpectralCoeffs\n")
    with pytest.raises(FormatError, match="x.txt:1"):
        read_any(path)


def test_config_parse_and_round_trip():
    text = "[problem]\nkind = OhND\nh = 2 0.5\n\n[grid]\nM = 64\nN = 8\n\n[experiment]\nseed = 4\n"
    cfg = parse_config(text)
    assert cfg.problem == ModelProblem.ohnd((2.0, 0.5))
    assert (cfg.M, cfg.N) == (64, 8)
    assert cfg.get("seed", 0, int) == 4 and cfg.get("missing", 1.5, float) == 1.5
    assert parse_config(cfg.to_text()) == cfg


def test_config_defaults():
    cfg = parse_config("")
    assert cfg.problem == ModelProblem.oh1d(2.0) and (cfg.M, cfg.N) == (1024, 64)


@pytest.mark.parametrize("text, fragment", [
    ("[problem]\nkind = Oh3D\n", "unknown problem kind"),
    ("[problem]\nkind = Oh1D\nh = -1\n", "positive"),
    ("[grid]\nM = many\n", "integer"),
    ("[grid]\nM = 1\n", "M >= 2"),
    ("[plot]\nx = 1\n", "unknown section"),
    ("M = 4\n", "<config>:1: File contains no section headers"),
    ("[grid]\nM = 4\nM = 8\n", "<config>:3: option .m. repeated"),
])
def test_config_errors(text, fragment):
    with pytest.raises(FormatError, match=fragment):
        parse_config(text)


def test_load_config_missing_file(tmp_path):
    with pytest.raises(FormatError, match="nope.ini"):
        load_config(tmp_path / "nope.ini")


def test_csv_formats_floats(tmp_path):
    write_csv(tmp_path / "t.csv", [{"N": 8, "err": 0.1}, {"N": 16, "err": 1 / 3}])
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines == ["N,err", "8,0.10000000000000001", "16,0.33333333333333331"]


def test_config_inline_comments():
    cfg = parse_config("[problem]\nkind = OhND   ; two axes\nh = 2 0.5 # weights\n[grid]\nN = 4 ; window\n")
    assert cfg.problem == ModelProblem.ohnd((2.0, 0.5)) and cfg.N == 4
