import json

import pytest
import sympy as sp

from hydroham.cli import EXIT_FAIL, EXIT_OK, EXIT_USAGE, RunConfig, main
from hydroham.files import load_operator, load_system
from hydroham.symkernel import is_zero, jet

DATA = "data"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("path", [f"{DATA}/three_wave.op", f"{DATA}/three_wave.json"])
def test_check_three_wave(capsys, path):
    code, out, _ = run(capsys, "check", path)
    assert code == EXIT_OK
    assert "PASS" in out


@pytest.mark.parametrize("path", [f"{DATA}/three_wave_mutated.op", f"{DATA}/three_wave_mutated.json"])
def test_check_mutated_three_wave(capsys, path):
    code, out, _ = run(capsys, "check", path, "--format", "json")
    assert code == EXIT_FAIL
    rep = json.loads(out)
    failing = {c["condition"]: c for c in rep["conditions"] if c["status"] == "fail"}
    assert "compatibility.phi_cyclic" in failing
    assert [1, 2, 3] in [f["indices"] for f in failing["compatibility.phi_cyclic"]["failures"]]


def test_check_malformed(capsys):
    code, _, err = run(capsys, "check", f"{DATA}/malformed.json")
    assert code == EXIT_USAGE
    assert "error" in err


def test_check_missing_file(capsys):
    assert run(capsys, "check", "no/such/file.op")[0] == EXIT_USAGE


def test_check_text_format_errors(tmp_path, capsys):
    bad = tmp_path / "bad.op"
    bad.write_text("components: 2\ng:\n  1, 0\n")
    assert run(capsys, "check", str(bad))[0] == EXIT_USAGE
    bad.write_text("g:\n  1\n")
    assert run(capsys, "check", str(bad))[0] == EXIT_USAGE


def test_invert_kdv(tmp_path, capsys):
    out_file = tmp_path / "kdv.json"
    code, out, _ = run(capsys, "invert", "u_t = 6*u*u_x + u_xxx", "-o", str(out_file))
    assert code == EXIT_OK
    assert "u3_x = -6*u1*u2 + u1_t" in out
    s = load_system(str(out_file))
    assert s.fields == ("u1", "u2", "u3") and s.direction == "x"


def test_invert_harry_dym(capsys):
    code, out, _ = run(capsys, "invert",
                       "u_t = -(15/8)*u^(-7/2)*u_x^3 + (9/4)*u^(-5/2)*u_x*u_xx - (1/2)*u^(-3/2)*u_xxx",
                       "--format", "json")
    assert code == EXIT_OK
    s = load_system(json.loads(out))
    u1, u2, u3 = sp.symbols("u1 u2 u3")
    expected = -2 * u1 ** sp.Rational(3, 2) * jet("u1", 1, "t") - sp.Rational(15, 4) * u2**3 / u1**2 \
        + sp.Rational(9, 2) * u2 * u3 / u1
    assert is_zero(s.rhs[2] - expected)


def test_invert_not_linear(capsys):
    code, _, err = run(capsys, "invert", "u_t = u*u_t")
    assert code == EXIT_USAGE
    assert "linear" in err


def test_catalog_list(capsys):
    code, out, _ = run(capsys, "catalog", "list", "--n", "3", "--rank", "2")
    assert code == EXIT_OK
    assert len(out.strip().splitlines()) == 6


def test_catalog_show_emits_operator_file(tmp_path, capsys):
    code, out, _ = run(capsys, "catalog", "show", "C33")
    assert code == EXIT_OK
    f = tmp_path / "c33.op"
    f.write_text(out)
    C = load_operator(str(f))
    assert C.n == 3
    assert run(capsys, "check", str(f))[0] == EXIT_OK


def test_catalog_verify(capsys):
    code, out, _ = run(capsys, "catalog", "verify", "C21", "C36", "--trials", "3")
    assert code == EXIT_OK
    assert out.count("PASS") == 2


def test_catalog_show_needs_id(capsys):
    assert run(capsys, "catalog", "show")[0] == EXIT_USAGE


def test_match(capsys):
    code, out, _ = run(capsys, "match", f"{DATA}/two_wave.json")
    assert code == EXIT_OK and "C_{2,1}" in out
    code, out, _ = run(capsys, "match", f"{DATA}/kdv_inverted.json", "--format", "json")
    m = json.loads(out)["match"]
    assert m["entry"] == "C_{3,2}" and m["bindings"]["h"] == "-1"


def test_reproduce_two_wave(capsys):
    code, out, _ = run(capsys, "reproduce", "two-wave", "--format", "json")
    assert code == EXIT_OK
    data = json.loads(out)
    assert {c["id"]: c["status"] for c in data["claims"]}["catalog-type"] == "pass"


def test_reproduce_failure_exit_code(capsys):
    assert run(capsys, "reproduce", "linear-kdv")[0] == EXIT_FAIL


def test_reproduce_unknown(capsys):
    assert run(capsys, "reproduce", "burgers")[0] == EXIT_USAGE


@pytest.mark.parametrize("argv", [[], ["check"], ["frobnicate"], ["check", "x", "--trials", "many"]])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == EXIT_USAGE


@pytest.mark.parametrize("argv", [["check", f"{DATA}/three_wave_mutated.op"], ["reproduce", "kdv-1"]])
def test_structured_output_is_byte_identical(capsys, argv):
    argv = argv + ["--format", "json", "--seed", "3"]
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv)[1]
    assert first == second and first.endswith("\n")


def test_run_config_defaults():
    cfg = RunConfig("check")
    assert (cfg.seed, cfg.trials, cfg.degree, cfg.format) == (0, 25, 4, "text")
