import csv
import io
import json

import pytest

from nashkernel import ConfigError, RunConfig, parse_config
from nashkernel.cli import main

PASSING = ["--L", "10", "--n", "601", "--alpha", "1.0", "--t", "0.01,0.02,0.05,0.1"]


def rows(text):
    return list(csv.reader(io.StringIO(text)))


# -- configuration -------------------------------------------------------------------


def test_defaults_from_empty_file(tmp_path):
    p = tmp_path / "empty.json"
    p.write_text("")
    cfg = parse_config(p)
    assert cfg.model.family == "cauchy" and cfg.model.beta == 2.0 and cfg.model.d == 1
    assert (cfg.L, cfg.n, cfg.bc) == (40.0, 2001, "neumann")
    assert cfg.alpha_list == (0.5,) and cfg.epsilon == 0.5
    assert cfg == RunConfig()


def test_flags_override_file(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"alpha_list": [0.9], "grid": {"n": 301}, "epsilon": 0.25}))
    cfg = parse_config(p, {"alpha_list": "0.25,0.5"})
    assert cfg.alpha_list == (0.25, 0.5)
    assert cfg.n == 301 and cfg.epsilon == 0.25


def test_family_grid_defaults():
    cfg = parse_config(None, {"family": "gauss"})
    assert (cfg.L, cfg.n) == (8.0, 1601)


@pytest.mark.parametrize("content,key", [
    ('{"alpha_list": [0.5]', "malformed"),
    ('{"colour": 1}', "colour"),
    ('{"grid": {"m": 3}}', "m"),
    ('{"t_list": [0.1, 0.01]}', "t_list"),
    ('{"alpha_list": []}', "alpha_list"),
    ('{"epsilon": 1.5}', "epsilon"),
    ('{"model": {"family": "cauchy", "beta": 0.5}}', "beta"),
    ('[1, 2]', "object"),
])
def test_schema_violations(tmp_path, content, key):
    p = tmp_path / "bad.json"
    p.write_text(content)
    with pytest.raises(ConfigError, match=key):
        parse_config(p)


def test_missing_file_and_bad_grid(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "nope.json")
    with pytest.raises(ConfigError):
        parse_config(None, {"n": 2})
    with pytest.raises(ConfigError, match="seed"):
        parse_config(None, {"seed": -1})


def test_digest_ignores_output_dir():
    a = parse_config(None, {"output_dir": "x"})
    b = parse_config(None, {"output_dir": "y"})
    c = parse_config(None, {"seed": 7})
    assert a.digest() == b.digest() != c.digest()


# -- command line --------------------------------------------------------------------


def test_model_inspect_row(capsys):
    assert main(["model-inspect", "--model", "cauchy", "--beta", "2", "--x", "0,1"]) == 0
    out = capsys.readouterr()
    table = rows(out.out)
    assert table[0] == ["x", "rho", "grad_log_rho", "V", "minus_AV_over_V", "schrodinger_U"]
    row = dict(zip(table[0], table[1]))
    assert float(row["minus_AV_over_V"]) == 2.0 and float(row["rho"]) == 1.0
    assert float(dict(zip(table[0], table[2]))["minus_AV_over_V"]) == -1.0
    assert out.out.endswith("\r\n") and out.err == ""


def test_usage_errors_exit_2(capsys):
    assert main(["model-inspect", "--n", "2"]) == 2
    assert "n" in capsys.readouterr().err
    assert main(["frobnicate"]) == 2
    assert main(["model-inspect", "--x", "zero"]) == 2
    assert main(["nash", "--model", "cauchy", "--beta", "0.5"]) == 2
    assert capsys.readouterr().out == ""


def test_numerical_diagnostic_exit_3(monkeypatch, capsys):
    from nashkernel import NumericalDiagnostic
    from nashkernel import cli

    def boom(cfg, args):
        raise NumericalDiagnostic("solver did not converge")

    monkeypatch.setitem(cli.COMMANDS, "nash", boom)
    assert main(["nash"]) == 3
    assert "did not converge" in capsys.readouterr().err


def test_kernel_bound_csv(capsys):
    code = main(["kernel-bound", "--model", "cauchy", "--beta", "2", "--L", "2", "--n", "401",
                 "--alpha", "1.0"])
    out = capsys.readouterr()
    table = rows(out.out)
    assert table[0] == ["kind", "alpha", "t", "sup_ratio", "bound_branch", "slope", "C_fit", "reference_exponent"]
    points = [r for r in table[1:] if r[0] == "point"]
    fit = [r for r in table[1:] if r[0] == "fit"]
    assert len(points) == 6 and len(fit) == 1
    assert float(fit[0][7]) == -0.5
    assert float(fit[0][5]) == pytest.approx(-0.5, rel=0.15)
    assert code == 0


def test_kernel_bound_warns_when_unresolved(capsys, caplog):
    code = main(["kernel-bound", "--L", "10", "--n", "101", "--alpha", "0.5"])
    out = capsys.readouterr()
    assert code == 1
    assert "degraded" in caplog.text
    assert all(len(r) == 8 for r in rows(out.out))


def test_nash_command(capsys):
    assert main(["nash", "--L", "10", "--n", "200", "--alpha", "0.5,1.5"]) == 0
    table = rows(capsys.readouterr().out)
    assert table[0] == ["probe_id", "alpha", "gamma", "lhs", "rhs", "gap"]
    assert len(table) == 1 + 2 * 64


def test_fractional_check_command(capsys):
    assert main(["fractional-check", "--L", "10", "--n", "200"]) == 0
    table = rows(capsys.readouterr().out)
    assert {r[0] for r in table[1:]} == {"balakrishnan", "subordination"}


def test_verify_all_exit_zero_and_deterministic(tmp_path, capsys, monkeypatch):
    outputs = []
    for k, threads in enumerate(("1", "4")):
        monkeypatch.setenv("NKL_THREADS", threads)
        out_dir = tmp_path / f"run{k}"
        assert main(["verify-all", *PASSING, "--out", str(out_dir)]) == 0
        outputs.append((capsys.readouterr().out, {p.name: p.read_bytes() for p in out_dir.iterdir()}))
    assert outputs[0] == outputs[1]
    summary = json.loads(outputs[0][1]["summary.json"])
    assert summary["all_passed"] is True
    assert len(summary["reports"]) == 13


def test_verify_all_failure_exit_one(tmp_path, capsys):
    assert main(["verify-all", "--L", "10", "--n", "101", "--out", str(tmp_path)]) == 1
    table = rows(capsys.readouterr().out)
    status = {r[0]: (r[1], r[2]) for r in table[1:]}
    assert status["cor4.1-exponent"][0] == "fail"
    assert "degraded-resolution" in status["cor4.1-exponent"][1]


def test_bad_thread_count(monkeypatch, tmp_path):
    monkeypatch.setenv("NKL_THREADS", "zero")
    assert main(["verify-all", "--L", "10", "--n", "101", "--out", str(tmp_path)]) == 2
