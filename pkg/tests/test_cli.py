from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from hsloc.cli import ConfigError, evaluate, main, parse_config, run

LAPLACIAN_DOC = {"coeffs": [[0, 0], [0, 0], [-39.47841760435743, 0]], "interval": [0, 3.141592653589793]}


def write(tmp_path, doc):
    p = tmp_path / "job.json"
    p.write_text(json.dumps(doc))
    return str(p)


def test_expression_grammar():
    assert evaluate("-4*pi^2") == pytest.approx(-4 * np.pi**2)
    assert evaluate("pi/2 + 1") == pytest.approx(np.pi / 2 + 1)
    assert evaluate("2*i") == 2j
    with pytest.raises(ConfigError):
        evaluate("__import__('os')")
    with pytest.raises(ConfigError):
        evaluate("1 +")


def test_minimal_laplacian_config():
    cfg = parse_config(LAPLACIAN_DOC)
    assert cfg.symbol.order == 2 and cfg.symbol.is_laplacian()
    assert cfg.n == 4096 and cfg.padding == 0.25 and cfg.s == 0.0
    assert cfg.lambdas is None


def test_symbolic_shorthand_config():
    cfg = parse_config({"coeffs": [0, 0, "-4*pi^2"], "interval": [0, "pi"]})
    assert cfg.symbol.is_laplacian() and cfg.interval[1] == pytest.approx(np.pi)


def test_config_is_deterministic():
    a = parse_config(json.dumps(LAPLACIAN_DOC))
    b = parse_config(json.dumps(LAPLACIAN_DOC))
    assert a.symbol == b.symbol and a.interval == b.interval and a.tolerances == b.tolerances


@pytest.mark.parametrize(
    "patch, path",
    [
        ({"coeffs": [[1, 0], [0, 2]], "variants": ["dirichlet_graph"]}, "$.variants[0]"),
        ({"interval": [1, 0]}, "$.interval"),
        ({"coeffs": [1, 0, 0]}, "$.coeffs"),
        ({"grid": {"N": 1000}}, "$.grid.N"),
        ({"lambdas": [[1, "x"]]}, "$.lambdas[0][1]"),
        ({"bogus": 1}, "$.bogus"),
        ({"tolerances": {"rank": -1}}, "$.tolerances.rank"),
    ],
)
def test_config_errors_name_the_field(patch, path):
    with pytest.raises(ConfigError) as exc:
        parse_config({**LAPLACIAN_DOC, **patch})
    assert exc.value.path == path


def test_dirichlet_error_names_constraint():
    with pytest.raises(ConfigError, match="m = 1"):
        parse_config({**LAPLACIAN_DOC, "coeffs": [[0, 0], [1, 0]], "variants": ["dirichlet_graph"]})


def test_explicit_lambda_list():
    cfg = parse_config({**LAPLACIAN_DOC, "lambdas": [[-1, 0], [-4, 0]], "variants": ["dirichlet_graph"]})
    out = run("classify", cfg)
    assert [r["class"] for r in out.payload["results"]] == ["point", "point"]


def test_classify_empty_list(tmp_path, capsys):
    code = main(["classify", "--config", write(tmp_path, {**LAPLACIAN_DOC, "lambdas": []})])
    assert code == 0
    assert json.loads(capsys.readouterr().out) == {"results": []}


def test_table_pretty(tmp_path, capsys):
    assert main(["table", "--config", write(tmp_path, LAPLACIAN_DOC), "--format", "pretty"]) == 0
    out = capsys.readouterr().out
    assert "{-n^2 : n ∈ ℕ}" in out and "ℂ∖{-n^2 : n ∈ ℕ}" in out
    assert "inclusion checks over 260 samples: pass" in out


def test_eigen_output(tmp_path, capsys):
    doc = {**LAPLACIAN_DOC, "eigen": {"n_max": 3}}
    assert main(["eigen", "--config", write(tmp_path, doc)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert [e["lambda"] for e in payload["eigenvalues"]] == pytest.approx([-1, -4, -9])
    assert all(e["abs_det"] < 1e-9 for e in payload["eigenvalues"])


def test_output_is_byte_identical(tmp_path):
    cfg = write(tmp_path, LAPLACIAN_DOC)
    for d in ("a", "b"):
        assert main(["table", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "table.json").read_bytes() == (tmp_path / "b" / "table.json").read_bytes()


def test_classification_carries_provenance():
    out = run("classify", parse_config({**LAPLACIAN_DOC, "lambdas": [2.0]}))
    assert {r["provenance"] for r in out.payload["results"]} == {"kernel-computed", "theorem-derived"}


def test_witness_csv(tmp_path, capsys):
    doc = {**LAPLACIAN_DOC, "lambdas": [1]}
    assert main(["witness", "--config", write(tmp_path, doc), "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "lambda,j,op_side,sol_side" and len(lines) == 9


def test_norm_and_hypo(tmp_path, capsys):
    doc = {**LAPLACIAN_DOC, "interval": [-3, 3], "function": "gaussian", "s_values": [0, 1]}
    assert main(["norm", "--config", write(tmp_path, doc)]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert {r["s"] for r in payload["hs_norm"]} == {0, 1}
    assert main(["hypo", "--config", write(tmp_path, LAPLACIAN_DOC)]) == 0
    hypo = json.loads(capsys.readouterr().out)
    assert hypo["adjoint_domain"]["label"] == "D[a(D)*] = H^{2}_c(I)"


def test_closure_verify(tmp_path, capsys):
    doc = {**LAPLACIAN_DOC, "closure": {"j_max": 24}, "s_values": [0]}
    assert main(["closure-verify", "--config", write(tmp_path, doc), "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("series,s,j,seminorm_value")


def test_error_exit_code(tmp_path, capsys):
    assert main(["table", "--config", write(tmp_path, {"interval": [0, 1]})]) == 1
    assert "error[config]: $.coeffs" in capsys.readouterr().err


def test_order_zero_is_module_error(tmp_path, capsys):
    assert main(["witness", "--config", write(tmp_path, {"coeffs": [1], "interval": [0, 1]})]) == 1
    assert capsys.readouterr().err.startswith("error[spectra]")


def test_alarm_exit_code(tmp_path, monkeypatch, capsys):
    import hsloc.spectra as sp

    monkeypatch.setattr(sp, "kernel_dimension", lambda M, tol=1e-8: 1)
    assert main(["classify", "--config", write(tmp_path, {**LAPLACIAN_DOC, "lambdas": [2]})]) == 2
    assert capsys.readouterr().err.startswith("alarm[spectra]")


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hsloc", "hypo", "--config", write(tmp_path, LAPLACIAN_DOC),
                           "--format", "pretty"], capture_output=True, text=True)
    assert proc.returncode == 0 and "elliptic=True" in proc.stdout
