import json
import subprocess
import sys

import pytest

from pairbounds.cli import main, validate_report


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    report = json.loads(out) if out.strip() else None
    if report is not None:
        validate_report(report)
    return code, report, err


@pytest.fixture(scope="module")
def compliance_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "fc.csv"
    assert main(["simulate", "--preset", "full_compliance", "--n", "4000", "--seed", "1",
                 "--data-out", str(path), "--out", str(path) + ".json"]) == 0
    return path


@pytest.fixture(scope="module")
def vb_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "vb.csv"
    assert main(["simulate", "--preset", "vb_violation", "--n", "20000", "--seed", "2",
                 "--data-out", str(path), "--out", str(path) + ".json"]) == 0
    return path


def test_stats_dominant_space(capsys):
    code, rep, _ = run(capsys, "stats", "--class-filter", "dominant")
    assert code == 0
    assert rep["stats"]["raw_pairs"] == 65_536


def test_simulate_rejects_empty_sample(capsys, tmp_path):
    code, rep, err = run(capsys, "simulate", "--n", "0", "--data-out", str(tmp_path / "x.csv"))
    assert code == 2 and rep is None and "sample size" in err


def test_simulate_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert main(["simulate", "--n", "200", "--seed", "5", "--data-out", str(path), "--out", str(path) + ".json"]) == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("estimand", ["ade", "ase"])
def test_full_compliance_point_identifies(capsys, compliance_csv, estimand):
    code, rep, _ = run(capsys, "bounds", "--data", str(compliance_csv), "--estimand", estimand,
                       "--restriction", "dominance")
    assert code == 0 and rep["status"] == "interval"
    assert rep["interval"]["upper"] - rep["interval"]["lower"] <= 1e-8


def test_vb_violation_empty_then_interval(capsys, vb_csv):
    code, rep, _ = run(capsys, "bounds", "--data", str(vb_csv), "--restriction", "eps_vb_monotone:0",
                       "--restriction", "strategic_neutrality")
    assert code == 0 and rep["status"] == "empty" and rep["interval"]["lower"] is None
    code, rep, _ = run(capsys, "bounds", "--data", str(vb_csv), "--restriction", "eps_vb_monotone:0.02",
                       "--restriction", "strategic_neutrality")
    assert code == 0 and rep["status"] == "interval"


def test_falsifiable_combination_warns(capsys, compliance_csv):
    code, rep, _ = run(capsys, "bounds", "--data", str(compliance_csv), "--restriction", "dominance",
                       "--restriction", "symmetry")
    assert code == 0 and rep["status"] == "empty"
    assert any("symmetry" in w for w in rep["warnings"])


def test_ci_report(capsys, compliance_csv):
    code, rep, _ = run(capsys, "ci", "--data", str(compliance_csv), "--restriction", "dominance",
                       "--method", "numerical_delta", "--reps", "100", "--threads", "1")
    assert code == 0
    assert rep["ci"]["lower_ci"] <= rep["interval"]["lower"] + 1e-9


def test_verify_counterexample(capsys):
    code, rep, _ = run(capsys, "verify", "counterexample")
    assert code == 0 and rep["status"] == "pass"


def test_verify_unknown_check(capsys):
    code, _, _ = run(capsys, "verify", "nope")
    assert code == 2


def test_config_missing_required_field(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('[data]\nschema = "wide"\n')
    code, rep, err = run(capsys, "bounds", "--config", str(cfg))
    assert code == 2 and rep is None
    assert "data" in err and "path" in err


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text("colour = 3\n")
    code, _, err = run(capsys, "stats", "--config", str(cfg))
    assert code == 2 and "colour" in err


def test_config_supersedes_flags(capsys, tmp_path, compliance_csv):
    cfg = tmp_path / "c.toml"
    cfg.write_text(f'[data]\npath = "{compliance_csv}"\n\n[estimand]\nkind = "ase"\n\n'
                   '[[restrictions]]\nkind = "dominance"\n')
    code, rep, _ = run(capsys, "bounds", "--config", str(cfg), "--estimand", "ade")
    assert code == 0
    assert rep["estimand"]["alloc1"] == [0, 1]
    assert rep["warnings"]


@pytest.mark.parametrize("argv", [
    ["bounds", "--data", "/nonexistent.csv"],
    ["bounds", "--data", "x.csv", "--restriction", "bogus"],
    ["stats", "--blocks", "7"],
    ["stats", "--restriction", "stochastic_dominance"],
])
def test_usage_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "pairbounds", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "bounds" in out.stdout
