import json

import pytest

from artifact.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_trees_pretty(capsys):
    code, out, _ = run(capsys, "forests", "--n", "4", "--trees-only", "--format", "pretty")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("16 trees")
    assert len(lines) == 17


def test_forests_json(capsys):
    code, out, _ = run(capsys, "forests", "--n", "3")
    rep = json.loads(out)
    assert code == 0 and rep["result"]["count"] == 7
    assert rep["config"]["command"] == "forests" and rep["config"]["n"] == 3


def test_series_pretty(capsys):
    code, out, _ = run(capsys, "series", "--order", "1", "--format", "pretty")
    assert code == 0
    assert "order 1: -2·N^2" in out.splitlines()


def test_series_csv(capsys):
    code, out, _ = run(capsys, "series", "--order", "2", "--format", "csv")
    assert out.splitlines() == ["order,N_power,coefficient", "1,2,-2/1", "2,0,1/1", "2,2,9/1"]


def test_series_genus(capsys):
    _, out, _ = run(capsys, "series", "--order", "2", "--genus")
    assert json.loads(out)["result"]["genus"] == {"0": {"1": "-2/1", "2": "9/1"}, "1": {"2": "1/1"}}


def test_lve_report(capsys):
    code, out, _ = run(capsys, "lve", "--lambda", "0.05", "--N", "1", "--orders", "6", "--seed", "42")
    assert code == 0
    res = json.loads(out)["result"]
    assert len(res["orders"]) == 6 and len(res["partial_sums"]) == 6
    assert res["oracle"]["method"] == "radial-quadrature"
    assert abs(res["oracle_difference"]) < 1e-4


def test_lve_monte_carlo(capsys):
    code, out, _ = run(capsys, "lve", "--lambda", "0.05", "--N", "2", "--orders", "2", "--samples", "2000", "--seed", "3")
    res = json.loads(out)["result"]
    assert code == 0 and res["seed"] == 3 and res["integrator"]["kind"] == "mc"


def test_oracle_command(capsys):
    code, out, _ = run(capsys, "oracle", "--lambda", "1", "--N", "1")
    res = json.loads(out)["result"]
    assert code == 0 and round(res["Z"]["value"], 6) == 0.545641


def test_compare_command(capsys):
    code, out, _ = run(capsys, "compare", "--order", "3", "--format", "pretty")
    assert code == 0 and "equal through order 3" in out


def test_ribbon_command(capsys):
    code, out, _ = run(capsys, "ribbon", "--n-vertices", "2", "--enumerate", "--format", "csv")
    assert code == 0 and len(out.splitlines()) == 25


def test_propagator_commands(capsys):
    code, out, _ = run(capsys, "propagator", "--class", "SelfDual", "--A", "2", "--size", "4")
    assert code == 0 and json.loads(out)["result"]["kernel"][1][3] == 1 / 6
    code, out, _ = run(capsys, "propagator", "--classify", "--omega", "1", "--covariant")
    assert json.loads(out)["result"]["class"] == "SelfDualCovariant"


def test_module_error_is_exit_one(capsys):
    code, out, _ = run(capsys, "propagator", "--class", "Ordinary", "--omega", "0.5")
    assert code == 1
    rec = json.loads(out)
    assert rec["error"]["type"] == "NotImplementedError" and rec["config"]["cls"] == "Ordinary"


def test_accuracy_failure_is_exit_one(capsys):
    code, out, _ = run(capsys, "lve", "--lambda", "0.05", "--orders", "5", "--abs-tol", "1e-13")
    assert code == 1
    rec = json.loads(out)["error"]
    assert rec["type"] == "AccuracyError" and "estimate" in rec


@pytest.mark.parametrize(
    "argv",
    [
        ["forests", "--n", "12"],
        ["forests", "--n", "3", "--bogus"],
        ["series", "--order", "9"],
        ["lve", "--lambda", "-1"],
        ["lve", "--lambda", "0.1", "--orders", "7"],
        ["nonsense"],
        [],
    ],
)
def test_usage_errors_exit_two(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "usage" in err


def test_output_file(tmp_path, capsys):
    path = tmp_path / "trees.json"
    code, out, _ = run(capsys, "forests", "--n", "3", "--trees-only", "--output", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["result"]["count"] == 3


def test_jobs_do_not_change_results(capsys, monkeypatch):
    _, one, _ = run(capsys, "series", "--order", "3", "--jobs", "1")
    monkeypatch.setenv("ARTIFACT_JOBS", "2")
    _, two, _ = run(capsys, "series", "--order", "3")
    assert json.loads(one)["result"] == json.loads(two)["result"]
