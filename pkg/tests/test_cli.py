import csv
import json

import pytest

from tsirelson_lab import cli, hilbert, leggett_garg as lg
from tsirelson_lab.errors import NotConverged


def run(capsys, *args):
    code = cli.main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *args):
    code, out, err = run(capsys, *args)
    assert code == 0, err
    return json.loads(out)


def test_eval_presets(capsys):
    d = run_json(capsys, "eval", "--preset", "zaw")
    assert d["expect_A"] == pytest.approx(1.1195, abs=1e-4)
    assert d["expect_A_sca"] == pytest.approx(d["expect_A"], abs=1e-10)
    assert d["classification"] == "upper"
    assert run_json(capsys, "eval", "--preset", "eigen:5")["expect_A"] == 0
    assert run_json(capsys, "eval", "--preset", "zaw_flipped")["expect_A"] == pytest.approx(-1.1195, abs=1e-4)
    cat = run_json(capsys, "eval", "--preset", "cat3", "--cutoff", "30")
    assert cat["expect_A"] == pytest.approx(-1.0795, abs=1e-3) and cat["state"]["cutoff"] == 30


def test_eval_state_sources(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text(hilbert.zaw_state().to_json())
    d = run_json(capsys, "eval", "--state-file", str(path), "--cutoff", "9")
    assert d["expect_A"] == pytest.approx(1.1195, abs=1e-4) and d["state"]["cutoff"] == 9
    inline = run_json(capsys, "eval", "--coefficients", "0.6172134,0,0,-0.7071068,0,0,0.3450328")
    assert inline["expect_A"] == pytest.approx(1.1195, abs=1e-4)


def test_schedule_override(capsys):
    d = run_json(capsys, "eval", "--preset", "zaw", "--schedule", "0,pi/3,2*pi/3")
    assert d["schedule"][1] == pytest.approx(1.0471975511965976)
    assert d["expect_A"] == pytest.approx(1.1195 / 3, abs=1e-4)


@pytest.mark.parametrize("args", [
    ("eval", "--preset", "bogus"),
    ("eval",),
    ("eval", "--preset", "zaw", "--coefficients", "1,0"),
    ("eval", "--coefficients", "1,x"),
    ("eval", "--preset", "zaw", "--schedule", "0,1,3"),
    ("eval", "--preset", "eigen:x"),
    ("frobnicate",),
    ("eval", "--bad-flag"),
    ("scan", "--grid", "1"),
    ("method1", "--preset", "zaw", "--format", "csv", "--state-file", "/nonexistent.json"),
])
def test_parse_errors_exit_1(capsys, args):
    code, _, err = run(capsys, *args)
    assert code == 1
    assert err


def test_infeasible_exit_3(capsys):
    code, _, err = run(capsys, "optimize", "--cutoff", "3", "--starts", "2")
    assert code == 3 and "feasible" in err


def test_not_converged_exit_2(capsys, monkeypatch):
    def fail(*args, **kwargs):
        raise NotConverged("budget exhausted")

    monkeypatch.setattr(lg, "sequential_moments", fail)
    code, _, err = run(capsys, "method1", "--preset", "zaw")
    assert code == 2 and "budget" in err


def test_method2_projective(capsys, zaw_flipped):
    d = run_json(capsys, "method2", "--preset", "zaw_flipped", "--kind", "projective")
    assert d["mark"] == "tick" and d["verdict"] == "quantum_interference_required"
    assert d["two_delta_p"] == pytest.approx(lg.method2_report(zaw_flipped, kind="projective").up_violation_term, abs=1e-12)
    assert abs(d["residual"]) < 1e-10


def test_method2_all_kinds_csv(capsys):
    code, out, _ = run(capsys, "method2", "--preset", "zaw_flipped", "--format", "csv")
    rows = list(csv.DictReader(out.splitlines()))
    assert [r["mark"] for r in rows] == ["cross", "tick", "cross", "tick"]


def test_method1_and_lg(capsys):
    m1 = run_json(capsys, "method1", "--preset", "zaw_flipped")
    assert m1["l1"] == pytest.approx(0.0421, abs=5e-4)
    assert m1["verdict"] == "quantum_interference_required"
    rep = run_json(capsys, "lg", "--preset", "zaw_flipped")
    assert set(rep) >= {"state", "schedule", "correlators", "lg3", "distributions", "method1", "method2"}


def test_internal_cutoff_override(capsys, monkeypatch, zaw_flipped):
    monkeypatch.setenv("TSIRELSON_LAB_THREADS", "1")
    d = run_json(capsys, "lg", "--preset", "zaw_flipped", "--internal-cutoff", "40", "--no-extrapolate")
    raw = lg.sequential_moments(zaw_flipped, internal_cutoff=40, tol=None)
    assert d["correlators"]["c12"] == pytest.approx(raw.c12, abs=1e-14)
    assert d["correlators"]["c12"] != pytest.approx(lg.sequential_moments(zaw_flipped).c12, abs=1e-6)


def test_spectrum_scan_and_graph_outputs(capsys, tmp_path):
    d = run_json(capsys, "spectrum", "--cutoff", "9")
    assert d["max_violation"] == pytest.approx(1.1200, abs=5e-5)
    assert d["confinement"]["max_leakage"] <= 1e-10
    out = tmp_path / "scan.csv"
    assert cli.main(["scan", "--grid", "5", "--format", "csv", "--out", str(out)]) == 0
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["a0", "a3", "a6", "expect_A", "classification"] and len(rows) == 1 + 5 * 10


def test_heuristic_commands(capsys, tmp_path):
    dw = run_json(capsys, "dwell", "--preset", "zaw", "--length", "4*pi/3")
    assert dw["expectation"] == pytest.approx(1 / 3, abs=1e-12)
    cr = run_json(capsys, "crossings", "--preset", "zaw")
    assert cr["expectation"] == pytest.approx(1.49, abs=0.02)
    code, _, err = run(capsys, "crossings", "--coefficients", "1,1", "--interval", "third_period")
    assert code == 1 and "diagonal" in err
    path = tmp_path / "j.csv"
    assert cli.main(["current", "--preset", "zaw", "--format", "csv", "--out", str(path)]) == 0
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["t", "J"] and len(rows) == 722
    cur = run_json(capsys, "current", "--preset", "zaw", "--samples", "11")
    assert cur["consistency"]["residual_h0"] < 1e-3


def test_wigner_command(capsys, tmp_path):
    d = run_json(capsys, "wigner", "--preset", "zaw", "--grid", "256")
    assert d["tsirelson_via_wigner"] == pytest.approx(d["expect_A"], abs=1e-3)
    assert d["negativity_volume"] > 0
    path = tmp_path / "w.csv"
    assert cli.main(["wigner", "--preset", "eigen:1", "--grid", "64", "--format", "csv", "--out", str(path)]) == 0
    with open(path) as fh:
        assert json.loads(fh.readline()[2:])["grid"]["nx"] == 64
    code, _, _ = run(capsys, "wigner", "--preset", "eigen:1", "--grid", "64", "--format", "csv")
    assert code == 1


def test_optimize_round_trip(capsys, tmp_path):
    out = tmp_path / "opt.json"
    assert cli.main(["optimize", "--starts", "2", "--seed", "3", "--out", str(out)]) == 0
    result = json.loads(out.read_text())
    assert result["constraint_residual"] <= 1e-8 and result["seed"] == 3
    d = run_json(capsys, "eval", "--state-file", str(out))
    assert d["expect_A"] == pytest.approx(result["objective"], abs=1e-10)


def test_optimize_is_deterministic(capsys):
    a = run_json(capsys, "optimize", "--starts", "2", "--seed", "5")
    b = run_json(capsys, "optimize", "--starts", "2", "--seed", "5")
    assert a == b


def test_help_documents_defaults(capsys):
    code, out, _ = run(capsys, "lg", "--help")
    assert code == 0
    assert "--internal-cutoff" in out and "4N+40" in out and "--schedule" in out
