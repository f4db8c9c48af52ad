import csv

import pytest
import yaml

from etcor.cli import EXIT_ASSUMPTION, EXIT_DIVERGED, EXIT_OK, EXIT_PARSE, main
from etcor.scenario import dump_scenario


def read_rows(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_check_bundled(capsys):
    assert main(["check"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 8


def test_check_flags_non_minimum_phase(tmp_path, example, capsys):
    d = example.to_dict()
    d["agents"][0]["A"][0][0] = 0.5
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(d))
    assert main(["check", "--scenario", str(path)]) == EXIT_ASSUMPTION
    out = capsys.readouterr().out
    assert "FAIL  plant: agent 1 minimum phase" in out


def test_run_refuses_failed_assumptions(tmp_path, example):
    d = example.to_dict()
    d["topology"]["edges"] = [[0, 1], [1, 2], [2, 1], [2, 3], [3, 2]]
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump(d))
    assert main(["run", "--scenario", str(path), "--out", str(tmp_path / "o")]) == EXIT_ASSUMPTION


@pytest.mark.parametrize("text", ["agents: [unclosed\n", "schema: etcor-scenario/1\nv0: [1, 2]\n"])
def test_malformed_config(tmp_path, text):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    assert main(["check", "--scenario", str(path)]) == EXIT_PARSE


def test_missing_file_and_bad_flags(tmp_path):
    assert main(["check", "--scenario", str(tmp_path / "nope.yaml")]) == EXIT_PARSE
    assert main(["run", "--mode", "sometimes"]) == EXIT_PARSE
    assert main([]) == EXIT_PARSE


def test_minimal_run(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--horizon", "0.001", "--dt", "0.001", "--out", str(out), "--no-figures"]) == EXIT_OK
    assert len(read_rows(out / "trace.csv")) == 2
    assert len(read_rows(out / "events.csv")) >= 4
    rows = read_rows(out / "summary.csv")
    assert [r["agent"] for r in rows] == ["1", "2", "3", "4", "total"]


def test_run_with_figures(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--horizon", "1.0", "--window", "1.0", "--out", str(out)]) == EXIT_OK
    for name in ("outputs", "tracking_errors", "trigger_agent1", "inter_event_times",
                 "adaptive_gains", "trigger_variables", "control_input_agent1"):
        assert (out / f"{name}.png").stat().st_size > 0


@pytest.mark.slow
def test_run_dynamic_full(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--out", str(out), "--no-figures"]) == EXIT_OK
    rows = read_rows(out / "summary.csv")
    assert all(r["status"] == "pass" for r in rows[:4])
    assert float(rows[-1]["tail_error"]) <= float(rows[-1]["ultimate_bound"])


def test_periodic_matched_diverges(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["run", "--mode", "periodic", "--periods", "matched", "--out", str(out), "--no-figures"])
    assert code == EXIT_DIVERGED
    assert "diverged" in capsys.readouterr().out
    rows = read_rows(out / "summary.csv")
    assert all(r["status"] == "diverged" for r in rows[:4])


def test_periodic_explicit_periods(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--mode", "periodic", "--periods", "0.002", "--horizon", "0.5",
                 "--out", str(out), "--no-figures"]) == EXIT_OK
    assert main(["run", "--mode", "periodic", "--periods", "0.1,0.2", "--out", str(out)]) == EXIT_PARSE


def test_compare_is_deterministic(tmp_path, capsys):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(["compare", "--horizon", "6", "--out", str(out)]) == EXIT_OK
    a, b = ((o / "compare.csv").read_bytes() for o in outs)
    assert a == b
    rows = read_rows(outs[0] / "compare.csv")
    assert rows[-1]["mode"] == "check" and rows[-1]["status"] == "pass"
    assert (outs[0] / "update_counts.png").exists()
    assert any(r["status"].startswith("diverged@") for r in rows if r["mode"] == "periodic")


def test_regulator_command(tmp_path, capsys):
    assert main(["regulator", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "Psi_sigma = [[21. 10.]]" in out
    rows = read_rows(tmp_path / "regulator.csv")
    tinv = {(r["row"], r["col"]): float(r["value"]) for r in rows if r["quantity"] == "T_inv"}
    assert tinv[("0", "0")] == pytest.approx(21.0)
    assert tinv[("1", "0")] == pytest.approx(-40.0)


def test_scenario_override_round_trip(tmp_path, example):
    path = tmp_path / "s.yaml"
    dump_scenario(example.with_params(beta=0.06), path)
    assert main(["check", "--scenario", str(path)]) == EXIT_OK
