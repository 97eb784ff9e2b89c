import json

import pytest

from nfdl.cli import main
from nfdl.simnet import Scenario


def run_cli(*argv):
    return main(list(argv))


def test_run_writes_trace_metrics_and_summary(tmp_path, capsys):
    out = tmp_path / "out"
    code = run_cli(
        "run", "--procs", "5", "--duration-ms", "20000", "--seed", "3",
        "--high-priority", "2", "--out", str(out),
    )
    assert code == 0
    assert (out / "trace_000.log").exists()
    assert (out / "metrics_000.csv").exists()
    assert (out / "summary.csv").exists()
    assert (out / "report.txt").exists()
    assert "wrote 1 trace(s)" in capsys.readouterr().out


def test_run_repetitions_use_consecutive_seeds(tmp_path):
    out = tmp_path / "out"
    assert run_cli(
        "run", "--duration-ms", "8000", "--reps", "2", "--high-priority", "1",
        "--out", str(out),
    ) == 0
    t0 = (out / "trace_000.log").read_text()
    t1 = (out / "trace_001.log").read_text()
    assert '"seed": 0' in t0
    assert '"seed": 1' in t1


def test_run_artifacts_are_byte_identical_across_invocations(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = [
        "run", "--duration-ms", "30000", "--seed", "11", "--loss-prob", "0.0175917",
        "--delay-var-ms2", "25.3356", "--delay-mean-ms", "5", "--high-priority", "0",
    ]
    assert run_cli(*args, "--out", str(a)) == 0
    assert run_cli(*args, "--out", str(b)) == 0
    for name in ("trace_000.log", "metrics_000.csv", "summary.csv", "report.txt"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_run_accepts_a_scenario_file(tmp_path):
    out = tmp_path / "out"
    scenario_path = tmp_path / "scenario.json"
    data = {
        "version": 1,
        "n_processes": 3,
        "algorithm": "nfdl",
        "config": {"eta_ms": 330, "alpha_ms": 670, "window_n": 100},
        "network": {
            "loss_prob": 0.0, "delay_mean_ms": 5.0, "delay_var_ms2": 0.0,
            "delay_dist": "constant",
        },
        "faults": [],
        "duration_ms": 10000,
        "seed": 5,
        "high_priority": 1,
    }
    scenario_path.write_text(json.dumps(data))
    assert run_cli("run", "--scenario", str(scenario_path), "--out", str(out)) == 0
    assert (out / "trace_000.log").exists()


def test_malformed_scenario_names_the_field(tmp_path, capsys):
    scenario_path = tmp_path / "bad.json"
    scenario_path.write_text(json.dumps({"n_processes": 5}))
    code = run_cli("run", "--scenario", str(scenario_path), "--out", str(tmp_path / "o"))
    assert code == 2
    err = capsys.readouterr().err
    assert "error:" in err and "config" in err


def test_invalid_inline_flags_fail_with_diagnostics(capsys):
    code = run_cli("run", "--procs", "1", "--out", "/tmp/nfdl-nowhere")
    assert code == 2
    assert "n_processes" in capsys.readouterr().err


def test_state_dir_persists_zerotimes(tmp_path):
    out = tmp_path / "out"
    state = tmp_path / "state"
    assert run_cli(
        "run", "--procs", "3", "--duration-ms", "5000", "--high-priority", "0",
        "--out", str(out), "--state-dir", str(state),
    ) == 0
    files = sorted(p.name for p in state.iterdir())
    assert files == ["zerotime.0", "zerotime.1", "zerotime.2"]
    assert (state / "zerotime.0").read_text() == "0\n"


def test_compare_cost_table(capsys):
    assert run_cli("compare-cost", "--procs", "5", "--duration-ms", "15000") == 0
    out = capsys.readouterr().out
    naive_row = next(line for line in out.splitlines() if "naive" in line)
    nfdl_row = next(line for line in out.splitlines() if line.startswith("nfdl"))
    assert naive_row.split()[-2:] == ["20", "20"]
    assert nfdl_row.split()[-2:] == ["1", "1"]


def test_compare_cost_rejects_tiny_n(capsys):
    assert run_cli("compare-cost", "--procs", "1") == 2
    assert "at least 2" in capsys.readouterr().err


def test_compare_cost_rejects_short_duration(capsys):
    assert run_cli("compare-cost", "--procs", "3", "--duration-ms", "1000") == 2
    assert "too short" in capsys.readouterr().err


def test_configure_derives_a_feasible_pair(capsys):
    code = run_cli(
        "configure", "--t-d-max-ms", "1000", "--loss-prob", "0.0175917",
        "--delay-var-ms2", "25.3356",
    )
    assert code == 0
    out = capsys.readouterr().out
    eta = int(out.split("eta_ms=")[1].split()[0])
    alpha = int(out.split("alpha_ms=")[1].split()[0])
    assert eta > 0 and eta + alpha <= 1000
    assert "ok:" in out


def test_configure_infeasible_requirements(capsys):
    code = run_cli("configure", "--t-d-max-ms", "10", "--delay-var-ms2", "25.3356")
    assert code == 2
    assert "cannot fit" in capsys.readouterr().err


def test_configure_validation_mode_accepts_the_field_pair(capsys):
    code = run_cli(
        "configure", "--t-d-max-ms", "1000", "--eta-ms", "330", "--alpha-ms", "670",
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "validating" in out and "ok:" in out


def test_configure_validation_mode_rejects_bad_pairs(capsys):
    code = run_cli(
        "configure", "--t-d-max-ms", "1000", "--eta-ms", "500", "--alpha-ms", "600",
    )
    assert code == 2
    assert "violated" in capsys.readouterr().out


def test_scenario_flag_for_missing_file(capsys):
    assert run_cli("run", "--scenario", "/does/not/exist.json", "--out", "/tmp/x") == 2
    assert "no such file" in capsys.readouterr().err
