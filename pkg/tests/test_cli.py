import numpy as np
import pytest
from click.testing import CliRunner

import app
from channel_model.scenario import build_link_stats
from utils.errors import NonConvergence
from utils.report_io import read_report
from utils.scenario_io import load_scenario

from tests.conftest import REFERENCE_LINEUP, TINY_SCENARIO


@pytest.fixture
def runner():
    return CliRunner()


def _invoke(runner, *args):
    return runner.invoke(app.cli, ["--quiet", *args], catch_exceptions=False)


def test_analyze_writes_every_table(runner, tiny_scenario_file, tmp_path):
    out = tmp_path / "out"
    result = _invoke(runner, "analyze", "--scenario", str(tiny_scenario_file), "--out", str(out),
                     "--models", "analytic_indep,analytic_uniform,sim_sinr_pfs,gaussian,ian,naive",
                     "--curves", "1:0", "--svg")
    assert result.exit_code == 0, result.output
    report, meta = read_report(str(out / "report.csv"))
    assert meta["mode"] == "pfs"
    assert list(report["terminal"]) == [0, 1, 2]
    for column in ("analytic_indep", "analytic_uniform", "sim_sinr_pfs", "sim_sinr_pfs_ci95", "naive"):
        assert np.all(report[column] > 0), column
    assert np.all(report["analytic_uniform"] <= report["analytic_indep"] * (1 + 1e-6))
    probs, _ = read_report(str(out / "probabilities.csv"))
    assert len(probs) == 9
    np.testing.assert_allclose(probs.groupby("rb")["sched_prob"].sum(), 1.0, atol=1e-5)
    for name in ("closed_form.csv", "curves.csv", "report.svg", "curves.svg"):
        assert (out / name).is_file(), name


def test_analyze_curves_with_a_simulated_histogram(runner, tiny_scenario_file, tmp_path):
    out = tmp_path / "out"
    trace = tmp_path / "trace.csv"
    result = _invoke(runner, "analyze", "--scenario", str(tiny_scenario_file), "--out", str(out),
                     "--models", "analytic_indep", "--curves", "0:0", "--sim-trace", str(trace),
                     "--ttis", "1020")
    assert result.exit_code == 0, result.output
    curves, meta = read_report(str(out / "curves.csv"))
    assert meta["terminal"] == "0"
    assert "sim_histogram" in curves.columns
    frame, _ = read_report(str(trace))
    assert len(frame) == 1000 * 3


def test_naive_model_on_one_terminal(runner, tmp_path):
    scenario = tmp_path / "one.yaml"
    scenario.write_text("n_rbs: 2\nterminals: [100.0]\n", encoding="utf-8")
    result = _invoke(runner, "analyze", "--scenario", str(scenario), "--out", str(tmp_path / "out"),
                     "--models", "naive,analytic_indep")
    assert result.exit_code == 0, result.output
    report, _ = read_report(str(tmp_path / "out" / "report.csv"))
    s, _ = load_scenario(str(scenario))
    link = build_link_stats(s)[0, 0]
    expected = 2 * s.symbol_rate_per_rb * float(s.efficiency(link.mean_power_sinr))
    assert report["naive"][0] == pytest.approx(expected, rel=1e-9)
    assert report["analytic_indep"][0] > 0


def test_analyze_the_bundled_lineup(runner, tmp_path):
    out = tmp_path / "out"
    result = _invoke(runner, "analyze", "--scenario", str(REFERENCE_LINEUP), "--out", str(out),
                     "--models", "analytic_indep,gaussian,ian,naive")
    assert result.exit_code == 0, result.output
    report, _ = read_report(str(out / "report.csv"))
    assert list(report["terminal"]) == list(range(20))
    assert np.all(np.diff(report["analytic_indep"]) < 0)


def test_zero_noise_is_a_configuration_error(runner, tmp_path):
    scenario = tmp_path / "silent.yaml"
    scenario.write_text(TINY_SCENARIO.replace("-112 dBm", "0.0"), encoding="utf-8")
    result = _invoke(runner, "analyze", "--scenario", str(scenario), "--out", str(tmp_path / "out"),
                     "--models", "naive")
    assert result.exit_code == 1
    assert "noise_power_per_rb" in result.output


def test_unknown_model_is_a_usage_error(runner, tiny_scenario_file, tmp_path):
    result = _invoke(runner, "analyze", "--scenario", str(tiny_scenario_file), "--out", str(tmp_path),
                     "--models", "oracle")
    assert result.exit_code == 1
    assert "oracle" in result.output


@pytest.mark.parametrize("args", [
    ("analyze", "--mode", "round_robin"),
    ("analyze", "--no-such-option"),
    ("sweep", "--over", "position", "--values", "near,far"),
    ("sweep", "--over", "terminals", "--values", "0,3"),
])
def test_usage_errors_exit_with_one(runner, tiny_scenario_file, tmp_path, args):
    command, *rest = args
    result = _invoke(runner, command, "--scenario", str(tiny_scenario_file), "--out", str(tmp_path / "out"), *rest)
    assert result.exit_code == 1, result.output


def test_unknown_subcommand_exits_with_one(runner):
    assert _invoke(runner, "optimize").exit_code == 1


def test_numerical_failure_exits_with_two(runner, tiny_scenario_file, tmp_path, monkeypatch):
    def failing(*args, **kwargs):
        raise NonConvergence("quadrature did not converge", terminal=1, rb=0)

    monkeypatch.setattr(app, "evaluate_models", failing)
    result = _invoke(runner, "analyze", "--scenario", str(tiny_scenario_file), "--out", str(tmp_path),
                     "--models", "analytic_indep")
    assert result.exit_code == 2
    assert "terminal=1" in result.output


@pytest.mark.parametrize("scheduler", ["sinr_pfs", "rate_pfs"])
def test_simulate_is_reproducible_across_thread_counts(runner, tiny_scenario_file, tmp_path, scheduler):
    outputs = []
    for threads in (1, 4, 8):
        path = tmp_path / f"sim_{threads}.csv"
        result = _invoke(runner, "simulate", "--scenario", str(tiny_scenario_file), "--out", str(path),
                         "--scheduler", scheduler, "--seed", "5", "--seeds", "8", "--threads", str(threads))
        assert result.exit_code == 0, result.output
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
    table, meta = read_report(str(tmp_path / "sim_1.csv"))
    assert meta["scheduler"] == scheduler
    assert len(table) == 3



def test_simulate_rejects_a_short_run(runner, tiny_scenario_file, tmp_path):
    result = _invoke(runner, "simulate", "--scenario", str(tiny_scenario_file), "--out", str(tmp_path / "s.csv"),
                     "--ttis", "20")
    assert result.exit_code == 1
    assert "ttis" in result.output


def test_compare_reports(runner, tiny_scenario_file, tmp_path):
    out = tmp_path / "out"
    assert _invoke(runner, "analyze", "--scenario", str(tiny_scenario_file), "--out", str(out),
                   "--models", "naive,gaussian").exit_code == 0
    sim = tmp_path / "sim.csv"
    assert _invoke(runner, "simulate", "--scenario", str(tiny_scenario_file), "--out", str(sim)).exit_code == 0
    result = _invoke(runner, "compare", str(out / "report.csv"), str(sim), "--out", str(tmp_path / "cmp.csv"))
    assert result.exit_code == 0, result.output
    summary, _ = read_report(str(tmp_path / "cmp_summary.csv"))
    assert set(summary["model"]) == {"naive", "gaussian"}


def test_compare_mismatched_scenarios(runner, tiny_scenario_file, tmp_path):
    other = tmp_path / "other.yaml"
    other.write_text(TINY_SCENARIO.replace("n_rbs: 3", "n_rbs: 4"), encoding="utf-8")
    a, b = tmp_path / "a", tmp_path / "b"
    assert _invoke(runner, "analyze", "--scenario", str(tiny_scenario_file), "--out", str(a),
                   "--models", "naive").exit_code == 0
    assert _invoke(runner, "simulate", "--scenario", str(other), "--out", str(b / "sim.csv")).exit_code == 0
    result = _invoke(runner, "compare", str(a / "report.csv"), str(b / "sim.csv"), "--out", str(tmp_path / "c.csv"))
    assert result.exit_code == 1
    assert "different scenarios" in result.output


@pytest.mark.parametrize("over, values, column", [
    ("position", "50,150,240", "position_m"),
    ("terminals", "1,2,4", "n_terminals"),
])
def test_sweep(runner, tiny_scenario_file, tmp_path, over, values, column):
    out = tmp_path / "sweep.csv"
    result = _invoke(runner, "sweep", "--scenario", str(tiny_scenario_file), "--over", over, "--values", values,
                     "--models", "analytic_indep,naive", "--out", str(out), "--svg")
    assert result.exit_code == 0, result.output
    table, meta = read_report(str(out))
    assert list(table.columns) == [column, "analytic_indep", "naive"]
    assert len(table) == 3
    assert meta["over"] == over
    assert (tmp_path / "sweep.svg").is_file()
    # farther out or more crowded, the tracked terminal gets less
    assert table["analytic_indep"].is_monotonic_decreasing
