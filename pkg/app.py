"""
app.py - pfs-analytica command line
-----------------------------------
Batch front end over the analytic models, the reference models and the simulator.

    python app.py analyze  --scenario data/scenarios/paper_lineup.yaml --models all --out out/
    python app.py simulate --scenario data/scenarios/paper_lineup.yaml --scheduler rate_pfs --out out/sim.csv
    python app.py compare  out/report.csv out/sim.csv --out out/compare.csv
    python app.py sweep    --scenario data/scenarios/paper_lineup.yaml --over position --values 50,100,200

Exit codes: 0 success, 1 usage, configuration or domain error, 2 numerical failure.
"""
import logging
import os
import sys
from dataclasses import dataclass, field
from functools import wraps
from typing import Dict, List, Optional, Sequence, Tuple

import click
import numpy as np
import pandas as pd
from dotenv import load_dotenv
from tqdm import tqdm

from channel_model.scenario import LinkTable, Scenario, build_link_stats, line_terminals
from pfs_model.pfs_analytic import MODES, PFS, ScheduledSinrModel
from pfs_model.ref_models import ReferenceModelKind, reference_rates
from pfs_model.uniform_mcs import AssignmentDist, MonteCarloAssignments, uniform_rates
from simulation.simulator import (
    MIN_HISTOGRAM_SAMPLES, OPPORTUNISTIC, RATE_PFS, SCHEDULERS, SINR_PFS, SimulationSettings, aggregate,
    replicate,
)
from utils.charts import density_chart, line_chart, rate_chart
from utils.errors import NumericalError, PfsAnalyticaError
from utils.report_io import compare_reports, write_report
from utils.scenario_io import load_scenario, scenario_digest

load_dotenv()

logger = logging.getLogger("pfs_analytica")

# Configuration constants
DEFAULT_SEED = 20140101
ANALYTIC_MODELS = ("analytic_indep", "analytic_uniform")
SIM_MODELS = {"sim_sinr_pfs": SINR_PFS, "sim_rate_pfs": RATE_PFS, "sim_opportunistic": OPPORTUNISTIC}
REFERENCE_MODELS = {"gaussian": ReferenceModelKind.GAUSSIAN, "ian": ReferenceModelKind.IAN,
                    "naive": ReferenceModelKind.NAIVE}
ALL_MODELS = ("analytic_indep", "analytic_uniform", "sim_sinr_pfs", "sim_rate_pfs", "gaussian", "ian", "naive")
KNOWN_MODELS = ANALYTIC_MODELS + tuple(SIM_MODELS) + tuple(REFERENCE_MODELS)
CURVE_POINTS = 200
DEFAULT_MC_SAMPLES = 100_000


def env_threads() -> int:
    try:
        return max(1, int(os.environ.get("PFS_ANALYTICA_THREADS", "1")))
    except ValueError:
        return 1


def env_seed() -> int:
    try:
        return int(os.environ.get("PFS_ANALYTICA_SEED", DEFAULT_SEED))
    except ValueError:
        return DEFAULT_SEED


def setup_logging(level: str, log_file: Optional[str] = None):
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )


def parse_models(text: str) -> Tuple[str, ...]:
    names = [m.strip() for m in text.split(",") if m.strip()]
    if names == ["all"]:
        return ALL_MODELS
    unknown = [m for m in names if m not in KNOWN_MODELS]
    if unknown or not names:
        raise click.BadParameter(f"unknown model(s) {unknown}; choose from {', '.join(KNOWN_MODELS)} or 'all'",
                                 param_hint="--models")
    return tuple(dict.fromkeys(names))


def exit_codes(fn):
    """Map project errors to the 0/1/2 exit-code contract"""
    @wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NumericalError as e:
            if isinstance(e, ValueError):
                logging.error(f"{e}")
                logging.debug("Domain error", exc_info=True)
                raise SystemExit(1)
            logging.error(f"Numerical failure: {e}")
            logging.debug("Numerical failure", exc_info=True)
            raise SystemExit(2)
        except PfsAnalyticaError as e:
            logging.error(f"{e}")
            logging.debug("Configuration error", exc_info=True)
            raise SystemExit(1)
    return wrapper


@dataclass
class RunReport:
    """Per-terminal rates of the requested models plus per-(terminal, RB) details"""
    digest: str
    rates: pd.DataFrame
    probabilities: Optional[pd.DataFrame] = None
    closed_form: Optional[pd.DataFrame] = None
    curves: Optional[pd.DataFrame] = None
    traces: Dict[str, list] = field(default_factory=dict)
    model: Optional[ScheduledSinrModel] = None


def evaluate_models(s: Scenario, settings: SimulationSettings, models: Sequence[str], mode: str = PFS,
                    threads: int = 1, mc_samples: int = DEFAULT_MC_SAMPLES, progress: bool = False,
                    keep_trace: bool = False, details: bool = True) -> RunReport:
    """Rates of every requested model for every terminal, bit/s"""
    table = build_link_stats(s)
    rates = pd.DataFrame({"terminal": np.arange(table.n_terminals)})
    report = RunReport(scenario_digest(s), rates)

    if any(m in ANALYTIC_MODELS for m in models):
        model = ScheduledSinrModel.from_scenario(s, mode=mode)
        report.model = model
        if "analytic_indep" in models:
            logger.info("Evaluating the scheduled-SINR model (%s mode)", mode)
            rates["analytic_indep"] = model.total_rates(threads)
        if "analytic_uniform" in models:
            strategy = AssignmentDist.default_strategy(s.n_rbs)
            if isinstance(strategy, MonteCarloAssignments):
                strategy = MonteCarloAssignments(samples=mc_samples, seed=settings.master_seed)
            logger.info("Evaluating uniform-MCS rates with %s", type(strategy).__name__)
            rates["analytic_uniform"] = uniform_rates(model, strategy, n_jobs=threads)
        if details:
            report.probabilities = probability_table(model)
            report.closed_form = closed_form_table(model)

    for name, scheduler in SIM_MODELS.items():
        if name not in models:
            continue
        traces = replicate(s, settings.with_changes(scheduler=scheduler), n_jobs=threads,
                           keep_trace=keep_trace, progress=progress)
        agg = aggregate(traces)
        rates[name] = agg["mean_rate_bps"].to_numpy()
        rates[f"{name}_ci95"] = agg["ci95_halfwidth_bps"].to_numpy()
        report.traces[name] = traces

    for name, kind in REFERENCE_MODELS.items():
        if name in models:
            logger.info("Evaluating the %s reference model", name)
            rates[name] = reference_rates(kind, table, s.efficiency, s.symbol_rate_per_rb, n_jobs=threads)
    return report


def probability_table(model: ScheduledSinrModel) -> pd.DataFrame:
    """P(M=1) and E[X | M=1] per (terminal, RB)"""
    probs = model.probabilities()
    rows = []
    for j in range(model.n_terminals):
        for n in range(model.n_rbs):
            p = probs[j, n]
            sinr = model.expected_scheduled_sinr(j, n) if p > 0 else np.nan
            rows.append({"terminal": j, "rb": n, "sched_prob": p, "expected_scheduled_sinr": sinr})
    return pd.DataFrame(rows, columns=["terminal", "rb", "sched_prob", "expected_scheduled_sinr"])


def closed_form_table(model: ScheduledSinrModel) -> pd.DataFrame:
    """Quadrature mean SINR against the closed-form evaluations, per terminal on RB 0"""
    rows = []
    for j, law in enumerate(model.links(0)):
        if not hasattr(law, "closed_form_report"):
            continue
        rows.append({"terminal": j, **law.closed_form_report()})
    return pd.DataFrame(rows)


def curve_table(model: ScheduledSinrModel, j: int, n: int, samples: Optional[np.ndarray] = None) -> pd.DataFrame:
    """Unconditioned and scheduled SINR densities of (j, n) on a log grid, plus a simulated histogram"""
    if not (0 <= j < model.n_terminals and 0 <= n < model.n_rbs):
        raise click.BadParameter(f"({j}, {n}) is outside the {model.n_terminals} x {model.n_rbs} grid",
                                 param_hint="--curves")
    law = model.links(n)[j]
    scale = law.natural_scale
    x = np.geomspace(scale * 1e-3, scale * 1e2, CURVE_POINTS)
    curves = pd.DataFrame({
        "sinr": x,
        "sinr_db": 10.0 * np.log10(x),
        "unconditioned_pdf": law.pdf(x),
        "scheduled_pdf": model.conditional(j, n).pdf(x),
    })
    if samples is not None:
        edges = np.geomspace(max(samples.min(), 1e-12), samples.max(), 41)
        density, edges = np.histogram(samples, bins=edges, density=True)
        idx = np.searchsorted(edges, x, side="right") - 1
        inside = (idx >= 0) & (idx < density.size)
        curves["sim_histogram"] = np.where(inside, density[np.clip(idx, 0, density.size - 1)], 0.0)
    return curves


def parse_cell(text: str) -> Tuple[int, int]:
    try:
        j, _, n = text.partition(":")
        return int(j), int(n or 0)
    except ValueError:
        raise click.BadParameter(f"expected TERMINAL[:RB], got '{text}'", param_hint="--curves")


class CliGroup(click.Group):
    """Usage errors share exit code 1 with configuration errors"""

    def make_context(self, *args, **kwargs):
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as e:
            e.exit_code = 1
            raise

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = 1
            raise


@click.group(cls=CliGroup)
@click.option("--log-level", default=lambda: os.environ.get("PFS_ANALYTICA_LOG_LEVEL", "INFO"),
              show_default="INFO or $PFS_ANALYTICA_LOG_LEVEL", help="Logging level")
@click.option("--log-file", default=None, type=click.Path(dir_okay=False), help="Also log to this file")
@click.option("--quiet", is_flag=True, help="No progress bars")
@click.pass_context
def cli(ctx, log_level, log_file, quiet):
    """Analytic model and simulator of proportional fair scheduling in interference-limited down-links"""
    setup_logging(log_level, log_file)
    ctx.ensure_object(dict)
    ctx.obj["progress"] = not quiet and sys.stderr.isatty()


@cli.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(dir_okay=False))
@click.option("--models", default="all", show_default=True, help="Comma-separated models or 'all'")
@click.option("--mode", type=click.Choice(MODES), default=PFS, show_default=True,
              help="Ranking rule of the analytic models")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seeds", type=int, default=None, help="Simulator replications (overrides the scenario)")
@click.option("--ttis", type=int, default=None, help="TTIs per replication including warm-up")
@click.option("--seed", type=int, default=None, help="Master seed")
@click.option("--mc-samples", type=int, default=DEFAULT_MC_SAMPLES, show_default=True,
              help="Assignment draws of the uniform-MCS estimator when N > 16")
@click.option("--curves", default=None, help="TERMINAL[:RB] whose SINR densities are written to curves.csv")
@click.option("--sim-trace", default=None, type=click.Path(dir_okay=False),
              help="Write the per-TTI trace of one SINR-PFS replication here and add its histogram to the curves")
@click.option("--svg", is_flag=True, help="Also render SVG charts")
@click.option("--threads", type=int, default=None, help="Parallel workers (default $PFS_ANALYTICA_THREADS)")
@click.pass_context
@exit_codes
def analyze(ctx, scenario_path, models, mode, out_dir, seeds, ttis, seed, mc_samples, curves, sim_trace, svg,
            threads):
    """Evaluate models on a scenario and write report.csv, probabilities.csv and closed_form.csv"""
    chosen = parse_models(models)
    threads = threads or env_threads()
    s, settings = load_scenario(scenario_path, default_seed=env_seed())
    settings = settings.with_changes(seeds=seeds, ttis=ttis, master_seed=seed)

    report = evaluate_models(s, settings, chosen, mode, threads, mc_samples, ctx.obj["progress"])
    meta = {"models": ",".join(chosen), "mode": mode}
    write_report(report.rates, os.path.join(out_dir, "report.csv"), report.digest, meta)
    if report.probabilities is not None:
        write_report(report.probabilities, os.path.join(out_dir, "probabilities.csv"), report.digest)
        write_report(report.closed_form, os.path.join(out_dir, "closed_form.csv"), report.digest)

    if curves is not None:
        j, n = parse_cell(curves)
        model = report.model or ScheduledSinrModel.from_scenario(s, mode=mode)
        samples = None
        if sim_trace:
            trace = replicate(s, settings.with_changes(scheduler=SINR_PFS, seeds=1), keep_trace=True)[0]
            write_report(trace.to_frame(), sim_trace, report.digest, {"scheduler": SINR_PFS})
            samples = trace.scheduled_sinr_samples(j, n)
            if samples.size < MIN_HISTOGRAM_SAMPLES:
                logger.warning("No simulated histogram: terminal %d holds RB %d on %d TTIs, need %d",
                               j, n, samples.size, MIN_HISTOGRAM_SAMPLES)
                samples = None
        report.curves = curve_table(model, j, n, samples)
        write_report(report.curves, os.path.join(out_dir, "curves.csv"), report.digest,
                     {"terminal": j, "rb": n})
        if svg:
            density_chart(os.path.join(out_dir, "curves.svg"), report.curves,
                          f"Scheduled SINR, terminal {j}, RB {n}")

    if svg:
        rate_columns = [c for c in chosen if c in report.rates.columns]
        rate_chart(os.path.join(out_dir, "report.svg"), report.rates, rate_columns, s.name)
    click.echo(report.rates.to_string(index=False))


@cli.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(dir_okay=False))
@click.option("--scheduler", type=click.Choice(SCHEDULERS), default=None,
              help="Scheduler (default from the scenario, else sinr_pfs)")
@click.option("--seeds", type=int, default=None)
@click.option("--ttis", type=int, default=None)
@click.option("--seed", type=int, default=None, help="Master seed")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--trace", "trace_path", default=None, type=click.Path(dir_okay=False),
              help="Per-TTI trace CSV of the first replication")
@click.option("--threads", type=int, default=None)
@click.pass_context
@exit_codes
def simulate(ctx, scenario_path, scheduler, seeds, ttis, seed, out_path, trace_path, threads):
    """Run replications and write per-terminal mean rates with 95% confidence half-widths"""
    threads = threads or env_threads()
    s, settings = load_scenario(scenario_path, default_seed=env_seed())
    settings = settings.with_changes(scheduler=scheduler, seeds=seeds, ttis=ttis, master_seed=seed)
    traces = replicate(s, settings, n_jobs=threads, keep_trace=trace_path is not None,
                       progress=ctx.obj["progress"])
    digest = scenario_digest(s)
    table = aggregate(traces)
    write_report(table, out_path, digest, {"scheduler": settings.scheduler})
    if trace_path:
        write_report(traces[0].to_frame(), trace_path, digest, {"scheduler": settings.scheduler})
    click.echo(table.to_string(index=False))


@cli.command()
@click.argument("reports", nargs=-1, required=True, type=click.Path(dir_okay=False))
@click.option("--baseline", default="sim_sinr_pfs", show_default=True, help="Column the others are compared to")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.pass_context
@exit_codes
def compare(ctx, reports, baseline, out_path):
    """Relative error of every model column against a simulator baseline"""
    table, summary, digest = compare_reports(list(reports), baseline)
    write_report(table, out_path, digest, {"baseline": baseline})
    root, ext = os.path.splitext(out_path)
    write_report(summary, f"{root}_summary{ext or '.csv'}", digest, {"baseline": baseline})
    click.echo(summary.to_string(index=False))


def _sweep_scenarios(s: Scenario, over: str, values: Sequence[float], tracked: int):
    """(value, scenario, row of the tracked terminal) per sweep point"""
    if over == "position":
        if s.link_table is not None:
            raise click.BadParameter("position sweeps need the line geometry, not a link_stats table",
                                     param_hint="--over")
        for v in values:
            positions = [t.pos for t in s.terminals]
            positions[tracked] = float(v)
            yield v, s.with_changes(terminals=line_terminals(positions)), tracked
        return
    for v in values:
        J = int(v)
        if J < 1:
            raise click.BadParameter(f"terminal counts must be >= 1, got {v}", param_hint="--values")
        if s.link_table is not None:
            row = tracked if s.link_table.n_terminals > tracked else 0
            t = s.link_table
            table = LinkTable(np.repeat(t.p_sig[row:row + 1], J, axis=0),
                              np.repeat(t.p_intf[row:row + 1], J, axis=0),
                              np.repeat(t.noise[row:row + 1], J, axis=0))
            yield J, s.with_changes(link_table=table), 0
        else:
            pos = s.terminals[tracked].pos
            yield J, s.with_changes(terminals=line_terminals([pos] * J)), 0


@cli.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(dir_okay=False))
@click.option("--over", type=click.Choice(["position", "terminals"]), required=True,
              help="Move the tracked terminal, or vary J identical terminals at its position")
@click.option("--values", required=True, help="Comma-separated positions in m, or terminal counts")
@click.option("--terminal", "tracked", type=int, default=-1, show_default=True,
              help="Index of the tracked terminal")
@click.option("--models", default="analytic_indep,gaussian,ian,naive", show_default=True)
@click.option("--mode", type=click.Choice(MODES), default=PFS, show_default=True)
@click.option("--seeds", type=int, default=None)
@click.option("--ttis", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--svg", is_flag=True)
@click.option("--threads", type=int, default=None)
@click.pass_context
@exit_codes
def sweep(ctx, scenario_path, over, values, tracked, models, mode, seeds, ttis, out_path, svg, threads):
    """Rates of one tracked terminal over a grid of positions or terminal counts"""
    chosen = parse_models(models)
    threads = threads or env_threads()
    s, settings = load_scenario(scenario_path, default_seed=env_seed())
    settings = settings.with_changes(seeds=seeds, ttis=ttis)
    try:
        grid = [float(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected numbers, got '{values}'", param_hint="--values")
    tracked = tracked % s.n_terminals

    column = "position_m" if over == "position" else "n_terminals"
    rows = []
    points = list(_sweep_scenarios(s, over, grid, tracked))
    for value, scenario, row in tqdm(points, desc="sweep", disable=not ctx.obj["progress"]):
        report = evaluate_models(scenario, settings, chosen, mode, threads, details=False)
        entry = {column: value}
        entry.update({m: float(report.rates.loc[row, m]) for m in chosen})
        rows.append(entry)
    table = pd.DataFrame(rows, columns=[column] + list(chosen))
    write_report(table, out_path, scenario_digest(s), {"over": over, "tracked": tracked})
    if svg:
        line_chart(os.path.splitext(out_path)[0] + ".svg", table[column].to_numpy(),
                   {m: table[m].to_numpy() / 1e6 for m in chosen}, column, "rate [Mbit/s]", s.name)
    click.echo(table.to_string(index=False))


if __name__ == "__main__":
    cli()
