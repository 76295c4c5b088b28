"""Multi-trial experiments: seeded trials, descriptive statistics, comparisons.

Output schemas (column order is fixed):

``trials.csv``
    ``algorithm,objective,trial,iteration,gbest_value``
``summary.csv``
    ``algorithm,objective,trials,mean,std,median,min,max,evaluations``
``comparison.csv``
    ``objective,baseline,challenger,baseline_mean,baseline_median,``
    ``challenger_mean,challenger_median,ratio,outcome``

Floats are written with ``repr`` so files round-trip exactly.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gcpso.core import ConfigurationError, derive_seed
from gcpso.objectives import get_objective
from gcpso.optimizers import OptimizerConfig, TrialReport, run

log = logging.getLogger(__name__)

TRIALS_HEADER = ("algorithm", "objective", "trial", "iteration", "gbest_value")
SUMMARY_HEADER = ("algorithm", "objective", "trials", "mean", "std", "median", "min", "max", "evaluations")
COMPARISON_HEADER = (
    "objective",
    "baseline",
    "challenger",
    "baseline_mean",
    "baseline_median",
    "challenger_mean",
    "challenger_median",
    "ratio",
    "outcome",
)
SUMMARY_SCHEMA = "gcpso.summary/1"
TIE_THRESHOLD = 1e-12


class ExperimentError(RuntimeError):
    """A trial failed; carries the offending pair, trial index and seed."""

    def __init__(self, algorithm, objective, trial, seed, cause):
        super().__init__(f"trial {trial} of {algorithm} on {objective} (seed {seed}) failed: {cause}")
        self.algorithm, self.objective, self.trial, self.seed = algorithm, objective, trial, seed


@dataclass
class SummaryRow:
    algorithm: str
    objective: str
    final_values: list[float]
    curve_iterations: list[int] = field(default_factory=list)
    median_curve: list[float] = field(default_factory=list)
    evaluations: int = 0

    @property
    def trial_count(self) -> int:
        return len(self.final_values)

    @property
    def mean(self) -> float:
        return float(np.mean(self.final_values))

    @property
    def std(self) -> float:
        # population standard deviation; 0 for a single trial
        return float(np.std(self.final_values))

    @property
    def median(self) -> float:
        return float(np.median(self.final_values))

    @property
    def min(self) -> float:
        return float(np.min(self.final_values))

    @property
    def max(self) -> float:
        return float(np.max(self.final_values))


@dataclass
class ExperimentSummary:
    rows: list[SummaryRow]
    reports: list[TrialReport] = field(default_factory=list)

    def row(self, algorithm: str, objective: str) -> SummaryRow:
        for r in self.rows:
            if r.algorithm == algorithm and r.objective == objective:
                return r
        raise KeyError((algorithm, objective))

    @property
    def algorithms(self) -> list[str]:
        return list(dict.fromkeys(r.algorithm for r in self.rows))

    def objectives_for(self, algorithm: str) -> list[str]:
        return [r.objective for r in self.rows if r.algorithm == algorithm]


@dataclass
class ComparisonRow:
    objective: str
    baseline_mean: float
    baseline_median: float
    challenger_mean: float
    challenger_median: float
    ratio: float
    outcome: str


@dataclass
class ComparisonTable:
    baseline: str
    challenger: str
    rows: list[ComparisonRow]

    @property
    def tally(self) -> dict[str, int]:
        counts = {"win": 0, "loss": 0, "tie": 0}
        for r in self.rows:
            counts[r.outcome] += 1
        return counts


def _one_trial(task):
    label, objective, config, history_stride, trial = task
    try:
        return run(config, objective, history_stride=history_stride, trial_index=trial, label=label)
    except Exception as exc:
        raise ExperimentError(label, objective.name, trial, config.seed, exc) from exc


def build_tasks(config) -> list[tuple]:
    """Expand an ``ExperimentConfig`` into (label, objective, optimizer config, stride, trial) tuples."""
    if not config.algorithms or not config.objectives:
        raise ConfigurationError("experiment needs at least one algorithm and one objective")
    if config.trials < 1:
        raise ConfigurationError(f"trials: must be at least 1, got {config.trials}")
    tasks = []
    for algo in config.algorithms:
        for spec in config.objectives:
            objective = get_objective(spec.name, spec.dim, spec.transform_seed)
            base = algo.optimizer_config(
                dimension=spec.dim,
                population=algo.population or config.population,
                max_iterations=config.iterations_for(algo.population or config.population),
            )
            for trial in range(config.trials):
                seed = derive_seed(config.master_seed, trial)
                tasks.append((algo.label, objective, base.replace(seed=seed), config.history_stride, trial))
    return tasks


def summarize(reports: list[TrialReport]) -> ExperimentSummary:
    """Aggregate reports per (algorithm, objective), independent of their order."""
    reports = sorted(reports, key=lambda r: r.trial_index)
    groups: dict[tuple[str, str], list[TrialReport]] = {}
    for rep in reports:
        groups.setdefault((rep.algorithm, rep.objective), []).append(rep)
    rows = []
    for (algorithm, objective), group in groups.items():
        iterations = group[0].iterations
        if any(g.iterations != iterations for g in group):
            raise ConfigurationError(f"trials of {algorithm} on {objective} recorded different iterations")
        curves = np.array([g.values for g in group])
        rows.append(
            SummaryRow(
                algorithm=algorithm,
                objective=objective,
                final_values=[g.final_best_value for g in group],
                curve_iterations=list(iterations),
                median_curve=[float(v) for v in np.median(curves, axis=0)],
                evaluations=group[0].evaluations_used,
            )
        )
    return ExperimentSummary(rows=rows, reports=reports)


def run_experiment(config, jobs: int = 1) -> ExperimentSummary:
    """Run every (algorithm, objective, trial) and aggregate.

    Trial ``t`` of every pair uses the seed derived from ``(master_seed, t)``,
    so results do not depend on ``jobs`` or execution order.
    """
    tasks = build_tasks(config)
    log.info("running %d trials with %d job(s)", len(tasks), jobs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_one_trial, tasks))
    else:
        reports = [_one_trial(t) for t in tasks]
    # keep pair order as configured, trials ascending
    summary = summarize(reports)
    order = {(t[0], t[1].name): i for i, t in reversed(list(enumerate(tasks)))}
    summary.rows.sort(key=lambda r: order[(r.algorithm, r.objective)])
    summary.reports.sort(key=lambda r: (order[(r.algorithm, r.objective)], r.trial_index))
    return summary


def _outcome(baseline: float, challenger: float) -> str:
    diff = challenger - baseline
    if abs(diff) <= TIE_THRESHOLD or (np.isinf(baseline) and baseline == challenger):
        return "tie"
    return "win" if diff < 0 else "loss"


def _ratio(challenger: float, baseline: float) -> float:
    if baseline == 0.0:
        return 1.0 if challenger == 0.0 else float("inf")
    return challenger / baseline


def compare(summary: ExperimentSummary, baseline: str, challenger: str) -> ComparisonTable:
    """Per-objective win/loss/tie of ``challenger`` against ``baseline`` by median."""
    for name in (baseline, challenger):
        if name not in summary.algorithms:
            raise ConfigurationError(f"algorithm {name!r} not in summary; have {', '.join(summary.algorithms)}")
    base_objs = summary.objectives_for(baseline)
    if sorted(base_objs) != sorted(summary.objectives_for(challenger)):
        raise ConfigurationError(f"{baseline!r} and {challenger!r} were run on different objective sets")
    rows = []
    for obj in base_objs:
        b, c = summary.row(baseline, obj), summary.row(challenger, obj)
        rows.append(
            ComparisonRow(
                objective=obj,
                baseline_mean=b.mean,
                baseline_median=b.median,
                challenger_mean=c.mean,
                challenger_median=c.median,
                ratio=_ratio(c.median, b.median),
                outcome=_outcome(b.median, c.median),
            )
        )
    return ComparisonTable(baseline, challenger, rows)


def _fmt(value) -> str:
    return repr(float(value)) if isinstance(value, (float, np.floating)) else str(value)


def write_trials_csv(reports: list[TrialReport], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRIALS_HEADER)
        for rep in reports:
            for it, value in zip(rep.iterations, rep.values):
                writer.writerow((rep.algorithm, rep.objective, rep.trial_index, it, _fmt(value)))


def write_summary_csv(summary: ExperimentSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for r in summary.rows:
            writer.writerow(
                (r.algorithm, r.objective, r.trial_count)
                + tuple(_fmt(v) for v in (r.mean, r.std, r.median, r.min, r.max))
                + (r.evaluations,)
            )


def write_comparison_csv(tables: list[ComparisonTable], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COMPARISON_HEADER)
        for table in tables:
            for r in table.rows:
                writer.writerow(
                    (r.objective, table.baseline, table.challenger)
                    + tuple(
                        _fmt(v)
                        for v in (r.baseline_mean, r.baseline_median, r.challenger_mean, r.challenger_median, r.ratio)
                    )
                    + (r.outcome,)
                )


def summary_document(summary: ExperimentSummary, config=None) -> dict:
    doc = {"schema": SUMMARY_SCHEMA, "results": []}
    if config is not None:
        doc["config"] = config.to_dict()
    for r in summary.rows:
        doc["results"].append(
            {
                "algorithm": r.algorithm,
                "objective": r.objective,
                "trial_count": r.trial_count,
                "mean": r.mean,
                "std": r.std,
                "median": r.median,
                "min": r.min,
                "max": r.max,
                "evaluations": r.evaluations,
                "final_values": list(r.final_values),
                "median_curve": {"iterations": r.curve_iterations, "values": r.median_curve},
            }
        )
    return doc


def write_summary_json(summary: ExperimentSummary, path, config=None) -> None:
    Path(path).write_text(json.dumps(summary_document(summary, config), indent=2) + "\n")


def load_summary_json(path) -> ExperimentSummary:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != SUMMARY_SCHEMA:
        raise ConfigurationError(f"{path}: not a summary document (schema {doc.get('schema')!r})")
    rows = [
        SummaryRow(
            algorithm=r["algorithm"],
            objective=r["objective"],
            final_values=[float(v) for v in r["final_values"]],
            curve_iterations=list(r["median_curve"]["iterations"]),
            median_curve=[float(v) for v in r["median_curve"]["values"]],
            evaluations=int(r["evaluations"]),
        )
        for r in doc["results"]
    ]
    return ExperimentSummary(rows=rows)


def write_outputs(summary: ExperimentSummary, out_dir, config=None) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "trials": out_dir / "trials.csv",
        "summary": out_dir / "summary.csv",
        "json": out_dir / "summary.json",
    }
    write_trials_csv(summary.reports, paths["trials"])
    write_summary_csv(summary, paths["summary"])
    write_summary_json(summary, paths["json"], config)
    return paths


def epsilon_label(eps: float) -> str:
    return f"gcpso_eps={eps:g}"


def sweep_epsilon(config, epsilons, jobs: int = 1) -> tuple[list[float], ExperimentSummary, list[ComparisonTable]]:
    """Run ``gcpso`` once per coupling strength under one master seed.

    Duplicates are dropped with a warning and ``0`` is always included as the
    PSO-equivalent baseline. Returns the sorted epsilons, the combined summary
    and one comparison table per non-zero epsilon.
    """
    values = [float(e) for e in epsilons]
    for e in values:
        if not 0.0 <= e <= 1.0:
            raise ConfigurationError(f"epsilon: must lie in the range [0,1], got {e}")
    unique = list(dict.fromkeys(values))
    if len(unique) != len(values):
        log.warning("duplicate epsilon values dropped: %s", values)
    if 0.0 not in unique:
        log.warning("epsilon 0 added as the PSO-equivalent baseline")
        unique.insert(0, 0.0)
    unique.sort()

    template = next((a for a in config.algorithms if a.name == "gcpso"), None)
    algos = [config.algorithm_spec("gcpso", template, epsilon=e, label=epsilon_label(e)) for e in unique]
    summary = run_experiment(config.replace(algorithms=algos), jobs=jobs)
    baseline = epsilon_label(0.0)
    tables = [compare(summary, baseline, epsilon_label(e)) for e in unique if e != 0.0]
    return unique, summary, tables


def write_sweep_table(epsilons, summary: ExperimentSummary, path) -> None:
    """Wide table: one row per objective, one median column per epsilon."""
    objectives = summary.objectives_for(epsilon_label(epsilons[0]))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("objective",) + tuple(f"median_eps={e:g}" for e in epsilons))
        for obj in objectives:
            writer.writerow((obj,) + tuple(_fmt(summary.row(epsilon_label(e), obj).median) for e in epsilons))
