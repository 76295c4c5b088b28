import csv
import json
import statistics

import numpy as np
import pytest

from gcpso import harness
from gcpso.config import AlgorithmSpec, ExperimentConfig, ObjectiveSpec
from gcpso.core import ConfigurationError
from gcpso.optimizers import TrialReport


def small_config(algorithms=("pso", "gcpso"), objectives=("sphere", "ackley"), trials=4, iters=30, **kw):
    return ExperimentConfig(
        algorithms=[a if isinstance(a, AlgorithmSpec) else AlgorithmSpec(a) for a in algorithms],
        objectives=[ObjectiveSpec(o, 3) for o in objectives],
        trials=trials,
        master_seed=kw.pop("master_seed", 5),
        population=kw.pop("population", 8),
        budget={"iterations": iters},
        output_dir="unused",
        **kw,
    )


def test_single_trial_statistics():
    summary = harness.run_experiment(small_config(algorithms=["pso"], objectives=["sphere"], trials=1))
    row = summary.rows[0]
    value = summary.reports[0].final_best_value
    assert row.mean == row.median == row.min == row.max == value
    assert row.std == 0.0


def test_summary_deterministic():
    a = harness.run_experiment(small_config())
    b = harness.run_experiment(small_config())
    assert harness.summary_document(a) == harness.summary_document(b)


def test_zero_epsilon_matches_pso_summary():
    summary = harness.run_experiment(
        small_config(algorithms=[AlgorithmSpec("pso"), AlgorithmSpec("gcpso", params={"epsilon": 0.0})])
    )
    for obj in ("sphere", "ackley"):
        assert summary.row("pso", obj).final_values == summary.row("gcpso", obj).final_values


def test_statistics_match_independent_recomputation():
    summary = harness.run_experiment(small_config(trials=7))
    for row in summary.rows:
        raw = [r.final_best_value for r in summary.reports
               if r.algorithm == row.algorithm and r.objective == row.objective]
        assert row.trial_count == 7
        assert row.mean == pytest.approx(statistics.fmean(raw), abs=1e-12)
        assert row.std == pytest.approx(statistics.pstdev(raw), abs=1e-12)
        assert row.median == pytest.approx(statistics.median(raw), abs=1e-12)
        assert row.min == min(raw) and row.max == max(raw)
        assert row.min <= row.median <= row.max


def test_summary_independent_of_report_order():
    summary = harness.run_experiment(small_config(trials=5))
    shuffled = list(summary.reports)
    np.random.default_rng(0).shuffle(shuffled)
    again = harness.summarize(shuffled)
    key = lambda s: sorted((r.algorithm, r.objective, r.final_values, r.median_curve) for r in s.rows)
    assert key(again) == key(summary)


def test_parallel_matches_serial():
    serial = harness.run_experiment(small_config(trials=3))
    parallel = harness.run_experiment(small_config(trials=3), jobs=2)
    assert harness.summary_document(serial) == harness.summary_document(parallel)


def test_budget_accounting():
    config = small_config(trials=2, iters=17)
    for rep in harness.run_experiment(config).reports:
        assert rep.evaluations_used == 8 * (17 + 1)
        assert rep.values == sorted(rep.values, reverse=True)
        assert rep.final_best_value == rep.values[-1]


def test_evaluation_budget_maps_to_iterations():
    config = ExperimentConfig(budget={"evaluations": 300_000}, output_dir="unused")
    assert config.iterations_for(40) == 7499


def test_trial_seeds_shared_across_pairs():
    summary = harness.run_experiment(small_config(trials=3))
    seeds = {}
    for rep in summary.reports:
        seeds.setdefault(rep.trial_index, set()).add(rep.seed)
    assert all(len(s) == 1 for s in seeds.values())
    assert len({next(iter(s)) for s in seeds.values()}) == 3


def test_failure_identifies_trial(monkeypatch):
    import gcpso.harness as h

    def boom(config, objective, **kw):
        raise RuntimeError("bad")

    monkeypatch.setattr(h, "run", boom)
    with pytest.raises(harness.ExperimentError) as info:
        harness.run_experiment(small_config(trials=1))
    assert info.value.trial == 0 and info.value.algorithm == "pso" and info.value.seed is not None


def _report(algorithm, objective, trial, value):
    return TrialReport(algorithm, objective, trial, 0, [0], [value], value, np.zeros(1), 2)


def test_compare_self_all_ties():
    summary = harness.run_experiment(small_config())
    table = harness.compare(summary, "pso", "pso")
    assert table.tally == {"win": 0, "loss": 0, "tie": 2}


def test_compare_records_win():
    summary = harness.summarize([_report("pso", "f", 0, 1e-6), _report("gcpso", "f", 0, 1e-14)])
    table = harness.compare(summary, "pso", "gcpso")
    assert table.rows[0].outcome == "win"
    assert table.rows[0].ratio == pytest.approx(1e-8)
    assert harness.compare(summary, "gcpso", "pso").rows[0].outcome == "loss"


def test_compare_tie_threshold():
    summary = harness.summarize([_report("a", "f", 0, 1e-13), _report("b", "f", 0, 5e-13)])
    assert harness.compare(summary, "a", "b").rows[0].outcome == "tie"


def test_compare_mismatched_objectives():
    summary = harness.summarize([_report("a", "f", 0, 1.0), _report("b", "g", 0, 1.0)])
    with pytest.raises(ConfigurationError):
        harness.compare(summary, "a", "b")


def test_compare_unknown_algorithm():
    summary = harness.summarize([_report("a", "f", 0, 1.0)])
    with pytest.raises(ConfigurationError):
        harness.compare(summary, "a", "zzz")


def test_outputs_schema_and_roundtrip(tmp_path):
    config = small_config(trials=2, iters=5)
    summary = harness.run_experiment(config)
    paths = harness.write_outputs(summary, tmp_path, config)
    with open(paths["trials"]) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == harness.TRIALS_HEADER
    assert len(rows) == 1 + 2 * 2 * 2 * 6
    with open(paths["summary"]) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == harness.SUMMARY_HEADER
    assert float(rows[1][5]) == summary.rows[0].median
    loaded = harness.load_summary_json(paths["json"])
    assert [r.final_values for r in loaded.rows] == [r.final_values for r in summary.rows]
    assert json.loads(paths["json"].read_text())["config"]["trials"] == 2


def test_median_curve_is_pointwise_median():
    summary = harness.run_experiment(small_config(algorithms=["pso"], objectives=["sphere"], trials=5, iters=10))
    curves = np.array([r.values for r in summary.reports])
    assert np.array_equal(summary.rows[0].median_curve, np.median(curves, axis=0))


def test_sweep_zero_only_matches_pso():
    config = small_config(algorithms=["pso"], trials=3)
    eps, summary, tables = harness.sweep_epsilon(config, [0.0])
    pso = harness.run_experiment(config)
    assert eps == [0.0] and tables == []
    for obj in ("sphere", "ackley"):
        assert summary.row("gcpso_eps=0", obj).final_values == pso.row("pso", obj).final_values


def test_sweep_columns_and_dedup(tmp_path, caplog):
    config = small_config(trials=2, iters=10)
    eps, summary, tables = harness.sweep_epsilon(config, [0.1, 0, 0.3, 1.0, 0.1])
    assert eps == [0.0, 0.1, 0.3, 1.0]
    assert "duplicate" in caplog.text
    assert [t.challenger for t in tables] == ["gcpso_eps=0.1", "gcpso_eps=0.3", "gcpso_eps=1"]
    harness.write_sweep_table(eps, summary, tmp_path / "sweep.csv")
    with open(tmp_path / "sweep.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["objective", "median_eps=0", "median_eps=0.1", "median_eps=0.3", "median_eps=1"]


def test_sweep_rejects_out_of_range():
    with pytest.raises(ConfigurationError, match="epsilon"):
        harness.sweep_epsilon(small_config(), [0.0, 1.5])
