"""Command-line entry point: ``gcpso <subcommand> ...``.

Settings resolve as command-line flag, then config file, then built-in
default. Results go to ``--output`` (default ``$GCPSO_OUTPUT_DIR`` or
``results``); a non-empty output directory is only reused with ``--force``.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from gcpso import cml, harness
from gcpso.config import (
    PRESETS,
    AlgorithmSpec,
    ExperimentConfig,
    ObjectiveSpec,
    default_output_dir,
    load_config,
    preset,
    save_config,
)
from gcpso.core import ConfigurationError, RngStream
from gcpso.objectives import available_objectives, get_objective
from gcpso.optimizers import ALGORITHMS

log = logging.getLogger("gcpso")


class OutputExistsError(RuntimeError):
    pass


def _experiment_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="YAML experiment config")
    p.add_argument("--trials", type=int, help="trials per (algorithm, objective) pair")
    p.add_argument("--seed", type=int, dest="master_seed", help="master seed")
    budget = p.add_mutually_exclusive_group()
    budget.add_argument("--iters", type=int, help="iterations per trial")
    budget.add_argument("--evals", type=int, help="objective evaluations per trial, initial swarm included")
    p.add_argument("--dim", type=int, help="problem dimension for every objective")
    p.add_argument("--population", type=int, help="swarm size")
    p.add_argument("--history-stride", type=int, help="record every k-th iteration")
    p.add_argument("--output", type=Path, help="output directory")
    p.add_argument("--force", action="store_true", help="write into a non-empty output directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel trial workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gcpso", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one algorithm on one objective")
    _experiment_flags(p)
    p.add_argument("--algorithm", choices=ALGORITHMS, help="optimizer (default gcpso)")
    p.add_argument("--objective", help="catalog objective name (default sphere)")
    p.add_argument("--epsilon", type=float, help="coupling strength for gcpso")
    p.add_argument("--w", dest="w_schedule", help="inertia schedule, e.g. 0.7 or linear:0.9:0.4")
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)

    p = sub.add_parser("experiment", help="run every algorithm on every objective")
    _experiment_flags(p)
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a built-in preset instead of a file")

    p = sub.add_parser("sweep-epsilon", help="run gcpso over a list of coupling strengths")
    _experiment_flags(p)
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--epsilons", required=True, help="comma-separated values in [0,1], e.g. 0,0.1,0.3,1")

    p = sub.add_parser("compare", help="compare two algorithms from a summary.json")
    p.add_argument("summary", type=Path, help="summary.json or the directory holding it")
    p.add_argument("--baseline", required=True)
    p.add_argument("--challenger", required=True)
    p.add_argument("--output", type=Path, help="write the table as CSV")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("cml", help="iterate a coupled map lattice and dump the space-time field")
    p.add_argument("--topology", choices=cml.TOPOLOGIES, default="global")
    p.add_argument("--map", dest="map_kind", choices=cml.MAP_KINDS, default="logistic")
    p.add_argument("--param", type=float, default=4.0, help="logistic r or tent slope")
    p.add_argument("--size", type=int, default=64, help="number of lattice cells L")
    p.add_argument("--epsilon", type=float, default=0.1, help="coupling strength")
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=("random", "homogeneous"), default="random")
    p.add_argument("--value", type=float, default=0.3, help="cell value for --init homogeneous")
    p.add_argument("--output", type=Path, help="CSV path (default <output dir>/cml.csv)")
    p.add_argument("--force", action="store_true")

    p = sub.add_parser("init-config", help="write a commented default config")
    p.add_argument("path", type=Path)
    p.add_argument("--preset", choices=sorted(PRESETS), default="full")
    p.add_argument("--force", action="store_true")

    sub.add_parser("list-objectives", help="list catalog objectives")
    return parser


def resolve_config(args) -> ExperimentConfig:
    """Defaults, then config file (or preset), then flags."""
    if getattr(args, "config", None) is not None:
        cfg = load_config(args.config)
    elif getattr(args, "preset", None):
        cfg = preset(args.preset)
    elif args.command == "run":
        cfg = ExperimentConfig(
            algorithms=[AlgorithmSpec("gcpso")],
            objectives=[ObjectiveSpec("sphere", 2)],
            trials=1,
            budget={"iterations": 1000},
        )
    else:
        cfg = ExperimentConfig()

    changes = {}
    if args.command == "run":
        algo = cfg.algorithms[0]
        params = dict(algo.params)
        for key in ("epsilon", "w_schedule", "c1", "c2"):
            if getattr(args, key) is not None:
                params[key] = getattr(args, key)
        name = args.algorithm or algo.name
        label = name if args.algorithm else algo.label
        changes["algorithms"] = [AlgorithmSpec(name, label=label, population=algo.population, params=params)]
        if args.objective:
            changes["objectives"] = [ObjectiveSpec(args.objective, cfg.objectives[0].dim)]
    for key in ("trials", "master_seed", "population", "history_stride"):
        if getattr(args, key) is not None:
            changes[key] = getattr(args, key)
    if args.iters is not None:
        changes["budget"] = {"iterations": args.iters}
    elif args.evals is not None:
        changes["budget"] = {"evaluations": args.evals}
    if args.dim is not None:
        objectives = changes.get("objectives", cfg.objectives)
        changes["objectives"] = [ObjectiveSpec(o.name, args.dim, o.transform_seed) for o in objectives]
    if args.output is not None:
        changes["output_dir"] = str(args.output)
    cfg = cfg.replace(**changes) if changes else cfg
    cfg.validate()
    for spec in cfg.objectives:
        get_objective(spec.name, spec.dim, spec.transform_seed)
    return cfg


def prepare_output_dir(path: Path, force: bool) -> Path:
    path = Path(path)
    if path.exists() and not path.is_dir():
        raise OutputExistsError(f"{path} exists and is not a directory")
    if path.is_dir() and any(path.iterdir()) and not force:
        raise OutputExistsError(f"output directory {path} is not empty; pass --force to write into it")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _print_summary(summary: harness.ExperimentSummary):
    for r in summary.rows:
        print(
            f"{r.algorithm:>16s} {r.objective:>26s}  trials={r.trial_count:<3d} "
            f"median={r.median:.6e} mean={r.mean:.6e} std={r.std:.3e} min={r.min:.6e} max={r.max:.6e}"
        )


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    out = prepare_output_dir(Path(cfg.output_dir), args.force)
    summary = harness.run_experiment(cfg, jobs=args.jobs)
    harness.write_outputs(summary, out, cfg)
    if args.command == "run" and len(summary.rows) == 1 and summary.rows[0].trial_count == 1:
        rep = summary.reports[0]
        print(f"final best value: {rep.final_best_value:.17g}")
        print(
            f"{rep.algorithm} on {rep.objective}: {len(rep.iterations)} recorded iterations, "
            f"{rep.evaluations_used} evaluations, seed {rep.seed}"
        )
    else:
        _print_summary(summary)
    print(f"wrote {out}")
    return 0


def cmd_sweep_epsilon(args) -> int:
    cfg = resolve_config(args)
    try:
        epsilons = [float(e) for e in args.epsilons.split(",") if e.strip()]
    except ValueError:
        raise ConfigurationError(f"epsilons: cannot parse {args.epsilons!r}") from None
    out = prepare_output_dir(Path(cfg.output_dir), args.force)
    eps, summary, tables = harness.sweep_epsilon(cfg, epsilons, jobs=args.jobs)
    harness.write_outputs(summary, out, cfg)
    harness.write_sweep_table(eps, summary, out / "sweep.csv")
    harness.write_comparison_csv(tables, out / "comparison.csv")
    _print_summary(summary)
    for t in tables:
        tally = t.tally
        print(f"{t.challenger} vs {t.baseline}: {tally['win']} win / {tally['loss']} loss / {tally['tie']} tie")
    print(f"wrote {out}")
    return 0


def cmd_compare(args) -> int:
    path = args.summary / "summary.json" if args.summary.is_dir() else args.summary
    summary = harness.load_summary_json(path)
    table = harness.compare(summary, args.baseline, args.challenger)
    print(f"{'objective':>26s} {'baseline median':>16s} {'challenger median':>18s} {'ratio':>10s}  outcome")
    for r in table.rows:
        print(f"{r.objective:>26s} {r.baseline_median:16.6e} {r.challenger_median:18.6e} {r.ratio:10.3g}  {r.outcome}")
    tally = table.tally
    print(f"{args.challenger} vs {args.baseline}: {tally['win']} win / {tally['loss']} loss / {tally['tie']} tie")
    if args.output is not None:
        if args.output.exists() and not args.force:
            raise OutputExistsError(f"{args.output} exists; pass --force to overwrite")
        args.output.parent.mkdir(parents=True, exist_ok=True)
        harness.write_comparison_csv([table], args.output)
    return 0


def cmd_cml(args) -> int:
    fmap = cml.LocalMap(args.map_kind, args.param)
    if args.init == "homogeneous":
        cells = np.full(args.size, args.value)
    else:
        cells = RngStream(args.seed).uniform(args.size)
    state = cml.LatticeState(cells, coupling=args.epsilon, topology=args.topology)
    field = cml.spacetime(state, fmap, args.steps)

    path = args.output or Path(default_output_dir()) / "cml.csv"
    if path.exists() and not args.force:
        raise OutputExistsError(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time"] + [f"cell_{i}" for i in range(args.size)])
        for t, row in enumerate(field):
            writer.writerow([t] + [repr(float(v)) for v in row])
    print(f"min cell value: {field.min():.17g}")
    print(f"max cell value: {field.max():.17g}")
    print(f"wrote {path}")
    return 0


def cmd_init_config(args) -> int:
    if args.path.exists() and not args.force:
        raise OutputExistsError(f"{args.path} exists; pass --force to overwrite")
    save_config(preset(args.preset), args.path)
    print(f"wrote {args.path}")
    return 0


def cmd_list_objectives(args) -> int:
    for name in available_objectives():
        obj = get_objective(name, 2)
        lo, hi = obj.bounds.lower[0], obj.bounds.upper[0]
        print(f"{name:26s} [{lo:g}, {hi:g}]^d  minimum {obj.known_optimum_value:g}")
    return 0


COMMANDS = {
    "run": cmd_run,
    "experiment": cmd_run,
    "sweep-epsilon": cmd_sweep_epsilon,
    "compare": cmd_compare,
    "cml": cmd_cml,
    "init-config": cmd_init_config,
    "list-objectives": cmd_list_objectives,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"gcpso {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (OutputExistsError, OSError, harness.ExperimentError) as exc:
        print(f"gcpso {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
