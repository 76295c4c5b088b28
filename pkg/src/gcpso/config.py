"""Experiment configuration files.

Configs are YAML (comments allowed). Top-level keys::

    algorithms:      list of {name, label?, population?, <optimizer params>}
    objectives:      list of {name, dim, transform_seed?}
    trials:          independent trials per (algorithm, objective) pair
    master_seed:     trial t uses a seed derived from (master_seed, t)
    population:      swarm size unless an algorithm overrides it
    budget:          {iterations: N} or {evaluations: N}
    output_dir:      where CSV/JSON results go
    history_stride:  record every k-th iteration of the convergence curve

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from gcpso.core import ConfigurationError
from gcpso.objectives import CATALOG
from gcpso.optimizers import OptimizerConfig

OUTPUT_DIR_ENV = "GCPSO_OUTPUT_DIR"

# optimizer fields owned by the experiment rather than by an algorithm entry
_RESERVED = {"algorithm", "dimension", "max_iterations", "seed", "population"}
OPTIMIZER_PARAMS = tuple(f.name for f in fields(OptimizerConfig) if f.name not in _RESERVED)


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_DIR_ENV, "results")


def _check_keys(data: dict, allowed, where: str):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{where}: expected a mapping, got {type(data).__name__}")
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigurationError(f"{where}: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(allowed)}")


def _plain(value):
    """Schedules and local maps as YAML-friendly scalars/mappings."""
    if hasattr(value, "kind") and hasattr(value, "start"):
        return str(value)
    if hasattr(value, "kind") and hasattr(value, "parameter"):
        return {"kind": value.kind, "parameter": value.parameter}
    if isinstance(value, tuple):
        return list(value)
    return value


@dataclass
class AlgorithmSpec:
    name: str
    label: str = ""
    population: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.label:
            self.label = self.name
        _check_keys(self.params, OPTIMIZER_PARAMS, f"algorithm {self.label!r}")
        # validate eagerly so bad values are reported against the config entry
        lam = self.params.get("lambda_weights")
        population = len(lam) if lam else self.population or 2
        self.optimizer_config(dimension=1, population=population, max_iterations=1)

    def optimizer_config(self, dimension: int, population: int, max_iterations: int) -> OptimizerConfig:
        params = dict(self.params)
        if params.get("lambda_weights") is not None:
            params["lambda_weights"] = tuple(params["lambda_weights"])
        try:
            return OptimizerConfig(
                algorithm=self.name,
                population=population,
                dimension=dimension,
                max_iterations=max_iterations,
                **params,
            )
        except ConfigurationError as exc:
            raise ConfigurationError(f"algorithm {self.label!r}: {exc}") from None

    def to_dict(self) -> dict:
        out = {"name": self.name}
        if self.label != self.name:
            out["label"] = self.label
        if self.population is not None:
            out["population"] = self.population
        out.update({k: _plain(v) for k, v in self.params.items()})
        return out

    @classmethod
    def from_dict(cls, data) -> AlgorithmSpec:
        if isinstance(data, str):
            data = {"name": data}
        _check_keys(data, ("name", "label", "population") + OPTIMIZER_PARAMS, "algorithms entry")
        if "name" not in data:
            raise ConfigurationError("algorithms entry: missing 'name'")
        params = {k: v for k, v in data.items() if k not in ("name", "label", "population")}
        return cls(name=data["name"], label=data.get("label", ""), population=data.get("population"), params=params)


@dataclass
class ObjectiveSpec:
    name: str
    dim: int = 30
    transform_seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data) -> ObjectiveSpec:
        if isinstance(data, str):
            data = {"name": data}
        _check_keys(data, ("name", "dim", "transform_seed"), "objectives entry")
        if "name" not in data:
            raise ConfigurationError("objectives entry: missing 'name'")
        return cls(**data)


def _default_algorithms():
    return [AlgorithmSpec("pso"), AlgorithmSpec("gcpso", params={"epsilon": 0.1})]


def _default_objectives():
    return [ObjectiveSpec(name, 30) for name in CATALOG]


@dataclass
class ExperimentConfig:
    algorithms: list[AlgorithmSpec] = field(default_factory=_default_algorithms)
    objectives: list[ObjectiveSpec] = field(default_factory=_default_objectives)
    trials: int = 51
    master_seed: int = 0
    population: int = 40
    budget: dict = field(default_factory=lambda: {"evaluations": 300_000})
    output_dir: str = field(default_factory=default_output_dir)
    history_stride: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.trials < 1:
            raise ConfigurationError(f"trials: must be at least 1, got {self.trials}")
        if self.population < 2:
            raise ConfigurationError(f"population: must be at least 2, got {self.population}")
        if self.history_stride < 1:
            raise ConfigurationError(f"history_stride: must be at least 1, got {self.history_stride}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError(f"master_seed: must be a 64-bit unsigned integer, got {self.master_seed}")
        _check_keys(self.budget, ("iterations", "evaluations"), "budget")
        if len(self.budget) != 1:
            raise ConfigurationError("budget: give exactly one of 'iterations' or 'evaluations'")
        self.iterations_for(max([self.population] + [a.population or 0 for a in self.algorithms]))

    def iterations_for(self, population: int) -> int:
        if "iterations" in self.budget:
            iters = int(self.budget["iterations"])
        else:
            # initialisation costs one evaluation per particle
            iters = (int(self.budget["evaluations"]) - population) // population
        if iters < 1:
            raise ConfigurationError(f"budget: {self.budget} leaves {iters} iterations for population {population}")
        return iters

    def replace(self, **changes) -> ExperimentConfig:
        return replace(self, **changes)

    def algorithm_spec(self, name: str, template: AlgorithmSpec | None = None, label: str = "", **params):
        base = dict(template.params) if template is not None else {}
        base.update(params)
        population = template.population if template is not None else None
        return AlgorithmSpec(name=name, label=label, population=population, params=base)

    def to_dict(self) -> dict:
        return {
            "algorithms": [a.to_dict() for a in self.algorithms],
            "objectives": [o.to_dict() for o in self.objectives],
            "trials": self.trials,
            "master_seed": self.master_seed,
            "population": self.population,
            "budget": dict(self.budget),
            "output_dir": self.output_dir,
            "history_stride": self.history_stride,
        }

    @classmethod
    def from_dict(cls, data: dict | None) -> ExperimentConfig:
        data = data or {}
        _check_keys(data, [f.name for f in fields(cls)], "config")
        kwargs = dict(data)
        if "algorithms" in kwargs:
            kwargs["algorithms"] = [AlgorithmSpec.from_dict(a) for a in kwargs["algorithms"]]
        if "objectives" in kwargs:
            kwargs["objectives"] = [ObjectiveSpec.from_dict(o) for o in kwargs["objectives"]]
        if "output_dir" in kwargs:
            kwargs["output_dir"] = str(kwargs["output_dir"])
        return cls(**kwargs)


PRESETS = {
    "full": {},
    "desk": {
        "objectives": [{"name": name, "dim": 10} for name in CATALOG],
        "trials": 11,
        "budget": {"iterations": 1000},
    },
}


def preset(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigurationError(f"unknown preset {name!r}; valid: {', '.join(PRESETS)}")
    return ExperimentConfig.from_dict(PRESETS[name])


def load_config(path) -> ExperimentConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: cannot parse YAML: {exc}") from None
    return ExperimentConfig.from_dict(data)


HEADER = """\
# gcpso experiment configuration (YAML; comments allowed, unknown keys rejected)
#
# algorithms: pso | gcpso | fips | all_informed | cml_perturbed, each with
#   optional label, population and optimizer parameters, e.g.
#   {name: gcpso, label: gcpso_eps01, epsilon: 0.1, w_schedule: "linear:0.9:0.4"}
# objectives: catalog name (see `gcpso list-objectives`), dim, transform_seed
# budget: {iterations: N} or {evaluations: N}; evaluations include the
#   initial population
"""


def dump_config(config: ExperimentConfig) -> str:
    return HEADER + yaml.safe_dump(config.to_dict(), sort_keys=False, default_flow_style=None)


def save_config(config: ExperimentConfig, path) -> None:
    Path(path).write_text(dump_config(config))
