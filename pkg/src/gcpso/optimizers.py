"""Velocity/position update rules and the single-trial run loop.

Five update rules share one skeleton: build the velocity terms, clamp, move,
clip to the box, evaluate, update bests. Random numbers are drawn in a fixed
order each iteration (inertia weight if random, then ``r1`` and ``r2`` as
``(n, d)`` blocks) so that ``gcpso`` with ``epsilon=0`` and ``cml_perturbed``
with a zero amplitude replay ``pso`` exactly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from gcpso import cml
from gcpso.core import (
    ConfigurationError,
    FloatArray,
    RngStream,
    SwarmState,
    apply_bounds,
    clamp_velocity,
    evaluate_swarm,
    init_swarm,
    update_bests,
    velocity_limit,
)

ALGORITHMS = ("pso", "gcpso", "fips", "all_informed", "cml_perturbed")
SCHEDULE_KINDS = ("constant", "linear", "uniform_random")
FIPS_TOPOLOGIES = ("full", "ring")


@dataclass(frozen=True)
class Schedule:
    """Per-iteration scalar: ``constant(a)``, ``linear(a -> b)`` or ``uniform_random(a, b)``."""

    kind: str = "constant"
    start: float = 0.0
    end: float = 0.0

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigurationError(f"unknown schedule kind {self.kind!r}; valid: {', '.join(SCHEDULE_KINDS)}")

    @classmethod
    def constant(cls, value: float) -> Schedule:
        return cls("constant", float(value), float(value))

    @classmethod
    def linear(cls, start: float, end: float) -> Schedule:
        return cls("linear", float(start), float(end))

    @classmethod
    def uniform_random(cls, low: float, high: float) -> Schedule:
        return cls("uniform_random", float(low), float(high))

    @classmethod
    def parse(cls, text) -> Schedule:
        """Parse ``'0.7'``, ``'constant:0.7'``, ``'linear:0.9:0.4'`` or ``'uniform_random:0.4:0.9'``."""
        if isinstance(text, Schedule):
            return text
        if isinstance(text, (int, float)):
            return cls.constant(text)
        if isinstance(text, dict):
            return cls(**text)
        parts = str(text).strip().split(":")
        try:
            if len(parts) == 1:
                return cls.constant(float(parts[0]))
            kind, values = parts[0], [float(p) for p in parts[1:]]
        except ValueError:
            raise ConfigurationError(f"cannot parse schedule {text!r}") from None
        if kind == "constant" and len(values) == 1:
            return cls.constant(values[0])
        if kind in ("linear", "uniform_random") and len(values) == 2:
            return cls(kind, *values)
        raise ConfigurationError(f"cannot parse schedule {text!r}")

    def __str__(self):
        if self.kind == "constant":
            return f"constant:{self.start!r}"
        return f"{self.kind}:{self.start!r}:{self.end!r}"

    def value(self, k: int, total: int, rng: RngStream) -> float:
        if self.kind == "constant":
            return self.start
        if self.kind == "linear":
            if total <= 1:
                return self.start
            return self.start + (self.end - self.start) * (k / (total - 1))
        return self.start + (self.end - self.start) * float(rng.uniform())


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: str = "gcpso"
    population: int = 40
    dimension: int = 2
    max_iterations: int = 1000
    w_schedule: Schedule = field(default_factory=lambda: Schedule.linear(0.9, 0.4))
    c1: float = 2.0
    c2: float = 2.0
    epsilon: float = 0.1
    chi: float = 0.7298
    phi: float = 4.1
    fips_topology: str = "full"
    ring_radius: int = 1
    c_informed: float = 2.0
    lambda_weights: tuple | None = None
    eta_schedule: Schedule = field(default_factory=lambda: Schedule.linear(0.5, 0.0))
    lattice_epsilon: float = 0.1
    lattice_map: cml.LocalMap = field(default_factory=cml.LocalMap)
    v_max_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "w_schedule", Schedule.parse(self.w_schedule))
        object.__setattr__(self, "eta_schedule", Schedule.parse(self.eta_schedule))
        if isinstance(self.lattice_map, dict):
            object.__setattr__(self, "lattice_map", cml.LocalMap(**self.lattice_map))
        if self.lambda_weights is not None:
            object.__setattr__(self, "lambda_weights", tuple(float(v) for v in self.lambda_weights))
        self.validate()

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"algorithm: unknown {self.algorithm!r}; valid: {', '.join(ALGORITHMS)}")
        if self.population < 2:
            raise ConfigurationError(f"population: must be at least 2, got {self.population}")
        if self.dimension < 1:
            raise ConfigurationError(f"dimension: must be at least 1, got {self.dimension}")
        if self.max_iterations < 1:
            raise ConfigurationError(f"max_iterations: must be at least 1, got {self.max_iterations}")
        for name in ("c1", "c2", "c_informed", "chi", "phi"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name}: must be non-negative, got {getattr(self, name)}")
        for name in ("epsilon", "lattice_epsilon"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name}: must lie in the range [0,1], got {getattr(self, name)}")
        if self.v_max_fraction <= 0:
            raise ConfigurationError(f"v_max_fraction: must be positive, got {self.v_max_fraction}")
        if self.fips_topology not in FIPS_TOPOLOGIES:
            raise ConfigurationError(
                f"fips_topology: unknown {self.fips_topology!r}; valid: {', '.join(FIPS_TOPOLOGIES)}"
            )
        if self.ring_radius < 1:
            raise ConfigurationError(f"ring_radius: must be at least 1, got {self.ring_radius}")
        if self.lambda_weights is not None:
            lam = self.lambda_weights
            if len(lam) != self.population:
                raise ConfigurationError(
                    f"lambda_weights: need {self.population} weights (one per particle), got {len(lam)}"
                )
            if abs(sum(lam) - 1.0) > 1e-9:
                raise ConfigurationError(f"lambda_weights: must sum to 1, got {sum(lam)}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed: must be a 64-bit unsigned integer, got {self.seed}")

    def replace(self, **changes) -> OptimizerConfig:
        return replace(self, **changes)

    def weights(self) -> FloatArray:
        if self.lambda_weights is None:
            return np.full(self.population, 1.0 / self.population)
        return np.asarray(self.lambda_weights, dtype=float)


@dataclass
class VelocityTerms:
    """Additive parts of the new velocity, one ``(n, d)`` array each."""

    inertia: FloatArray
    cognitive: FloatArray
    social: FloatArray
    perturbation: FloatArray | None = None

    def total(self) -> FloatArray:
        v = self.inertia + self.cognitive + self.social
        if self.perturbation is not None:
            v = v + self.perturbation
        return v


@dataclass
class TrialReport:
    algorithm: str
    objective: str
    trial_index: int
    seed: int
    iterations: list[int]
    values: list[float]
    final_best_value: float
    final_best_position: FloatArray
    evaluations_used: int
    wall_time: float = 0.0

    @property
    def history(self) -> list[tuple[int, float]]:
        return list(zip(self.iterations, self.values))


def coupled_social_term(state: SwarmState, i: int, epsilon: float) -> FloatArray:
    """Blend of particle ``i``'s pull toward gbest with the mean pull on the others.

    Uses the swarm position sum, so the cost is O(d) per particle.
    """
    return coupled_social_terms(state.positions, state.gbest_position, epsilon)[i]


def coupled_social_terms(positions: FloatArray, gbest: FloatArray, epsilon: float) -> FloatArray:
    """``coupled_social_term`` for every particle at once, shape ``(n, d)``."""
    n = positions.shape[0]
    if n < 2:
        raise ConfigurationError(f"coupled social term needs at least 2 particles, got {n}")
    own = gbest - positions
    # sum over j != i of (gbest - x_j) = (n - 1) * gbest - (S - x_i)
    others = (n - 1) * gbest - (positions.sum(axis=0) - positions)
    return (1.0 - epsilon) * own + (epsilon / (n - 1)) * others


def _inertia_weight(state: SwarmState, config: OptimizerConfig, rng: RngStream) -> float:
    return config.w_schedule.value(state.iteration, config.max_iterations, rng)


def pso_terms(state: SwarmState, config: OptimizerConfig, rng: RngStream) -> VelocityTerms:
    w = _inertia_weight(state, config, rng)
    shape = state.positions.shape
    r1, r2 = rng.uniform(shape), rng.uniform(shape)
    x = state.positions
    return VelocityTerms(
        inertia=w * state.velocities,
        cognitive=config.c1 * r1 * (state.pbest_positions - x),
        social=config.c2 * r2 * (state.gbest_position - x),
    )


def gcpso_terms(state: SwarmState, config: OptimizerConfig, rng: RngStream) -> VelocityTerms:
    w = _inertia_weight(state, config, rng)
    shape = state.positions.shape
    r1, r2 = rng.uniform(shape), rng.uniform(shape)
    x = state.positions
    return VelocityTerms(
        inertia=w * state.velocities,
        cognitive=config.c1 * r1 * (state.pbest_positions - x),
        social=config.c2 * r2 * coupled_social_terms(x, state.gbest_position, config.epsilon),
    )


def fips_terms(
    state: SwarmState, config: OptimizerConfig, rng: RngStream, neighborhoods: list
) -> VelocityTerms:
    if len(neighborhoods) != state.n:
        raise ConfigurationError(f"need one neighborhood per particle, got {len(neighborhoods)} for {state.n}")
    pull = np.empty_like(state.positions)
    for i, nbrs in enumerate(neighborhoods):
        nbrs = np.asarray(nbrs, dtype=int)
        if nbrs.size == 0:
            raise ConfigurationError(f"particle {i} has an empty neighborhood")
        u = config.phi * rng.uniform((nbrs.size, state.dim))
        pull[i] = np.sum(u * (state.pbest_positions[nbrs] - state.positions[i]), axis=0) / nbrs.size
    zeros = np.zeros_like(state.positions)
    return VelocityTerms(inertia=config.chi * state.velocities, cognitive=zeros, social=config.chi * pull)


def all_informed_terms(state: SwarmState, config: OptimizerConfig, rng: RngStream) -> VelocityTerms:
    w = _inertia_weight(state, config, rng)
    lam = config.weights()
    if lam.size != state.n:
        raise ConfigurationError(f"lambda_weights: need {state.n} weights, got {lam.size}")
    # sum_i lam_i * (p_i - x) for every particle x
    pull = lam @ state.pbest_positions - lam.sum() * state.positions
    return VelocityTerms(
        inertia=w * state.velocities,
        cognitive=np.zeros_like(state.positions),
        social=config.c_informed * pull,
    )


def cml_perturbed_terms(
    state: SwarmState,
    config: OptimizerConfig,
    rng: RngStream,
    lattice: cml.LatticeState,
    fmap: cml.LocalMap,
    v_max: FloatArray,
) -> VelocityTerms:
    n, d = state.positions.shape
    if lattice.size < n * d:
        raise ConfigurationError(f"lattice has {lattice.size} cells, swarm needs {n * d}")
    terms = pso_terms(state, config, rng)
    eta = config.eta_schedule.value(state.iteration, config.max_iterations, rng)
    # cell i*d + j drives particle i, dimension j
    chaos = fmap(lattice.cells[: n * d].reshape(n, d))
    terms.perturbation = (eta * v_max) * chaos
    return terms


def _move(
    state: SwarmState, terms: VelocityTerms, config: OptimizerConfig, objective, v_max: FloatArray
) -> SwarmState:
    velocities = clamp_velocity(terms.total(), v_max)
    positions = apply_bounds(state.positions + velocities, objective.bounds)
    moved = replace(state, positions=positions, velocities=velocities)
    fitnesses = evaluate_swarm(objective, positions)
    new = update_bests(moved, fitnesses)
    new.iteration = state.iteration + 1
    new.evaluations = state.evaluations + state.n
    return new


def _check(config: OptimizerConfig, algorithm: str):
    if config.algorithm != algorithm:
        raise ConfigurationError(f"config is for {config.algorithm!r}, not {algorithm!r}")


def step_pso(state: SwarmState, config: OptimizerConfig, objective, rng: RngStream) -> SwarmState:
    _check(config, "pso")
    v_max = velocity_limit(objective.bounds, config.v_max_fraction)
    return _move(state, pso_terms(state, config, rng), config, objective, v_max)


def step_gcpso(state: SwarmState, config: OptimizerConfig, objective, rng: RngStream) -> SwarmState:
    _check(config, "gcpso")
    v_max = velocity_limit(objective.bounds, config.v_max_fraction)
    return _move(state, gcpso_terms(state, config, rng), config, objective, v_max)


def step_fips(
    state: SwarmState, config: OptimizerConfig, objective, rng: RngStream, neighborhoods: list
) -> SwarmState:
    _check(config, "fips")
    v_max = velocity_limit(objective.bounds, config.v_max_fraction)
    return _move(state, fips_terms(state, config, rng, neighborhoods), config, objective, v_max)


def step_all_informed(state: SwarmState, config: OptimizerConfig, objective, rng: RngStream) -> SwarmState:
    _check(config, "all_informed")
    v_max = velocity_limit(objective.bounds, config.v_max_fraction)
    return _move(state, all_informed_terms(state, config, rng), config, objective, v_max)


def step_cml_perturbed(
    state: SwarmState,
    config: OptimizerConfig,
    objective,
    rng: RngStream,
    lattice: cml.LatticeState,
    fmap: cml.LocalMap,
) -> SwarmState:
    """One swarm move; the caller advances ``lattice`` afterwards."""
    _check(config, "cml_perturbed")
    v_max = velocity_limit(objective.bounds, config.v_max_fraction)
    terms = cml_perturbed_terms(state, config, rng, lattice, fmap, v_max)
    return _move(state, terms, config, objective, v_max)


def build_neighborhoods(n: int, topology: str = "full", radius: int = 1) -> list[np.ndarray]:
    """Neighbor index lists, each including the particle itself."""
    if topology == "full":
        everyone = np.arange(n)
        return [everyone.copy() for _ in range(n)]
    if topology == "ring":
        offsets = np.arange(-radius, radius + 1)
        return [np.unique((i + offsets) % n) for i in range(n)]
    raise ConfigurationError(f"unknown neighborhood topology {topology!r}")


def iterate(config: OptimizerConfig, objective, rng: RngStream | None = None):
    """Yield the swarm state after initialisation and after every iteration."""
    if config.dimension != objective.dim:
        raise ConfigurationError(
            f"dimension mismatch: config has {config.dimension}, objective {objective.name!r} has {objective.dim}"
        )
    rng = rng if rng is not None else RngStream(config.seed)
    lattice_rng = rng.spawn(1)
    state = init_swarm(config, objective, rng)
    yield state

    algo = config.algorithm
    if algo == "fips":
        neighborhoods = build_neighborhoods(config.population, config.fips_topology, config.ring_radius)
    elif algo == "cml_perturbed":
        fmap = config.lattice_map
        lattice = cml.LatticeState.random(
            config.population * config.dimension, lattice_rng, config.lattice_epsilon, "global"
        )

    for _ in range(config.max_iterations):
        if algo == "pso":
            state = step_pso(state, config, objective, rng)
        elif algo == "gcpso":
            state = step_gcpso(state, config, objective, rng)
        elif algo == "fips":
            state = step_fips(state, config, objective, rng, neighborhoods)
        elif algo == "all_informed":
            state = step_all_informed(state, config, objective, rng)
        else:
            state = step_cml_perturbed(state, config, objective, rng, lattice, fmap)
            lattice = cml.step_global(lattice, fmap)
        yield state


def run(
    config: OptimizerConfig,
    objective,
    history_stride: int = 1,
    trial_index: int = 0,
    label: str | None = None,
) -> TrialReport:
    """Run one trial from ``config.seed`` and record the best value.

    The history holds iteration 0, every ``history_stride``-th iteration and
    always the last one.
    """
    if history_stride < 1:
        raise ConfigurationError(f"history_stride: must be at least 1, got {history_stride}")
    start = time.perf_counter()
    iterations, values = [], []
    for state in iterate(config, objective):
        k = state.iteration
        if k % history_stride == 0 or k == config.max_iterations:
            iterations.append(k)
            values.append(state.gbest_value)
    return TrialReport(
        algorithm=label or config.algorithm,
        objective=objective.name,
        trial_index=trial_index,
        seed=config.seed,
        iterations=iterations,
        values=values,
        final_best_value=state.gbest_value,
        final_best_position=state.gbest_position.copy(),
        evaluations_used=state.evaluations,
        wall_time=time.perf_counter() - start,
    )
