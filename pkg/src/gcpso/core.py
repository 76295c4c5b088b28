"""Shared numeric types: bounds, seeded random streams and swarm state.

Vectors are plain 1-D ``numpy`` float arrays of length ``d``; a swarm stores
its particles row-wise as ``(n, d)`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]


class ConfigurationError(ValueError):
    """Invalid parameters, mismatched dimensions or inconsistent settings."""


class EvaluationError(RuntimeError):
    """An objective evaluation produced an unusable value."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned search box ``[lower_j, upper_j]`` per coordinate."""

    lower: FloatArray
    upper: FloatArray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size < 1:
            raise ConfigurationError(
                f"bounds must be two equal-length vectors, got shapes {lower.shape} and {upper.shape}"
            )
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ConfigurationError("bounds must be finite")
        if np.any(lower >= upper):
            raise ConfigurationError("every lower bound must be strictly below its upper bound")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, low: float, high: float, dim: int) -> Bounds:
        return cls(np.full(dim, float(low)), np.full(dim, float(high)))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> FloatArray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


class RngStream:
    """Seeded uniform/normal source backed by PCG64.

    Two streams built from the same seed yield bit-identical draws. Child
    streams made with :meth:`spawn` never advance the parent.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self._seq = np.random.SeedSequence(seed)
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    @classmethod
    def for_trial(cls, master_seed: int, trial_index: int) -> RngStream:
        return cls(derive_seed(master_seed, trial_index))

    def uniform(self, size=None) -> FloatArray:
        """Draws in ``[0, 1)``."""
        return self._gen.random(size)

    def normal(self, size=None) -> FloatArray:
        return self._gen.standard_normal(size)

    def spawn(self, key: int = 0) -> RngStream:
        return RngStream(derive_seed(self.seed, key, salt=0x5EED))

    def __repr__(self):
        return f"RngStream(seed={self.seed})"


def derive_seed(master_seed: int, index: int, salt: int = 0) -> int:
    """Deterministically mix ``(master_seed, index)`` into a fresh 64-bit seed."""
    words = [int(master_seed) & (2**64 - 1), int(index)]
    if salt:
        words.append(salt)
    seq = np.random.SeedSequence(words)
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass
class SwarmState:
    positions: FloatArray
    velocities: FloatArray
    pbest_positions: FloatArray
    pbest_values: FloatArray
    gbest_position: FloatArray
    gbest_value: float
    iteration: int = 0
    evaluations: int = 0
    fitnesses: FloatArray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def copy(self) -> SwarmState:
        return replace(
            self,
            positions=self.positions.copy(),
            velocities=self.velocities.copy(),
            pbest_positions=self.pbest_positions.copy(),
            pbest_values=self.pbest_values.copy(),
            gbest_position=self.gbest_position.copy(),
            fitnesses=None if self.fitnesses is None else self.fitnesses.copy(),
        )


def velocity_limit(bounds: Bounds, fraction: float) -> FloatArray:
    """Per-component velocity cap, ``fraction`` of each coordinate range."""
    if fraction <= 0:
        raise ConfigurationError(f"v_max_fraction must be positive, got {fraction}")
    return fraction * bounds.width


def clamp_velocity(v, v_max) -> FloatArray:
    v_max = np.asarray(v_max, dtype=float)
    return np.clip(np.asarray(v, dtype=float), -v_max, v_max)


def apply_bounds(x, bounds: Bounds) -> FloatArray:
    return np.clip(np.asarray(x, dtype=float), bounds.lower, bounds.upper)


def evaluate_swarm(objective, positions: FloatArray) -> FloatArray:
    values = np.asarray(objective.evaluate_batch(positions), dtype=float)
    bad = np.flatnonzero(np.isnan(values))
    if bad.size:
        i = int(bad[0])
        raise EvaluationError(f"objective {objective.name!r} returned NaN for particle {i}", index=i)
    return values


def init_swarm(config, objective, rng: RngStream) -> SwarmState:
    """Random positions in the box, random velocities within the clamp.

    ``config`` needs ``population``, ``dimension`` and ``v_max_fraction``.
    """
    n, d = int(config.population), int(config.dimension)
    if n < 2:
        raise ConfigurationError(f"population must be at least 2, got {n}")
    if d != objective.dim:
        raise ConfigurationError(
            f"dimension mismatch: config has {d}, objective {objective.name!r} has {objective.dim}"
        )
    bounds = objective.bounds
    v_max = velocity_limit(bounds, config.v_max_fraction)
    positions = bounds.lower + rng.uniform((n, d)) * bounds.width
    positions = apply_bounds(positions, bounds)
    velocities = (2.0 * rng.uniform((n, d)) - 1.0) * v_max
    values = evaluate_swarm(objective, positions)
    best = int(np.argmin(values))
    return SwarmState(
        positions=positions,
        velocities=velocities,
        pbest_positions=positions.copy(),
        pbest_values=values.copy(),
        gbest_position=positions[best].copy(),
        gbest_value=float(values[best]),
        iteration=0,
        evaluations=n,
        fitnesses=values,
    )


def update_bests(state: SwarmState, fitnesses) -> SwarmState:
    """Replace personal bests on strict improvement and recompute the global best.

    The returned state is a copy; ``iteration`` is left for the caller.
    """
    fitnesses = np.asarray(fitnesses, dtype=float)
    if fitnesses.shape != (state.n,):
        raise ConfigurationError(f"expected {state.n} fitness values, got shape {fitnesses.shape}")
    bad = np.flatnonzero(np.isnan(fitnesses))
    if bad.size:
        i = int(bad[0])
        raise EvaluationError(f"NaN fitness for particle {i}", index=i)

    new = state.copy()
    improved = fitnesses < new.pbest_values
    new.pbest_positions[improved] = new.positions[improved]
    new.pbest_values[improved] = fitnesses[improved]
    new.fitnesses = fitnesses.copy()
    best = int(np.argmin(new.pbest_values))
    new.gbest_value = float(new.pbest_values[best])
    new.gbest_position = new.pbest_positions[best].copy()
    return new


def check_state(state: SwarmState, bounds: Bounds, v_max=None) -> None:
    """Raise ``AssertionError`` if any swarm invariant is violated."""
    for name in ("positions", "velocities", "pbest_positions", "pbest_values", "gbest_position"):
        arr = getattr(state, name)
        assert np.all(np.isfinite(arr)), f"{name} has non-finite entries"
    best = int(np.argmin(state.pbest_values))
    assert state.gbest_value == state.pbest_values[best], "gbest_value is not the minimum pbest value"
    assert np.array_equal(state.gbest_position, state.pbest_positions[best]), (
        "gbest_position does not match the lowest-index best pbest"
    )
    assert np.all(state.positions >= bounds.lower) and np.all(state.positions <= bounds.upper), (
        "positions outside bounds"
    )
    if v_max is not None:
        assert np.all(np.abs(state.velocities) <= v_max), "velocity exceeds clamp"
