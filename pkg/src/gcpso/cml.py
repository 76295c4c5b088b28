"""Coupled map lattices with diffusive, global and accumulated coupling.

Each step first applies the local map to every cell and then mixes the mapped
values; the mixing weights for any one cell always sum to one, so homogeneous
states stay homogeneous and cells stay inside ``[0, 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from gcpso.core import ConfigurationError, FloatArray, RngStream

TOPOLOGIES = ("diffusive", "global", "accumulated")
MAP_KINDS = ("logistic", "tent")


@dataclass(frozen=True)
class LocalMap:
    kind: str = "logistic"
    parameter: float = 4.0

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise ConfigurationError(f"unknown local map {self.kind!r}; valid: {', '.join(MAP_KINDS)}")
        top = 4.0 if self.kind == "logistic" else 2.0
        if not 0.0 < self.parameter <= top:
            raise ConfigurationError(f"{self.kind} parameter must lie in (0, {top:g}], got {self.parameter}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "logistic":
            return self.parameter * x * (1.0 - x)
        return self.parameter * np.minimum(x, 1.0 - x)


@dataclass(frozen=True)
class LatticeState:
    cells: FloatArray
    coupling: float = 0.1
    topology: str = "global"
    time: int = 0

    def __post_init__(self):
        cells = np.atleast_1d(np.asarray(self.cells, dtype=float)).copy()
        if cells.ndim != 1:
            raise ConfigurationError("lattice cells must be a 1-D sequence")
        if cells.size < 2:
            raise ConfigurationError(f"lattice needs at least 2 cells, got {cells.size}")
        if not np.all((cells >= 0.0) & (cells <= 1.0)):
            raise ConfigurationError("lattice cells must lie in [0, 1]")
        if not 0.0 <= self.coupling <= 1.0:
            raise ConfigurationError(f"coupling epsilon must lie in [0, 1], got {self.coupling}")
        if self.topology not in TOPOLOGIES:
            raise ConfigurationError(f"unknown topology {self.topology!r}; valid: {', '.join(TOPOLOGIES)}")
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    @property
    def size(self) -> int:
        return self.cells.size

    @classmethod
    def random(cls, size: int, rng: RngStream, coupling: float = 0.1, topology: str = "global") -> LatticeState:
        return cls(rng.uniform(size), coupling=coupling, topology=topology)


def _advance(state: LatticeState, cells: FloatArray) -> LatticeState:
    # weights sum to one, but rounding can still push a cell just past [0, 1]
    return replace(state, cells=np.clip(cells, 0.0, 1.0), time=state.time + 1)


def _require(state: LatticeState, topology: str):
    if state.topology != topology:
        raise ConfigurationError(f"expected a {topology} lattice, got {state.topology}")


def step_diffusive(state: LatticeState, fmap: LocalMap) -> LatticeState:
    """Nearest-neighbour coupling on a ring."""
    _require(state, "diffusive")
    eps = state.coupling
    fx = fmap(state.cells)
    # written as fx plus a pull, so equal neighbours leave fx bit for bit unchanged
    pull = (np.roll(fx, 1) - fx) + (np.roll(fx, -1) - fx)
    return _advance(state, fx + 0.5 * eps * pull)


def step_global(state: LatticeState, fmap: LocalMap) -> LatticeState:
    """Mean-field coupling to every other cell, O(L) via the total sum."""
    _require(state, "global")
    eps, size = state.coupling, state.size
    fx = fmap(state.cells)
    # deviations from cell 0 are exactly zero on a homogeneous state
    dev = fx - fx[0]
    pull = (dev.sum() - dev) / (size - 1) - dev
    return _advance(state, fx + eps * pull)


def step_accumulated(state: LatticeState, fmap: LocalMap) -> LatticeState:
    """Each cell couples to the mean of all cells before it; the first is free."""
    _require(state, "accumulated")
    eps = state.coupling
    fx = fmap(state.cells)
    out = fx.copy()
    # running mean of the mapped predecessors; equal inputs give an exactly equal mean,
    # and fx + eps*(mean - fx) then returns fx bit for bit
    mean = fx[0]
    for j in range(1, state.size):
        out[j] = fx[j] + eps * (mean - fx[j])
        mean += (fx[j] - mean) / (j + 1)
    return _advance(state, out)


_STEPS = {
    "diffusive": step_diffusive,
    "global": step_global,
    "accumulated": step_accumulated,
}


def step(state: LatticeState, fmap: LocalMap) -> LatticeState:
    return _STEPS[state.topology](state, fmap)


def orbit(state: LatticeState, fmap: LocalMap, steps: int) -> list[LatticeState]:
    """Initial state followed by ``steps`` successive states."""
    if steps < 0:
        raise ConfigurationError(f"steps must be non-negative, got {steps}")
    states = [state]
    for _ in range(steps):
        state = step(state, fmap)
        states.append(state)
    return states


def spacetime(state: LatticeState, fmap: LocalMap, steps: int) -> FloatArray:
    """Orbit as a ``(steps + 1, L)`` array, rows are time."""
    if steps < 0:
        raise ConfigurationError(f"steps must be non-negative, got {steps}")
    field = np.empty((steps + 1, state.size))
    field[0] = state.cells
    for t in range(1, steps + 1):
        state = step(state, fmap)
        field[t] = state.cells
    return field


def weight_matrix(topology: str, size: int, eps) -> np.ndarray:
    """Mixing matrix ``W`` with ``x_next = W @ f(x)``.

    ``eps`` may be a float or a symbolic scalar; the result is an object
    array in the latter case.
    """
    if topology not in TOPOLOGIES:
        raise ConfigurationError(f"unknown topology {topology!r}")
    numeric = isinstance(eps, (int, float, np.floating))
    w = np.zeros((size, size), dtype=float if numeric else object)
    if not numeric:
        w[:] = 0
    for i in range(size):
        if topology == "accumulated" and i == 0:
            w[0, 0] = 1
            continue
        w[i, i] = 1 - eps
        if topology == "diffusive":
            w[i, (i - 1) % size] += eps / 2
            w[i, (i + 1) % size] += eps / 2
        elif topology == "global":
            for j in range(size):
                if j != i:
                    w[i, j] = eps / (size - 1)
        else:
            for j in range(i):
                w[i, j] = eps / i
    return w
