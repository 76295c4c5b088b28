"""Globally coupled particle swarm optimization and coupled map lattices."""

from gcpso.core import (
    Bounds,
    ConfigurationError,
    EvaluationError,
    RngStream,
    SwarmState,
    apply_bounds,
    clamp_velocity,
)
from gcpso.objectives import Objective, ShiftRotate, get_objective, make_shift_rotate
from gcpso.optimizers import OptimizerConfig, TrialReport, run

__all__ = [
    "Bounds",
    "ConfigurationError",
    "EvaluationError",
    "Objective",
    "OptimizerConfig",
    "RngStream",
    "ShiftRotate",
    "SwarmState",
    "TrialReport",
    "apply_bounds",
    "clamp_velocity",
    "get_objective",
    "make_shift_rotate",
    "run",
]

__version__ = "0.1.0"
