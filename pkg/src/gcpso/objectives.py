"""Benchmark objectives with known optima and shift/rotation transforms.

All base functions are vectorised over the last axis, so ``f(x)`` accepts a
single point of shape ``(d,)`` or a batch of shape ``(n, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from gcpso.core import Bounds, ConfigurationError, FloatArray, RngStream

# x * sin(sqrt(x)) at its maximiser on [0, 500]
SCHWEFEL_ARGMIN = 420.96874635998205
SCHWEFEL_CONSTANT = 418.9828872724337


def sphere(x):
    x = np.asarray(x, dtype=float)
    return np.sum(x * x, axis=-1)


def ackley(x, a=20.0, b=0.2, c=2.0 * np.pi):
    x = np.asarray(x, dtype=float)
    rms = np.sqrt(np.mean(x * x, axis=-1))
    mean_cos = np.mean(np.cos(c * x), axis=-1)
    return -a * np.exp(-b * rms) - np.exp(mean_cos) + a + np.e


def rastrigin(x):
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    return 10.0 * d + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x), axis=-1)


def rosenbrock(x):
    x = np.asarray(x, dtype=float)
    head, tail = x[..., :-1], x[..., 1:]
    return np.sum(100.0 * (tail - head**2) ** 2 + (1.0 - head) ** 2, axis=-1)


def griewank(x):
    x = np.asarray(x, dtype=float)
    j = np.arange(1, x.shape[-1] + 1)
    return 1.0 + np.sum(x * x, axis=-1) / 4000.0 - np.prod(np.cos(x / np.sqrt(j)), axis=-1)


def dejong_f4(x):
    """Noise-free quartic: sum of ``j * x_j**4`` with 1-based ``j``."""
    x = np.asarray(x, dtype=float)
    j = np.arange(1, x.shape[-1] + 1)
    return np.sum(j * x**4, axis=-1)


def schwefel(x):
    """Schwefel 2.26, shifted so the global minimum value is 0."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    return SCHWEFEL_CONSTANT * d - np.sum(x * np.sin(np.sqrt(np.abs(x))), axis=-1)


@dataclass(frozen=True)
class _Entry:
    func: Callable
    low: float
    high: float
    argmin: float
    min_dim: int = 1


CATALOG: dict[str, _Entry] = {
    "sphere": _Entry(sphere, -100.0, 100.0, 0.0),
    "ackley": _Entry(ackley, -32.768, 32.768, 0.0),
    "rastrigin": _Entry(rastrigin, -5.12, 5.12, 0.0),
    "rosenbrock": _Entry(rosenbrock, -30.0, 30.0, 1.0, min_dim=2),
    "griewank": _Entry(griewank, -600.0, 600.0, 0.0),
    "dejong_f4": _Entry(dejong_f4, -1.28, 1.28, 0.0),
    "schwefel": _Entry(schwefel, -500.0, 500.0, SCHWEFEL_ARGMIN),
}

TRANSFORM_SUFFIXES = ("_shifted_rotated", "_shifted", "_rotated")

# Fraction of the half-width used as the shift radius for catalog variants.
SHIFT_FRACTION = 0.8


@dataclass(frozen=True)
class ShiftRotate:
    """Maps ``x`` to ``rotation @ (x - shift)`` before the base function."""

    shift: FloatArray
    rotation: FloatArray

    def __post_init__(self):
        shift = np.atleast_1d(np.asarray(self.shift, dtype=float)).copy()
        rotation = np.atleast_2d(np.asarray(self.rotation, dtype=float)).copy()
        d = shift.size
        if rotation.shape != (d, d):
            raise ConfigurationError(f"rotation must be {d}x{d}, got {rotation.shape}")
        shift.flags.writeable = False
        rotation.flags.writeable = False
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "rotation", rotation)

    @classmethod
    def identity(cls, d: int) -> ShiftRotate:
        return cls(np.zeros(d), np.eye(d))

    @property
    def dim(self) -> int:
        return self.shift.size

    def orthogonality_error(self) -> float:
        m = self.rotation
        return float(np.max(np.abs(m.T @ m - np.eye(self.dim))))

    def forward(self, x):
        """Transformed coordinates; works row-wise on batches."""
        # explicit product-sum: same bits for a single point and a batch, no BLAS
        diff = np.asarray(x, dtype=float) - self.shift
        return np.sum(diff[..., None, :] * self.rotation, axis=-1)

    def inverse(self, z):
        return np.asarray(z, dtype=float) @ self.rotation + self.shift


def random_rotation(d: int, rng: RngStream, attempts: int = 5) -> FloatArray:
    """Haar-distributed orthogonal matrix via QR of a Gaussian matrix."""
    for _ in range(attempts):
        a = rng.normal((d, d))
        q, r = np.linalg.qr(a)
        diag = np.diag(r)
        if np.min(np.abs(diag)) > 1e-10 * max(1.0, np.max(np.abs(diag))):
            return q * np.sign(diag)
    raise ConfigurationError(f"could not draw a non-singular {d}x{d} matrix in {attempts} attempts")


def make_shift_rotate(d: int, rng: RngStream, shift_radius: float, rotate: bool = True) -> ShiftRotate:
    """Random shift uniform in ``[-shift_radius, shift_radius]^d`` plus a random rotation."""
    if d < 1:
        raise ConfigurationError(f"dimension must be at least 1, got {d}")
    if shift_radius < 0:
        raise ConfigurationError(f"shift_radius must be non-negative, got {shift_radius}")
    shift = shift_radius * (2.0 * rng.uniform(d) - 1.0)
    rotation = random_rotation(d, rng) if rotate else np.eye(d)
    return ShiftRotate(shift, rotation)


@dataclass(frozen=True)
class Objective:
    name: str
    dim: int
    bounds: Bounds
    base: Callable
    base_optimum_position: FloatArray
    known_optimum_value: float = 0.0
    transform: ShiftRotate | None = None

    @property
    def known_optimum_position(self) -> FloatArray:
        if self.transform is None:
            return self.base_optimum_position.copy()
        return self.transform.inverse(self.base_optimum_position)

    def __call__(self, x) -> float:
        return evaluate(self, x)

    def evaluate_batch(self, xs) -> FloatArray:
        xs = np.asarray(xs, dtype=float)
        if xs.ndim != 2 or xs.shape[1] != self.dim:
            raise ConfigurationError(f"{self.name}: expected points of dimension {self.dim}, got shape {xs.shape}")
        if self.transform is not None:
            xs = self.transform.forward(xs)
        return np.asarray(self.base(xs), dtype=float)


def evaluate(objective: Objective, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (objective.dim,):
        raise ConfigurationError(
            f"{objective.name}: expected a point of dimension {objective.dim}, got shape {x.shape}"
        )
    if objective.transform is not None:
        x = objective.transform.forward(x)
    return float(objective.base(x))


def split_name(name: str) -> tuple[str, str]:
    """``'rastrigin_shifted_rotated'`` -> ``('rastrigin', '_shifted_rotated')``."""
    for suffix in TRANSFORM_SUFFIXES:
        if name.endswith(suffix):
            return name[: -len(suffix)], suffix
    return name, ""


def available_objectives() -> list[str]:
    names = []
    for base in CATALOG:
        names.append(base)
        names.extend(base + s for s in reversed(TRANSFORM_SUFFIXES))
    return names


def get_objective(name: str, dim: int, transform_seed: int = 0) -> Objective:
    """Build a catalog objective by name.

    Names are a base function (``sphere``, ``ackley``, ...) optionally followed
    by ``_shifted``, ``_rotated`` or ``_shifted_rotated``; the transform is
    drawn from ``transform_seed``.
    """
    base_name, suffix = split_name(name.strip().lower())
    if base_name not in CATALOG:
        raise ConfigurationError(f"unknown objective {name!r}; valid names: {', '.join(available_objectives())}")
    entry = CATALOG[base_name]
    dim = int(dim)
    if dim < entry.min_dim:
        raise ConfigurationError(f"{base_name} needs dimension >= {entry.min_dim}, got {dim}")

    transform = None
    if suffix:
        radius = SHIFT_FRACTION * 0.5 * (entry.high - entry.low) if "shifted" in suffix else 0.0
        transform = make_shift_rotate(dim, RngStream(transform_seed), radius, rotate="rotated" in suffix)
    return Objective(
        name=base_name + suffix,
        dim=dim,
        bounds=Bounds.uniform(entry.low, entry.high, dim),
        base=entry.func,
        base_optimum_position=np.full(dim, entry.argmin),
        known_optimum_value=0.0,
        transform=transform,
    )
