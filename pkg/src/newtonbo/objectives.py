"""Synthetic benchmark objectives and the affine map between their native
domains and the unit box.

All optimizer-internal coordinates live in [0,1]^D; objectives own the
conversion to their native box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by per-dimension lower/upper bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size < 1:
            raise ValueError("bounds must be 1-d arrays of equal, positive length")
        if not np.all(lower < upper):
            raise ValueError("every lower bound must be strictly below its upper bound")

    @property
    def dim(self) -> int:
        return self.lower.size

    def to_native(self, u: np.ndarray) -> np.ndarray:
        """Map a unit-box point to native coordinates."""
        return self.lower + np.asarray(u, dtype=float) * (self.upper - self.lower)

    def to_unit(self, x: np.ndarray) -> np.ndarray:
        """Map a native point back to the unit box."""
        return (np.asarray(x, dtype=float) - self.lower) / (self.upper - self.lower)


def _ackley(x: np.ndarray) -> float:
    return float(
        -20.0 * np.exp(-0.2 * np.sqrt(np.mean(x**2)))
        - np.exp(np.mean(np.cos(2.0 * np.pi * x)))
        + 20.0
        + np.e
    )


def _griewank(x: np.ndarray) -> float:
    i = np.arange(1, x.size + 1, dtype=float)
    return float(np.sum(x**2) / 4000.0 - np.prod(np.cos(x / np.sqrt(i))) + 1.0)


_FUNCTIONS = {
    "ackley": (_ackley, (-5.0, 10.0)),
    "griewank": (_griewank, (-300.0, 600.0)),
}


@dataclass(frozen=True)
class Objective:
    """A benchmark function together with its native domain.

    Evaluation is deterministic given the point and the noise stream;
    synthetic defaults are noiseless (``noise_sd = 0``).
    """

    name: str
    dim: int
    box: Box
    noise_sd: float = 0.0


def make_objective(name: str, dim: int, noise_sd: float = 0.0) -> Objective:
    """Build a named benchmark objective on its native domain.

    Ackley lives on [-5, 10]^D, Griewank on [-300, 600]^D.
    """
    if name not in _FUNCTIONS:
        raise ValueError(f"unknown objective {name!r}; choose from {sorted(_FUNCTIONS)}")
    if dim < 1:
        raise ValueError("dim must be >= 1")
    lo, hi = _FUNCTIONS[name][1]
    box = Box(np.full(dim, lo), np.full(dim, hi))
    return Objective(name=name, dim=dim, box=box, noise_sd=float(noise_sd))


def evaluate(obj: Objective, u: np.ndarray, noise_rng: np.random.Generator | None = None) -> float:
    """Evaluate the objective at a unit-box point, adding observation noise.

    Objectives are immutable, so concurrent calls are safe as long as each
    caller owns its noise stream.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != (obj.dim,):
        raise ValueError(f"expected point of dimension {obj.dim}, got shape {u.shape}")
    if np.any(u < 0.0) or np.any(u > 1.0):
        raise ValueError("point lies outside the unit box")
    x = obj.box.to_native(u)
    y = _FUNCTIONS[obj.name][0](x)
    if obj.noise_sd > 0.0:
        if noise_rng is None:
            raise ValueError("noise_sd > 0 requires a noise stream")
        y += obj.noise_sd * noise_rng.standard_normal()
    return y
