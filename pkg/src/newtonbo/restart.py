"""Space-filling initialization and restart-location selection.

Restart locations approximate sampling from the posterior belief over the
global minimizer: Thompson sampling on a quasirandom pool is the default,
with a max-variance and a uniform-random (ablation) alternative.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .gp import Dataset, GPModel, posterior_batch, sample_posterior_paths

logger = logging.getLogger(__name__)

EXCLUSION_RADIUS = 0.05
STRATEGIES = ("thompson", "max_variance", "random")


@dataclass(frozen=True)
class RestartStrategy:
    kind: str = "thompson"
    pool_size: int | None = None  # None -> 512 * min(D, 10)
    num_samples: int = 8

    def __post_init__(self):
        if self.kind not in STRATEGIES:
            raise ValueError(f"kind must be one of {STRATEGIES}")
        if self.pool_size is not None and self.pool_size < 2:
            raise ValueError("pool_size must be at least 2")
        if self.num_samples < 1:
            raise ValueError("num_samples must be at least 1")

    def resolve_pool_size(self, dim: int) -> int:
        return self.pool_size if self.pool_size is not None else 512 * min(dim, 10)


def initial_design(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """n scrambled Sobol points in [0, 1)^dim, deterministic given the rng.

    Draws the next power of two and truncates, which keeps scipy quiet
    about balance properties without changing the returned points.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    sampler = qmc.Sobol(d=dim, scramble=True, seed=rng)
    full = sampler.random(2 ** math.ceil(math.log2(n)) if n > 1 else 1)
    return full[:n]


def _excluded(pool: np.ndarray, centers: list[np.ndarray]) -> np.ndarray:
    """Boolean mask of pool rows within the exclusion radius of any center."""
    mask = np.zeros(pool.shape[0], dtype=bool)
    for c in centers:
        mask |= np.max(np.abs(pool - np.asarray(c)), axis=1) < EXCLUSION_RADIUS
    return mask


def restart_point(
    model: GPModel,
    data: Dataset,
    strat: RestartStrategy,
    active_centers: list[np.ndarray],
    rng: np.random.Generator,
) -> np.ndarray:
    """Pick a restart location for a terminated trust region.

    thompson: joint posterior draws over a fresh quasirandom pool, return
    the minimizer of one uniformly chosen draw. max_variance: pool argmax
    of the posterior standard deviation. random: uniform point. Pool points
    too close to an active center are excluded; a fully excluded pool falls
    back to a uniform point (logged).
    """
    return restart_points(model, data, strat, active_centers, 1, rng)[0]


def restart_points(
    model: GPModel,
    data: Dataset,
    strat: RestartStrategy,
    active_centers: list[np.ndarray],
    count: int,
    rng: np.random.Generator,
) -> list[np.ndarray]:
    """Restart locations for ``count`` regions terminated together.

    One pool (and for thompson one set of joint draws) is shared across the
    batch; each pick uses its own uniformly chosen draw, and earlier picks
    join the exclusion set so the batch stays spread out.
    """
    dim = data.dim
    if strat.kind == "random":
        return [rng.random(dim) for _ in range(count)]

    pool = initial_design(strat.resolve_pool_size(dim), dim, rng)
    keep = ~_excluded(pool, active_centers)
    pool = pool[keep]

    if strat.kind == "max_variance":
        scores = -posterior_batch(model, pool)[1] if pool.size else None
    else:
        draws = (
            sample_posterior_paths(model, pool, strat.num_samples, rng)
            if pool.size
            else None
        )

    picks: list[np.ndarray] = []
    alive = np.ones(pool.shape[0], dtype=bool)
    for _ in range(count):
        if not np.any(alive):
            logger.warning("restart pool fully excluded; using uniform point")
            picks.append(rng.random(dim))
            continue
        if strat.kind == "max_variance":
            masked = np.where(alive, scores, np.inf)
            idx = int(np.argmin(masked))
        else:
            chosen = int(rng.integers(strat.num_samples))
            masked = np.where(alive, draws[chosen], np.inf)
            idx = int(np.argmin(masked))
        picks.append(pool[idx])
        alive &= np.max(np.abs(pool - pool[idx]), axis=1) >= EXCLUSION_RADIUS
    return picks
