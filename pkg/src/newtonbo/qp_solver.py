"""Bound-constrained quadratic-program solver for trust-region steps.

Minimizes a local quadratic model over the intersection of an infinity-norm
trust region and the unit box. The workhorse is CMA-ES with projection
repair; an analytic Cauchy point backstops the model-decrease guarantee, so
the returned step never does worse than the steepest-descent reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cmaes import CmaEs, default_popsize
from .local_model import QuadraticModel, eval_model, eval_model_batch

ZERO_GRAD_TOL = 1e-12


@dataclass(frozen=True)
class StepBox:
    """Feasible step set: lo <= s <= hi with 0 always feasible."""

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def from_center(cls, center: np.ndarray, delta: float) -> "StepBox":
        center = np.asarray(center, dtype=float)
        if delta <= 0.0:
            raise ValueError("delta must be positive")
        lo = np.maximum(-delta, -center)
        hi = np.minimum(delta, 1.0 - center)
        return cls(lo=lo, hi=hi)

    def project(self, S: np.ndarray) -> np.ndarray:
        return np.clip(S, self.lo, self.hi)

    def contains(self, s: np.ndarray) -> bool:
        return bool(np.all(s >= self.lo) and np.all(s <= self.hi))


@dataclass(frozen=True)
class CmaConfig:
    """Inner-solver knobs; None fields resolve from the problem size."""

    population: int | None = None
    max_model_evals: int | None = None
    init_step: float | None = None
    tol_fun: float = 1e-10

    def resolve(self, dim: int, delta: float) -> tuple[int, int, float]:
        pop = default_popsize(dim) if self.population is None else self.population
        budget = 100 * dim if self.max_model_evals is None else self.max_model_evals
        sigma0 = 0.3 * delta if self.init_step is None else self.init_step
        if pop < 4:
            raise ValueError("population must be at least 4")
        if budget < 1 or sigma0 <= 0.0:
            raise ValueError("budget and init_step must be positive")
        return pop, budget, sigma0


def cauchy_point(q: QuadraticModel, delta: float) -> tuple[np.ndarray, float]:
    """Minimize the model along steepest descent inside the step box.

    Returns the step and the achieved model decrease (nonnegative).
    """
    box = StepBox.from_center(q.center, delta)
    g_norm = float(np.linalg.norm(q.g))
    if g_norm < ZERO_GRAD_TOL:
        return np.zeros_like(q.g), 0.0
    d = -q.g / g_norm

    with np.errstate(divide="ignore"):
        ratios = np.where(d > 0, box.hi / d, np.where(d < 0, box.lo / d, np.inf))
    t_max = float(np.min(ratios))

    curvature = float(d @ q.B @ d)
    if curvature > 0.0:
        t_star = min(t_max, g_norm / curvature)
    else:
        t_star = t_max
    s_c = box.project(t_star * d)
    decrease = max(q.f0 - eval_model(q, s_c), 0.0)
    return s_c, decrease


def solve(
    q: QuadraticModel,
    delta: float,
    cfg: CmaConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    """Minimize the model over the step box; never worse than the Cauchy point.

    CMA-ES runs in step space with candidates projected onto the box before
    evaluation; the final answer is the best of the CMA incumbent, the
    Cauchy point, and the zero step.
    """
    box = StepBox.from_center(q.center, delta)
    dim = q.g.size
    pop, budget, sigma0 = cfg.resolve(dim, delta)

    best_s = np.zeros(dim)
    best_m = q.f0

    s_c, dec = cauchy_point(q, delta)
    if dec > 0.0:
        m_c = eval_model(q, s_c)
        if m_c < best_m:
            best_s, best_m = s_c, m_c

    es = CmaEs(np.zeros(dim), sigma0, rng, popsize=pop, tol_fun=cfg.tol_fun)
    while es.n_evals < budget and not es.converged:
        S = box.project(es.ask())
        f = eval_model_batch(q, S)
        i = int(np.argmin(f))
        if f[i] < best_m:
            cand_m = eval_model(q, S[i])
            if cand_m < best_m:
                best_s, best_m = S[i].copy(), cand_m
        es.tell(S, f)

    assert box.contains(best_s)
    return best_s, best_m
