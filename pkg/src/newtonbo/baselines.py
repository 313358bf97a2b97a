"""Matched-budget comparison arms: quasirandom search and plain CMA-ES.

Both emit RunRecords with the same schema as the main optimizer so the CLI
aggregates all arms uniformly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cmaes import CmaEs
from .objectives import Objective, evaluate
from .optimizer import EvalRow, RunRecord
from .qp_solver import CmaConfig
from .restart import initial_design

BASELINE_KINDS = ("sobol", "cmaes")


@dataclass(frozen=True)
class BaselineConfig:
    kind: str
    max_evals: int
    seed: int = 0
    cma: CmaConfig = field(default_factory=CmaConfig)

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"kind must be one of {BASELINE_KINDS}")
        if self.max_evals < 1:
            raise ValueError("max_evals must be at least 1")


def _make_record(obj: Objective, cfg: BaselineConfig, rows: list[EvalRow], t0: float) -> RunRecord:
    best_idx = int(np.argmin([r.value for r in rows]))
    return RunRecord(
        rows=rows,
        summary={
            "final_best_value": rows[best_idx].value,
            "final_best_point": rows[best_idx].point.tolist(),
            "n_evals": len(rows),
            "n_iterations": rows[-1].iteration,
            "n_restarts": 0,
            "seed": cfg.seed,
            "wall_time": time.perf_counter() - t0,
            "config": {
                "function": obj.name,
                "dim": obj.dim,
                "noise_sd": obj.noise_sd,
                "mode": cfg.kind,
                "max_evals": cfg.max_evals,
                "seed": cfg.seed,
            },
        },
    )


def run_sobol(obj: Objective, cfg: BaselineConfig) -> RunRecord:
    """Evaluate the first max_evals scrambled quasirandom points."""
    t0 = time.perf_counter()
    rng_design, rng_noise = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(2)
    )
    X = initial_design(cfg.max_evals, obj.dim, rng_design)
    rows: list[EvalRow] = []
    best = np.inf
    for i, u in enumerate(X):
        y = evaluate(obj, u, rng_noise)
        best = min(best, y)
        rows.append(
            EvalRow(
                eval_index=i, iteration=0, tr_id=-1, value=y, best_so_far=best,
                delta=np.nan, grad_norm=np.nan, lam=np.nan, restart_flag=0, point=u,
            )
        )
    return _make_record(obj, cfg, rows, t0)


def run_cmaes(obj: Objective, cfg: BaselineConfig) -> RunRecord:
    """CMA-ES on the unit box with projection repair, started at the center.

    Spends the budget exactly: a converged strategy is re-seeded at a
    uniform point, and a final partial generation is evaluated but not fed
    back.
    """
    t0 = time.perf_counter()
    rng_cma, rng_noise, rng_restart = (
        np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(3)
    )
    dim = obj.dim
    pop, _, sigma0 = cfg.cma.resolve(dim, 1.0)

    rows: list[EvalRow] = []
    best = np.inf
    es = CmaEs(np.full(dim, 0.5), sigma0, rng_cma, popsize=pop, tol_fun=cfg.cma.tol_fun)
    generation = 0
    while len(rows) < cfg.max_evals:
        if es.converged:
            es = CmaEs(rng_restart.random(dim), sigma0, rng_cma, popsize=pop,
                       tol_fun=cfg.cma.tol_fun)
        generation += 1
        X = np.clip(es.ask(), 0.0, 1.0)
        remaining = cfg.max_evals - len(rows)
        X_eval = X[:remaining]
        f = np.empty(len(X_eval))
        for i, u in enumerate(X_eval):
            f[i] = evaluate(obj, u, rng_noise)
            best = min(best, float(f[i]))
            rows.append(
                EvalRow(
                    eval_index=len(rows), iteration=generation, tr_id=-1,
                    value=float(f[i]), best_so_far=best, delta=np.nan,
                    grad_norm=np.nan, lam=np.nan, restart_flag=0, point=u,
                )
            )
        if len(X_eval) == len(X):
            es.tell(X_eval, f)
    return _make_record(obj, cfg, rows, t0)
