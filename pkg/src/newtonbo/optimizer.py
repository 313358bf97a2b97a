"""Outer optimization loop: one global surrogate, many local Newton steps.

Each iteration refits the surrogate on all data, builds one quadratic model
per trust region, solves the bound-constrained subproblems, evaluates the
candidates, updates radii, and replaces terminated regions at fresh restart
locations -- all bookkept in a per-evaluation RunRecord.
"""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import trust_region as tr
from .gp import Dataset, GPModel, fit, posterior, uniform_bound
from .kernel import FactorizationError
from .local_model import build, sample_lambda
from .objectives import Objective, evaluate
from .qp_solver import CmaConfig, StepBox, solve
from .restart import RestartStrategy, initial_design, restart_points

logger = logging.getLogger(__name__)

DEDUP_TOL = 1e-9
DEDUP_NUDGE = 1e-6
CENTER_SPACING = 0.1
INFLATED_NOISE_FLOOR = 1e-4


@dataclass(frozen=True)
class OptimizerConfig:
    max_evals: int
    n_init: int = 50
    batch: int = 5
    num_tr: int = 5
    tr_update: str = "turbo"  # "turbo" or "ratio"
    tr_config: tr.TrustRegionConfig = field(default_factory=tr.TrustRegionConfig)
    restart: RestartStrategy = field(default_factory=RestartStrategy)
    cma: CmaConfig = field(default_factory=CmaConfig)
    seed: int = 0
    diagnostics: bool = False

    def __post_init__(self):
        if self.batch != self.num_tr:
            raise ValueError("batch must equal num_tr (one candidate per region)")
        if self.max_evals < self.n_init:
            raise ValueError("max_evals must be at least n_init")
        if self.tr_update not in ("turbo", "ratio"):
            raise ValueError("tr_update must be 'turbo' or 'ratio'")


@dataclass(frozen=True)
class EvalRow:
    eval_index: int
    iteration: int
    tr_id: int
    value: float
    best_so_far: float
    delta: float
    grad_norm: float
    lam: float
    restart_flag: int
    point: np.ndarray


@dataclass
class RunRecord:
    rows: list[EvalRow]
    summary: dict

    @property
    def n_evals(self) -> int:
        return len(self.rows)

    @property
    def best_so_far(self) -> np.ndarray:
        return np.array([r.best_so_far for r in self.rows])

    @property
    def final_best(self) -> float:
        return self.rows[-1].best_so_far


def _select_center_indices(data: Dataset, q: int) -> list[int]:
    order = np.argsort(data.y_raw, kind="stable")
    spacing = CENTER_SPACING
    while True:
        chosen: list[int] = []
        for i in order:
            if len(chosen) == q:
                break
            p = data.X[i]
            if all(np.max(np.abs(p - data.X[j])) >= spacing for j in chosen):
                chosen.append(int(i))
        if len(chosen) == q:
            return chosen
        spacing *= 0.5
        if spacing < 1e-12:
            # pathological duplicates: fill with the best remaining rows
            for i in order:
                if int(i) not in chosen:
                    chosen.append(int(i))
                    if len(chosen) == q:
                        return chosen


def init_centers(data: Dataset, q: int) -> np.ndarray:
    """The q lowest-value points subject to a pairwise spacing of 0.1 in the
    infinity norm, relaxed by halving whenever too few qualify."""
    if data.n < q:
        raise ValueError("dataset must hold at least q points")
    return data.X[_select_center_indices(data, q)]


def run(obj: Objective, cfg: OptimizerConfig) -> RunRecord:
    """Execute the full optimization loop and return its RunRecord."""
    t_start = time.perf_counter()
    dim = obj.dim
    streams = [
        np.random.default_rng(s)
        for s in np.random.SeedSequence(cfg.seed).spawn(7)
    ]
    rng_design, rng_noise, rng_fit, rng_lambda, rng_cma, rng_restart, rng_dedup = streams

    rows: list[EvalRow] = []
    best = np.inf
    aborted = None

    def record(iteration, tr_id, point, value, delta, grad_norm, lam, restart_flag):
        nonlocal best
        best = min(best, value)
        rows.append(
            EvalRow(
                eval_index=len(rows),
                iteration=iteration,
                tr_id=tr_id,
                value=value,
                best_so_far=best,
                delta=delta,
                grad_norm=grad_norm,
                lam=lam,
                restart_flag=restart_flag,
                point=np.asarray(point, dtype=float),
            )
        )

    X0 = initial_design(cfg.n_init, dim, rng_design)
    y0 = []
    for u in X0:
        y0.append(evaluate(obj, u, rng_noise))
        record(0, -1, u, y0[-1], np.nan, np.nan, np.nan, 0)
    data = Dataset.from_observations(X0, np.asarray(y0))

    center_idx = _select_center_indices(data, cfg.num_tr)
    regions = [
        tr.fresh_region(data.X[i], data.y_raw[i], cfg.tr_config) for i in center_idx
    ]

    model: GPModel | None = None
    prev_params = None
    n_restarts = 0
    iteration = 0
    while len(rows) < cfg.max_evals and aborted is None:
        iteration += 1
        try:
            model = fit(
                data,
                dim,
                rng_fit,
                n_starts=5 if prev_params is None else 3,
                init_params=prev_params,
            )
        except FactorizationError:
            logger.warning("surrogate fit failed; refitting with inflated noise floor")
            model = fit(
                data,
                dim,
                rng_fit,
                n_starts=5 if prev_params is None else 3,
                init_params=prev_params,
                noise_floor=INFLATED_NOISE_FLOOR,
            )
        prev_params = (model.params, model.noise_var)

        new_X, new_y = [], []
        for ell, region in enumerate(regions):
            lam = sample_lambda(rng_lambda)
            qm = build(model, region.center, lam)
            grad_norm = float(np.linalg.norm(qm.g))
            delta_used = region.delta

            step_box = StepBox.from_center(region.center, delta_used)
            s_star, m_star = solve(qm, delta_used, cfg.cma, rng_cma)
            assert step_box.contains(s_star)
            x_cand = np.clip(region.center + s_star, 0.0, 1.0)
            x_cand = _dedupe(x_cand, data.X, new_X, rng_dedup)

            try:
                y_cand = evaluate(obj, x_cand, rng_noise)
            except Exception as exc:  # abort with partial record
                aborted = f"objective evaluation failed: {exc}"
                logger.error(aborted)
                break

            improved = y_cand < region.best_value
            if cfg.tr_update == "ratio":
                f_old = region.best_value if np.isfinite(region.best_value) else qm.f0
                ratio = tr.rho(f_old, y_cand, qm.f0, m_star)
                region = tr.update_ratio(region, ratio, grad_norm, cfg.tr_config)
            else:
                region = tr.update_turbo(region, improved, cfg.tr_config)
            if improved:
                region = tr.recenter(region, x_cand, y_cand)

            restart_needed = tr.should_restart(region, grad_norm, cfg.tr_config)
            if restart_needed:
                region = tr.terminate(region)
            regions[ell] = region

            new_X.append(x_cand)
            new_y.append(y_cand)
            record(
                iteration, ell, x_cand, y_cand,
                delta_used, grad_norm, lam, int(restart_needed),
            )

        if new_X:
            data = data.append(np.asarray(new_X), np.asarray(new_y))
        if aborted is not None:
            break

        dead = [ell for ell, r in enumerate(regions) if r.status == tr.TERMINATED]
        if dead:
            active = [r.center for r in regions if r.status == tr.ACTIVE]
            fresh = restart_points(
                model, data, cfg.restart, active, len(dead), rng_restart
            )
            for ell, new_center in zip(dead, fresh):
                regions[ell] = tr.fresh_region(new_center, np.inf, cfg.tr_config)
            n_restarts += len(dead)
        assert all(r.status == tr.ACTIVE for r in regions)

    best_idx = int(np.argmin([r.value for r in rows]))
    summary = {
        "final_best_value": rows[best_idx].value,
        "final_best_point": rows[best_idx].point.tolist(),
        "n_evals": len(rows),
        "n_iterations": iteration,
        "n_restarts": n_restarts,
        "seed": cfg.seed,
        "wall_time": time.perf_counter() - t_start,
        "config": config_echo(obj, cfg),
    }
    if aborted is not None:
        summary["aborted"] = aborted
    if cfg.diagnostics and model is not None:
        report = uniform_bound(model, data, tau=0.1, delta=0.1)
        summary["uniform_bound"] = report.as_dict()
    return RunRecord(rows=rows, summary=summary)


def _dedupe(
    x: np.ndarray,
    existing: np.ndarray,
    pending: list[np.ndarray],
    rng: np.random.Generator,
) -> np.ndarray:
    """Nudge a candidate that coincides with an already-evaluated point."""
    others = [existing] + ([np.asarray(pending)] if pending else [])
    for _ in range(8):
        clash = any(np.min(np.max(np.abs(block - x), axis=1)) < DEDUP_TOL for block in others)
        if not clash:
            break
        x = np.clip(x + rng.uniform(-DEDUP_NUDGE, DEDUP_NUDGE, size=x.size), 0.0, 1.0)
    return x


def config_echo(obj: Objective, cfg: OptimizerConfig) -> dict:
    echo = {
        "function": obj.name,
        "dim": obj.dim,
        "noise_sd": obj.noise_sd,
        "max_evals": cfg.max_evals,
        "n_init": cfg.n_init,
        "batch": cfg.batch,
        "num_tr": cfg.num_tr,
        "tr_update": cfg.tr_update,
        "seed": cfg.seed,
        "diagnostics": cfg.diagnostics,
        "tr_config": asdict(cfg.tr_config),
        "restart": asdict(cfg.restart),
        "cma": asdict(cfg.cma),
    }
    return echo
