"""Radius and lifecycle management for a single trust region.

Two selectable update modes: success/failure counters in the TuRBO style
(the default), and the classical ratio rule used by the convergence
analysis. Updates are pure: they return a new state.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

ACTIVE = "active"
TERMINATED = "terminated"

RHO_DENOM_TOL = 1e-12


@dataclass(frozen=True)
class TrustRegionConfig:
    delta_init: float = 0.4
    delta_max: float = 0.8
    delta_min: float = 0.05
    tau_succ: int = 3
    tau_fail: int = 3
    # ratio-mode constants: 0 < eta0 <= eta1 < 1, 0 < beta1 < 1 < beta2, mu_cap >= 1
    eta0: float = 0.25
    eta1: float = 0.75
    beta1: float = 0.5
    beta2: float = 2.0
    mu_cap: float = 10.0
    grad_tol: float = 1e-5

    def __post_init__(self):
        if not 0.0 < self.delta_min < self.delta_init <= self.delta_max:
            raise ValueError("need 0 < delta_min < delta_init <= delta_max")
        if not 0.0 < self.eta0 <= self.eta1 < 1.0:
            raise ValueError("need 0 < eta0 <= eta1 < 1")
        if not 0.0 < self.beta1 < 1.0 < self.beta2:
            raise ValueError("need 0 < beta1 < 1 < beta2")
        if self.mu_cap < 1.0:
            raise ValueError("need mu_cap >= 1")
        if self.tau_succ < 1 or self.tau_fail < 1:
            raise ValueError("counter thresholds must be positive")


@dataclass(frozen=True)
class TrustRegionState:
    center: np.ndarray
    best_value: float
    delta: float
    succ_count: int = 0
    fail_count: int = 0
    status: str = ACTIVE


def fresh_region(center: np.ndarray, best_value: float, cfg: TrustRegionConfig) -> TrustRegionState:
    return TrustRegionState(
        center=np.asarray(center, dtype=float),
        best_value=float(best_value),
        delta=cfg.delta_init,
    )


def rho(f_old: float, f_new: float, m_old: float, m_new: float) -> float:
    """Actual over predicted reduction; degenerate denominators count as failure."""
    denom = m_old - m_new
    if abs(denom) < RHO_DENOM_TOL:
        return 0.0
    return (f_old - f_new) / denom


def update_ratio(
    tr: TrustRegionState, rho_value: float, grad_norm: float, cfg: TrustRegionConfig
) -> TrustRegionState:
    """Ratio-based radius rule: expand on strong agreement (capped by the
    gradient norm and the max radius), shrink on weak agreement."""
    if tr.status != ACTIVE:
        raise ValueError("cannot update a terminated trust region")
    if rho_value >= cfg.eta1:
        delta = min(cfg.beta2 * tr.delta, cfg.mu_cap * grad_norm, cfg.delta_max)
    elif rho_value < cfg.eta0:
        delta = cfg.beta1 * tr.delta
    else:
        delta = tr.delta
    return replace(tr, delta=delta)


def update_turbo(
    tr: TrustRegionState, improved: bool, cfg: TrustRegionConfig
) -> TrustRegionState:
    """Counter-based rule: double after tau_succ straight improvements,
    halve after tau_fail straight failures."""
    if tr.status != ACTIVE:
        raise ValueError("cannot update a terminated trust region")
    if improved:
        succ, fail = tr.succ_count + 1, 0
    else:
        succ, fail = 0, tr.fail_count + 1
    delta = tr.delta
    if succ >= cfg.tau_succ:
        delta = min(2.0 * delta, cfg.delta_max)
        succ = 0
    if fail >= cfg.tau_fail:
        delta = 0.5 * delta
        fail = 0
    return replace(tr, delta=delta, succ_count=succ, fail_count=fail)


def should_restart(tr: TrustRegionState, grad_norm: float, cfg: TrustRegionConfig) -> bool:
    """True when the radius has collapsed or the model gradient has vanished."""
    return tr.delta < cfg.delta_min or grad_norm < cfg.grad_tol


def recenter(tr: TrustRegionState, point: np.ndarray, value: float) -> TrustRegionState:
    """Move the center to a strictly better observed point."""
    if value >= tr.best_value:
        return tr
    return replace(tr, center=np.asarray(point, dtype=float), best_value=float(value))


def terminate(tr: TrustRegionState) -> TrustRegionState:
    return replace(tr, status=TERMINATED)
