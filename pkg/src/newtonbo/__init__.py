"""Trust-region Bayesian optimization driven by Newton steps on a global
Gaussian-process surrogate, with quasirandom and CMA-ES baselines."""

from .baselines import BaselineConfig, run_cmaes, run_sobol
from .gp import Dataset, GPModel, fit, posterior, posterior_derivatives, uniform_bound
from .kernel import KernelParams
from .local_model import QuadraticModel, build, eval_model, sample_lambda
from .objectives import Box, Objective, evaluate, make_objective
from .optimizer import OptimizerConfig, RunRecord, init_centers, run
from .qp_solver import CmaConfig, StepBox, cauchy_point, solve
from .restart import RestartStrategy, initial_design, restart_point
from .trust_region import (
    TrustRegionConfig,
    TrustRegionState,
    rho,
    should_restart,
    update_ratio,
    update_turbo,
)

__all__ = [
    "BaselineConfig",
    "Box",
    "CmaConfig",
    "Dataset",
    "GPModel",
    "KernelParams",
    "Objective",
    "OptimizerConfig",
    "QuadraticModel",
    "RestartStrategy",
    "RunRecord",
    "StepBox",
    "TrustRegionConfig",
    "TrustRegionState",
    "build",
    "cauchy_point",
    "eval_model",
    "evaluate",
    "fit",
    "init_centers",
    "initial_design",
    "make_objective",
    "posterior",
    "posterior_derivatives",
    "restart_point",
    "rho",
    "run",
    "run_cmaes",
    "run_sobol",
    "sample_lambda",
    "should_restart",
    "solve",
    "uniform_bound",
    "update_ratio",
    "update_turbo",
]

__version__ = "0.1.0"
