"""Local quadratic models built from surrogate derivatives.

One model per trust region per outer iteration: the gradient and Hessian
are the posterior-mean derivatives perturbed by a shared draw of the
truncated-normal mixing variable times the standard-deviation derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .gp import GPModel, posterior, posterior_derivatives

_TRUNC_LO = ndtr(-1.0)
_TRUNC_HI = ndtr(1.0)


@dataclass(frozen=True)
class QuadraticModel:
    """m(center + s) = f0 + g.s + 0.5 * s.B.s with symmetric B."""

    center: np.ndarray
    f0: float
    g: np.ndarray
    B: np.ndarray
    lam: float


def sample_lambda(rng: np.random.Generator) -> float:
    """Draw from the standard normal conditioned on (-1, 1), by inverse CDF."""
    u = rng.random()
    x = float(ndtri(_TRUNC_LO + u * (_TRUNC_HI - _TRUNC_LO)))
    # inverse-CDF rounding can touch the endpoints at the extreme u values
    return min(max(x, -1.0 + 1e-12), 1.0 - 1e-12)


def build(model: GPModel, center: np.ndarray, lam: float) -> QuadraticModel:
    """Assemble the quadratic model around a trust-region center.

    g = grad(mu) + lam * grad(sigma); B likewise from the Hessians, then
    symmetrized to wash out floating-point asymmetry.
    """
    if not -1.0 < lam < 1.0:
        raise ValueError("lam must lie strictly inside (-1, 1)")
    center = np.asarray(center, dtype=float)
    f0, _ = posterior(model, center)
    grad_mu, hess_mu, grad_sigma, hess_sigma = posterior_derivatives(model, center)
    g = grad_mu + lam * grad_sigma
    B = hess_mu + lam * hess_sigma
    B = 0.5 * (B + B.T)
    return QuadraticModel(center=center, f0=f0, g=g, B=B, lam=float(lam))


def eval_model(q: QuadraticModel, s: np.ndarray) -> float:
    """Model value at center + s."""
    s = np.asarray(s, dtype=float)
    if s.shape != q.g.shape:
        raise ValueError(f"step must have dimension {q.g.size}")
    return q.f0 + float(np.dot(q.g, s)) + 0.5 * float(s @ q.B @ s)


def eval_model_batch(q: QuadraticModel, S: np.ndarray) -> np.ndarray:
    """Model values for a batch of steps, shape (m,)."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    return q.f0 + S @ q.g + 0.5 * np.einsum("md,de,me->m", S, q.B, S)
