"""ARD squared-exponential kernel with analytic derivatives in the first
argument, and jitter-stabilized gram factorization.

The squared-exponential is the only kernel offered: the surrogate needs
exact posterior Hessians, which require a kernel with four continuous
derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

JITTER_START = 1e-8
JITTER_MAX = 1e-2


class FactorizationError(RuntimeError):
    """Gram matrix stayed indefinite after exhausting jitter escalation."""


@dataclass(frozen=True)
class KernelParams:
    lengthscales: np.ndarray
    signal_variance: float

    def __post_init__(self):
        ls = np.asarray(self.lengthscales, dtype=float)
        object.__setattr__(self, "lengthscales", ls)
        if ls.ndim != 1 or ls.size < 1:
            raise ValueError("lengthscales must be a 1-d vector")
        if not (np.all(ls > 0.0) and np.all(np.isfinite(ls))):
            raise ValueError("lengthscales must be strictly positive and finite")
        if not (self.signal_variance > 0.0 and np.isfinite(self.signal_variance)):
            raise ValueError("signal_variance must be strictly positive and finite")

    @property
    def dim(self) -> int:
        return self.lengthscales.size


def _check_pair(p: KernelParams, x: np.ndarray, x2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != (p.dim,) or x2.shape != (p.dim,):
        raise ValueError(f"points must have dimension {p.dim}")
    return x, x2


def kernel_value(p: KernelParams, x: np.ndarray, x2: np.ndarray) -> float:
    """sigma_f^2 * exp(-0.5 * sum_d (x_d - x2_d)^2 / l_d^2)."""
    x, x2 = _check_pair(p, x, x2)
    z = (x - x2) / p.lengthscales
    return float(p.signal_variance * np.exp(-0.5 * np.dot(z, z)))


def kernel_derivatives(
    p: KernelParams, x: np.ndarray, x2: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Kernel value plus gradient and Hessian with respect to the first argument.

    Returns
    -------
    value : float
    grad : (D,) array, grad_d = -k * (x_d - x2_d) / l_d^2
    hess : (D, D) array,
        hess_de = k * ((x_d - x2_d)(x_e - x2_e) / (l_d^2 l_e^2) - delta_de / l_d^2)
    """
    x, x2 = _check_pair(p, x, x2)
    inv_sq = 1.0 / p.lengthscales**2
    w = (x - x2) * inv_sq
    k = kernel_value(p, x, x2)
    grad = -k * w
    hess = k * (np.outer(w, w) - np.diag(inv_sq))
    return k, grad, hess


def cross_kernel(p: KernelParams, X: np.ndarray, X2: np.ndarray) -> np.ndarray:
    """Kernel matrix between the rows of X (n x D) and X2 (m x D)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    X2 = np.atleast_2d(np.asarray(X2, dtype=float))
    A = X / p.lengthscales
    B = X2 / p.lengthscales
    sq = np.sum(A**2, axis=1)[:, None] + np.sum(B**2, axis=1)[None, :] - 2.0 * A @ B.T
    np.maximum(sq, 0.0, out=sq)
    return p.signal_variance * np.exp(-0.5 * sq)


def gram_matrix(p: KernelParams, X: np.ndarray, noise_var: float) -> np.ndarray:
    """K + noise_var*I + jitter*I, with jitter escalated until factorizable."""
    K, _, _ = gram_and_factor(p, X, noise_var)
    return K


def gram_and_factor(
    p: KernelParams, X: np.ndarray, noise_var: float
) -> tuple[np.ndarray, np.ndarray, float]:
    """Form K + noise_var*I and its lower Cholesky factor, escalating jitter.

    Jitter starts at 1e-8 * sigma_f^2 and is multiplied by 10 on each
    factorization failure, up to 1e-2 * sigma_f^2; beyond that a
    FactorizationError is raised.

    Returns (jittered matrix, lower factor, jitter used).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if noise_var < 0.0:
        raise ValueError("noise_var must be nonnegative")
    K = cross_kernel(p, X, X)
    K[np.diag_indices_from(K)] = p.signal_variance + noise_var
    jitter = JITTER_START * p.signal_variance
    eye = np.eye(K.shape[0])
    while True:
        try:
            L = scipy.linalg.cholesky(K + jitter * eye, lower=True, check_finite=False)
            return K + jitter * eye, L, jitter
        except scipy.linalg.LinAlgError:
            jitter *= 10.0
            if jitter > JITTER_MAX * p.signal_variance:
                raise FactorizationError(
                    f"gram matrix not positive definite at jitter {jitter:.1e}"
                ) from None
