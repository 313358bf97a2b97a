"""Global Gaussian-process surrogate.

Covers dataset bookkeeping (observations standardized to zero mean, unit
variance), MAP hyperparameter fitting under a dimension-scaled LogNormal
lengthscale prior, posterior queries, analytic posterior derivatives up to
second order, and a uniform-error-bound diagnostic report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.stats import qmc

from .kernel import FactorizationError, KernelParams, cross_kernel, gram_and_factor

NOISE_FLOOR = 1e-6
SIGMA_CLAMP = 1e-6

# Generous log-space box for the MAP search; the priors do the real
# regularization, these only keep line searches out of overflow territory.
_LOG_LS_BOUNDS = (math.log(1e-4), math.log(1e3))
_LOG_SF2_BOUNDS = (math.log(1e-6), math.log(1e6))


@dataclass(frozen=True)
class Dataset:
    """Unit-box sample points with raw and standardized observations."""

    X: np.ndarray
    y_raw: np.ndarray
    y_std: np.ndarray
    y_mean: float
    y_scale: float
    best_index: int

    @classmethod
    def from_observations(cls, X: np.ndarray, y: np.ndarray) -> "Dataset":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if X.shape[0] != y.size or y.size < 1:
            raise ValueError("X and y must hold the same positive number of rows")
        if np.any(X < 0.0) or np.any(X > 1.0):
            raise ValueError("all rows of X must lie in the unit box")
        y_mean = float(np.mean(y))
        y_scale = float(np.std(y))
        if y_scale < 1e-12:
            y_scale = 1.0
        y_std = (y - y_mean) / y_scale
        return cls(
            X=X,
            y_raw=y,
            y_std=y_std,
            y_mean=y_mean,
            y_scale=y_scale,
            best_index=int(np.argmin(y)),
        )

    def append(self, X_new: np.ndarray, y_new: np.ndarray) -> "Dataset":
        X_new = np.atleast_2d(np.asarray(X_new, dtype=float))
        y_new = np.atleast_1d(np.asarray(y_new, dtype=float))
        return Dataset.from_observations(
            np.vstack([self.X, X_new]), np.concatenate([self.y_raw, y_new])
        )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def best_point(self) -> np.ndarray:
        return self.X[self.best_index]

    @property
    def best_value(self) -> float:
        return float(self.y_raw[self.best_index])


@dataclass(frozen=True)
class GPModel:
    """Fitted surrogate: hyperparameters plus a cached gram factorization.

    Immutable after construction; posterior and derivative queries are safe
    to run concurrently.
    """

    params: KernelParams
    noise_var: float
    train_X: np.ndarray
    alpha: np.ndarray
    chol_lower: np.ndarray
    jitter: float
    y_mean: float
    y_scale: float

    @property
    def n(self) -> int:
        return self.train_X.shape[0]

    @property
    def dim(self) -> int:
        return self.train_X.shape[1]


@dataclass(frozen=True)
class UniformBoundReport:
    """Pieces of the high-probability uniform error bound for one fit.

    ``lipschitz_f_hat`` is an empirical proxy (max sampled posterior-mean
    gradient norm), not the true objective Lipschitz constant.
    """

    tau: float
    delta: float
    covering_count: int
    beta: float
    lipschitz_mu: float
    omega_sigma: float
    lipschitz_f_hat: float
    gamma: float

    def as_dict(self) -> dict:
        return {
            "tau": self.tau,
            "delta": self.delta,
            "covering_count": self.covering_count,
            "beta": self.beta,
            "lipschitz_mu": self.lipschitz_mu,
            "omega_sigma": self.omega_sigma,
            "lipschitz_f_hat": self.lipschitz_f_hat,
            "gamma": self.gamma,
        }


def prior_median_lengthscale(dim: int) -> float:
    """Median of the dimension-scaled LogNormal lengthscale prior."""
    return math.exp(-4.0 + math.log(dim) / 2.0)


def make_gp(data: Dataset, params: KernelParams, noise_var: float) -> GPModel:
    """Assemble a model with given hyperparameters (no fitting)."""
    A, L, jitter = gram_and_factor(params, data.X, noise_var)
    alpha = scipy.linalg.cho_solve((L, True), data.y_std, check_finite=False)
    return GPModel(
        params=params,
        noise_var=float(noise_var),
        train_X=data.X,
        alpha=alpha,
        chol_lower=L,
        jitter=jitter,
        y_mean=data.y_mean,
        y_scale=data.y_scale,
    )


def _log_prior_and_grad(theta: np.ndarray, dim: int) -> tuple[float, np.ndarray]:
    # theta = (log l_1..D, log sf2, log sn2); unit-variance normal priors in
    # log space: lengthscales centered at -4 + ln(D)/2, signal at 0, noise at -6.
    mu = np.concatenate([np.full(dim, -4.0 + math.log(dim) / 2.0), [0.0], [-6.0]])
    r = theta - mu
    return -0.5 * float(np.dot(r, r)), -r


def _neg_map_objective(
    theta: np.ndarray, sqdist_cols: list[np.ndarray], y: np.ndarray, dim: int
) -> tuple[float, np.ndarray]:
    """Negative (log marginal likelihood + log prior) and its gradient."""
    n = y.size
    log_ls = theta[:dim]
    sf2 = math.exp(theta[dim])
    sn2 = math.exp(theta[dim + 1])
    inv_l2 = np.exp(-2.0 * log_ls)

    sq = np.zeros((n, n))
    for d in range(dim):
        sq += sqdist_cols[d] * inv_l2[d]
    Kn = sf2 * np.exp(-0.5 * sq)
    A = Kn + sn2 * np.eye(n)
    try:
        L = scipy.linalg.cholesky(A, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError:
        return 1e25, np.zeros_like(theta)

    alpha = scipy.linalg.cho_solve((L, True), y, check_finite=False)
    lml = (
        -0.5 * float(np.dot(y, alpha))
        - float(np.sum(np.log(np.diag(L))))
        - 0.5 * n * math.log(2.0 * math.pi)
    )
    lp, lp_grad = _log_prior_and_grad(theta, dim)

    A_inv = scipy.linalg.cho_solve((L, True), np.eye(n), check_finite=False)
    P = np.outer(alpha, alpha) - A_inv
    W = P * Kn
    grad = np.empty_like(theta)
    for d in range(dim):
        grad[d] = 0.5 * float(np.sum(W * sqdist_cols[d])) * inv_l2[d]
    grad[dim] = 0.5 * float(np.sum(W))
    grad[dim + 1] = 0.5 * sn2 * float(np.trace(P))
    grad += lp_grad
    return -(lml + lp), -grad


def _draw_start(rng: np.random.Generator, dim: int, log_noise_floor: float) -> np.ndarray:
    theta = np.empty(dim + 2)
    theta[:dim] = rng.normal(-4.0 + math.log(dim) / 2.0, 1.0, size=dim)
    theta[dim] = rng.normal(0.0, 1.0)
    theta[dim + 1] = max(rng.normal(-6.0, 1.0), log_noise_floor)
    return theta


def fit(
    data: Dataset,
    dim: int,
    rng: np.random.Generator,
    n_starts: int = 5,
    init_params: tuple[KernelParams, float] | None = None,
    noise_floor: float = NOISE_FLOOR,
    max_iter: int = 200,
) -> GPModel:
    """MAP-fit the surrogate on standardized observations.

    Multi-start L-BFGS in log-parameter space: the first start sits at the
    prior medians, the rest are prior draws (capped at ``max_iter``
    iterations each, gradient tolerance 1e-5). When ``init_params`` is
    given (warm refits inside the optimizer loop) it replaces one random
    start. Degenerate data (all observations identical) short-circuits to
    the prior-median model.
    """
    if data.dim != dim:
        raise ValueError(f"dataset dimension {data.dim} != dim {dim}")
    if data.n < 2:
        raise ValueError("need at least two observations to fit")

    log_noise_floor = math.log(noise_floor)
    median = np.concatenate(
        [np.full(dim, -4.0 + math.log(dim) / 2.0), [0.0], [max(-6.0, log_noise_floor)]]
    )
    if not np.any(data.y_std != 0.0):
        params = KernelParams(np.exp(median[:dim]), math.exp(median[dim]))
        return make_gp(data, params, math.exp(median[dim + 1]))

    # The marginal likelihood is flat wherever the gram matrix degenerates to
    # the identity (lengthscales far below the data spacing), so a start with
    # wide lengthscales is needed to reach the informative basin at all.
    wide = np.concatenate([np.zeros(dim), [0.0], [max(-6.0, log_noise_floor)]])
    starts = [median, wide]
    if init_params is not None:
        prev_p, prev_noise = init_params
        starts.append(
            np.concatenate(
                [
                    np.log(prev_p.lengthscales),
                    [math.log(prev_p.signal_variance)],
                    [max(math.log(prev_noise), log_noise_floor)],
                ]
            )
        )
    while len(starts) < n_starts:
        starts.append(_draw_start(rng, dim, log_noise_floor))

    sqdist_cols = [
        (data.X[:, d : d + 1] - data.X[:, d : d + 1].T) ** 2 for d in range(dim)
    ]
    bounds = (
        [_LOG_LS_BOUNDS] * dim + [_LOG_SF2_BOUNDS] + [(log_noise_floor, math.log(1e2))]
    )

    best_theta, best_val = None, np.inf
    for theta0 in starts:
        res = scipy.optimize.minimize(
            _neg_map_objective,
            np.clip(theta0, [b[0] for b in bounds], [b[1] for b in bounds]),
            args=(sqdist_cols, data.y_std, dim),
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": max_iter, "gtol": 1e-5},
        )
        if res.fun < best_val:
            best_val, best_theta = res.fun, res.x
    if best_theta is None:
        raise FactorizationError("all MAP starts failed")

    params = KernelParams(np.exp(best_theta[:dim]), math.exp(best_theta[dim]))
    return make_gp(data, params, math.exp(best_theta[dim + 1]))


def map_objective(model: GPModel, data: Dataset) -> float:
    """Log marginal likelihood + log prior of a model on its training data."""
    dim = data.dim
    theta = np.concatenate(
        [
            np.log(model.params.lengthscales),
            [math.log(model.params.signal_variance)],
            [math.log(max(model.noise_var, 1e-300))],
        ]
    )
    sqdist_cols = [
        (data.X[:, d : d + 1] - data.X[:, d : d + 1].T) ** 2 for d in range(dim)
    ]
    val, _ = _neg_map_objective(theta, sqdist_cols, data.y_std, dim)
    return -val


def posterior(model: GPModel, x: np.ndarray) -> tuple[float, float]:
    """Posterior mean and standard deviation at one point, in raw units."""
    x = np.asarray(x, dtype=float)
    k_star = cross_kernel(model.params, x[None, :], model.train_X)[0]
    mu_std = float(np.dot(k_star, model.alpha))
    w = scipy.linalg.solve_triangular(
        model.chol_lower, k_star, lower=True, check_finite=False
    )
    var_std = max(model.params.signal_variance - float(np.dot(w, w)), 0.0)
    return model.y_mean + model.y_scale * mu_std, model.y_scale * math.sqrt(var_std)


def posterior_batch(model: GPModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and standard deviations at many points (raw units)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    K_star = cross_kernel(model.params, X, model.train_X)
    mu_std = K_star @ model.alpha
    W = scipy.linalg.solve_triangular(
        model.chol_lower, K_star.T, lower=True, check_finite=False
    )
    var_std = np.maximum(model.params.signal_variance - np.sum(W**2, axis=0), 0.0)
    return model.y_mean + model.y_scale * mu_std, model.y_scale * np.sqrt(var_std)


def posterior_derivatives(
    model: GPModel, x: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Gradients and Hessians of the posterior mean and standard deviation.

    All outputs are in raw units. Near training points the standard
    deviation is clamped at 1e-6 (standardized) before dividing, so the
    sigma derivatives there are a documented smooth approximation.
    """
    x = np.asarray(x, dtype=float)
    p = model.params
    inv_l2 = 1.0 / p.lengthscales**2
    diff = x[None, :] - model.train_X  # (n, D)
    M = diff * inv_l2[None, :]
    k_vec = p.signal_variance * np.exp(-0.5 * np.sum(diff * M, axis=1))
    J = -k_vec[:, None] * M  # rows: kernel gradient wrt x at each datum

    def weighted_hess_sum(c: np.ndarray) -> np.ndarray:
        # sum_i c_i * d^2 k(x, x_i) / dx dx^T
        ck = c * k_vec
        return (M * ck[:, None]).T @ M - np.sum(ck) * np.diag(inv_l2)

    grad_mu = J.T @ model.alpha
    hess_mu = weighted_hess_sum(model.alpha)

    w = scipy.linalg.solve_triangular(
        model.chol_lower, k_vec, lower=True, check_finite=False
    )
    v = scipy.linalg.solve_triangular(
        model.chol_lower.T, w, lower=False, check_finite=False
    )
    var_std = max(p.signal_variance - float(np.dot(w, w)), 0.0)
    sigma_clamped = max(math.sqrt(var_std), SIGMA_CLAMP)

    grad_var = -2.0 * (J.T @ v)
    U = scipy.linalg.solve_triangular(model.chol_lower, J, lower=True, check_finite=False)
    hess_var = -2.0 * (U.T @ U + weighted_hess_sum(v))

    grad_sigma = grad_var / (2.0 * sigma_clamped)
    hess_sigma = (hess_var - 2.0 * np.outer(grad_sigma, grad_sigma)) / (2.0 * sigma_clamped)

    s = model.y_scale
    return s * grad_mu, s * hess_mu, s * grad_sigma, s * hess_sigma


def posterior_mean_gradients(model: GPModel, X: np.ndarray) -> np.ndarray:
    """Posterior-mean gradients at many points (raw units), shape (m, D)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    p = model.params
    inv_l2 = 1.0 / p.lengthscales**2
    diff = X[:, None, :] - model.train_X[None, :, :]  # (m, n, D)
    M = diff * inv_l2[None, None, :]
    K = p.signal_variance * np.exp(-0.5 * np.einsum("mnd,mnd->mn", diff, M))
    grads = -np.einsum("mn,mnd,n->md", K, M, model.alpha)
    return model.y_scale * grads


def kernel_lipschitz_constant(p: KernelParams) -> float:
    """Analytic Lipschitz bound of the kernel in its first argument.

    The gradient norm of the ARD squared-exponential peaks at scaled
    distance 1, giving sigma_f^2 * exp(-1/2) / min(lengthscale).
    """
    return p.signal_variance * math.exp(-0.5) / float(np.min(p.lengthscales))


def uniform_bound(
    model: GPModel, data: Dataset, tau: float, delta: float
) -> UniformBoundReport:
    """Assemble the uniform-bound coefficients for the current fit.

    The unit box is covered with infinity-norm balls of radius tau, so the
    covering count has the closed form ceil(1/(2 tau))^D; beta is computed
    in log space to survive large D.
    """
    if not 0.0 < tau <= 0.5:
        raise ValueError("tau must lie in (0, 0.5]")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")

    dim = model.dim
    n = model.n
    per_axis = math.ceil(1.0 / (2.0 * tau))
    covering_count = per_axis**dim
    beta = 2.0 * (dim * math.log(per_axis) - math.log(delta))

    lip_k = kernel_lipschitz_constant(model.params)
    lip_mu = model.y_scale * lip_k * math.sqrt(n) * float(np.linalg.norm(model.alpha))

    smallest_sv = scipy.linalg.svdvals(model.chol_lower)[-1]
    a_inv_norm = 1.0 / smallest_sv**2
    omega = model.y_scale * math.sqrt(
        2.0 * tau * lip_k * (1.0 + n * a_inv_norm * model.params.signal_variance)
    )

    sampler = qmc.Sobol(d=dim, scramble=False)
    probe = sampler.random(256)
    lip_f_hat = float(np.max(np.linalg.norm(posterior_mean_gradients(model, probe), axis=1)))

    gamma = (lip_mu + lip_f_hat) * tau + math.sqrt(beta) * omega
    return UniformBoundReport(
        tau=float(tau),
        delta=float(delta),
        covering_count=covering_count,
        beta=beta,
        lipschitz_mu=lip_mu,
        omega_sigma=omega,
        lipschitz_f_hat=lip_f_hat,
        gamma=gamma,
    )


def _scaled_sq_dists(p: KernelParams, X: np.ndarray, X2: np.ndarray) -> np.ndarray:
    A = X / p.lengthscales
    B = X2 / p.lengthscales
    sq = np.sum(A**2, axis=1)[:, None] + np.sum(B**2, axis=1)[None, :] - 2.0 * A @ B.T
    np.maximum(sq, 0.0, out=sq)
    return sq


def sample_posterior_paths(
    model: GPModel,
    points: np.ndarray,
    n_paths: int,
    rng: np.random.Generator,
    jitter: float = 1e-8,
) -> np.ndarray:
    """Joint posterior function draws over a finite point set, raw units.

    Returns an (n_paths, m) array. Exact at the resolution of ``points``:
    the joint covariance is the posterior covariance matrix plus jitter.
    When every off-diagonal covariance entry is provably below 1e-12 of the
    signal variance (points mutually far apart in lengthscale units), the
    draws are taken independently, which is the same distribution to
    machine precision at a fraction of the cost.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    p = model.params
    sf2 = p.signal_variance
    K_star = cross_kernel(p, points, model.train_X)  # (m, n)
    mu_std = K_star @ model.alpha
    W = scipy.linalg.solve_triangular(
        model.chol_lower, K_star.T, lower=True, check_finite=False
    )  # (n, m)
    var_std = np.maximum(sf2 - np.sum(W**2, axis=0), 0.0) + jitter * sf2
    z = rng.standard_normal((points.shape[0], n_paths))

    sq = _scaled_sq_dists(p, points, points)
    sq[np.diag_indices_from(sq)] = np.inf
    min_pair = float(np.min(sq)) if points.shape[0] > 1 else np.inf
    # prior cross-covariance bound and explained-covariance bound, both
    # required below 1e-12 * sf2 for the independent fast path
    k_pair_max = sf2 * math.exp(-0.5 * min(min_pair, 1e3))
    k_star_max = float(np.max(K_star)) if K_star.size else 0.0
    noise_floor = model.noise_var + model.jitter
    explained_max = model.n * k_star_max**2 / max(noise_floor, 1e-300)
    if max(k_pair_max, explained_max) < 1e-12 * sf2:
        draws_std = mu_std[None, :] + np.sqrt(var_std)[None, :] * z.T
        return model.y_mean + model.y_scale * draws_std

    np.fill_diagonal(sq, 0.0)
    cov = sf2 * np.exp(-0.5 * sq) - W.T @ W
    cov[np.diag_indices_from(cov)] += jitter * sf2
    L = None
    scale = 1.0
    while L is None:
        try:
            L = scipy.linalg.cholesky(cov, lower=True, check_finite=False)
        except scipy.linalg.LinAlgError:
            scale *= 10.0
            if scale > 1e8:
                raise FactorizationError("posterior covariance not factorizable")
            cov[np.diag_indices_from(cov)] += (
                (scale - scale / 10.0) * jitter * sf2
            )
    draws_std = mu_std[None, :] + (L @ z).T
    return model.y_mean + model.y_scale * draws_std


__all__ = [
    "Dataset",
    "GPModel",
    "UniformBoundReport",
    "fit",
    "make_gp",
    "map_objective",
    "posterior",
    "posterior_batch",
    "posterior_derivatives",
    "posterior_mean_gradients",
    "prior_median_lengthscale",
    "kernel_lipschitz_constant",
    "uniform_bound",
    "sample_posterior_paths",
]
