"""Minimal CMA-ES core with an ask/tell interface.

Shared by the trust-region subproblem solver and the evolutionary baseline
so there is exactly one tested strategy implementation. Box handling is the
caller's job: candidates returned by ``ask`` are unconstrained; whatever
points are passed to ``tell`` (typically projected onto the feasible box)
drive the distribution update.
"""

from __future__ import annotations

import math

import numpy as np


def default_popsize(dim: int) -> int:
    return 4 + int(3.0 * math.log(dim))


class CmaEs:
    """Covariance matrix adaptation evolution strategy (minimization)."""

    def __init__(
        self,
        x0: np.ndarray,
        sigma0: float,
        rng: np.random.Generator,
        popsize: int | None = None,
        tol_fun: float = 1e-10,
    ):
        x0 = np.asarray(x0, dtype=float)
        dim = x0.size
        if sigma0 <= 0.0:
            raise ValueError("sigma0 must be positive")
        lam = default_popsize(dim) if popsize is None else int(popsize)
        if lam < 4:
            raise ValueError("population must be at least 4")

        mu = lam // 2
        w = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
        w /= np.sum(w)
        mueff = 1.0 / float(np.sum(w**2))

        self.dim = dim
        self.lam = lam
        self.mu = mu
        self.weights = w
        self.mueff = mueff
        self.rng = rng
        self.tol_fun = tol_fun

        self.cc = (4.0 + mueff / dim) / (dim + 4.0 + 2.0 * mueff / dim)
        self.cs = (mueff + 2.0) / (dim + mueff + 5.0)
        self.c1 = 2.0 / ((dim + 1.3) ** 2 + mueff)
        self.cmu = min(
            1.0 - self.c1,
            2.0 * (mueff - 2.0 + 1.0 / mueff) / ((dim + 2.0) ** 2 + mueff),
        )
        self.damps = 1.0 + 2.0 * max(0.0, math.sqrt((mueff - 1.0) / (dim + 1.0)) - 1.0) + self.cs
        self.chi_n = math.sqrt(dim) * (1.0 - 1.0 / (4.0 * dim) + 1.0 / (21.0 * dim**2))

        self.mean = x0.copy()
        self.sigma = float(sigma0)
        self.C = np.eye(dim)
        self.p_c = np.zeros(dim)
        self.p_s = np.zeros(dim)
        self.gen = 0
        self.n_evals = 0
        self.converged = False

        self._eig_B = np.eye(dim)
        self._eig_d = np.ones(dim)
        self._eig_stale_gens = 0
        # eigendecomposition cadence per Hansen: cheap enough to skip between
        self._eig_gap = max(1, int(1.0 / ((self.c1 + self.cmu) * dim * 10.0)))

    def _update_eigensystem(self) -> None:
        self.C = 0.5 * (self.C + self.C.T)
        vals, vecs = np.linalg.eigh(self.C)
        vals = np.maximum(vals, np.max(vals) * 1e-14 if np.max(vals) > 0 else 1e-30)
        self._eig_B = vecs
        self._eig_d = np.sqrt(vals)
        self._eig_stale_gens = 0

    def ask(self) -> np.ndarray:
        """Sample a fresh population, shape (popsize, dim)."""
        if self._eig_stale_gens >= self._eig_gap or self.gen == 0:
            self._update_eigensystem()
        z = self.rng.standard_normal((self.lam, self.dim))
        y = (z * self._eig_d) @ self._eig_B.T
        return self.mean + self.sigma * y

    def tell(self, X: np.ndarray, f: np.ndarray) -> None:
        """Rank the evaluated points and update mean, paths, C, and sigma."""
        X = np.asarray(X, dtype=float)
        f = np.asarray(f, dtype=float)
        order = np.argsort(f, kind="stable")
        X_sel = X[order[: self.mu]]
        y_sel = (X_sel - self.mean) / self.sigma

        mean_old = self.mean
        self.mean = self.weights @ X_sel
        y_w = (self.mean - mean_old) / self.sigma

        c_inv_half_yw = self._eig_B @ ((self._eig_B.T @ y_w) / self._eig_d)
        self.p_s = (1.0 - self.cs) * self.p_s + math.sqrt(
            self.cs * (2.0 - self.cs) * self.mueff
        ) * c_inv_half_yw
        denom = math.sqrt(1.0 - (1.0 - self.cs) ** (2.0 * (self.gen + 1)))
        h_sig = float(
            np.linalg.norm(self.p_s) / denom / self.chi_n < 1.4 + 2.0 / (self.dim + 1.0)
        )
        self.p_c = (1.0 - self.cc) * self.p_c + h_sig * math.sqrt(
            self.cc * (2.0 - self.cc) * self.mueff
        ) * y_w

        rank_mu = (y_sel * self.weights[:, None]).T @ y_sel
        self.C = (
            (1.0 - self.c1 - self.cmu) * self.C
            + self.c1
            * (np.outer(self.p_c, self.p_c) + (1.0 - h_sig) * self.cc * (2.0 - self.cc) * self.C)
            + self.cmu * rank_mu
        )

        self.sigma *= math.exp(
            (self.cs / self.damps) * (np.linalg.norm(self.p_s) / self.chi_n - 1.0)
        )
        self.sigma = min(self.sigma, 1e8)

        self.gen += 1
        self.n_evals += len(f)
        self._eig_stale_gens += 1
        if float(np.max(f) - np.min(f)) < self.tol_fun or self.sigma < 1e-14:
            self.converged = True
