"""Linear regression with standard Cauchy errors.

Parameters are (beta0, beta_1..beta_q, sigma); the generating equation is
y = beta0 + x'beta + sigma * w with w standard Cauchy, so each Jacobian
row is (1, x_1..x_q, w).
"""

from __future__ import annotations

import math

import numpy as np

from .base import DataSubset, Model

_LOG_PI = math.log(math.pi)


class CauchyRegressionModel(Model):
    name = "cauchy_regression"

    def __init__(self, n_covariates: int, rho: float = 0.1):
        self.q = int(n_covariates)
        self.rho = float(rho)
        self.p = self.q + 2
        self.param_names = (
            ("beta0",)
            + tuple(f"beta{i}" for i in range(1, self.q + 1))
            + ("sigma",)
        )

    def _residual_w(self, subset: DataSubset, theta: np.ndarray) -> np.ndarray:
        beta0 = theta[0]
        beta = theta[1 : 1 + self.q]
        sigma = theta[-1]
        return (subset.y - beta0 - subset.x @ beta) / sigma

    def loglik(self, subset: DataSubset, theta: np.ndarray) -> float:
        sigma = theta[-1]
        if sigma <= 0:
            return -math.inf
        w = self._residual_w(subset, theta)
        return float(-subset.n * (_LOG_PI + math.log(sigma)) - np.log1p(w * w).sum())

    def loglik_batch(self, subset: DataSubset, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        y = subset.y
        n = subset.n
        out = np.empty(thetas.shape[0])
        chunk = max(1, int(4_000_000 // max(1, n)))
        for lo in range(0, thetas.shape[0], chunk):
            t = thetas[lo : lo + chunk]
            beta0 = t[:, 0:1]
            betas = t[:, 1 : 1 + self.q]
            sigma = t[:, -1:]
            resid = y[None, :] - beta0 - betas @ subset.x.T
            w = resid / sigma
            out[lo : lo + chunk] = (
                -n * (_LOG_PI + np.log(sigma[:, 0]))
                - np.log1p(w * w).sum(axis=1)
            )
        return out

    def jac_rows(self, subset: DataSubset, theta: np.ndarray) -> np.ndarray:
        w = self._residual_w(subset, theta)
        return np.column_stack([np.ones(subset.n), subset.x, w])

    def in_support(self, theta: np.ndarray) -> bool:
        return (
            len(theta) == self.p
            and bool(np.all(np.isfinite(theta)))
            and theta[-1] > 0.0
        )

    def constrain(self, z: np.ndarray) -> np.ndarray:
        theta = np.asarray(z, dtype=float).copy()
        theta[-1] = math.exp(z[-1])
        return theta

    def unconstrain(self, theta: np.ndarray) -> np.ndarray:
        z = np.asarray(theta, dtype=float).copy()
        z[-1] = math.log(theta[-1])
        return z

    def transform_log_jacobian(self, z: np.ndarray) -> float:
        return float(z[-1])

    def simulate(self, theta: np.ndarray, n: int, seed: int) -> DataSubset:
        rng = np.random.default_rng(seed)
        cov = np.full((self.q, self.q), self.rho)
        np.fill_diagonal(cov, 1.0)
        x = rng.multivariate_normal(np.zeros(self.q), cov, size=n, method="cholesky")
        w = rng.standard_cauchy(n)
        beta0 = theta[0]
        beta = theta[1 : 1 + self.q]
        sigma = theta[-1]
        y = beta0 + x @ beta + sigma * w
        return DataSubset(y=y, x=x)

    def initial_guess(self, subset: DataSubset) -> np.ndarray:
        design = np.column_stack([np.ones(subset.n), subset.x])
        coef, *_ = np.linalg.lstsq(design, subset.y, rcond=None)
        resid = subset.y - design @ coef
        # median |residual| estimates sigma for Cauchy errors
        sigma0 = max(float(np.median(np.abs(resid))), 1e-3)
        return np.concatenate([coef, [sigma0]])
