"""Normal location model with unit variance (one parameter).

Its Jacobian matrix is a column of ones, so the fiducial density is the
likelihood up to a constant.  Small enough for grid-quadrature oracles.
"""

from __future__ import annotations

import math

import numpy as np

from .base import DataSubset, Model

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class NormalLocationModel(Model):
    name = "normal_location"
    p = 1
    param_names = ("mu",)

    def loglik(self, subset: DataSubset, theta: np.ndarray) -> float:
        mu = float(theta[0])
        r = subset.y - mu
        return float(-subset.n * _LOG_SQRT_2PI - 0.5 * np.dot(r, r))

    def loglik_batch(self, subset: DataSubset, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        mu = thetas[:, 0]
        n = subset.n
        sy = float(subset.y.sum())
        syy = float(np.dot(subset.y, subset.y))
        return -n * _LOG_SQRT_2PI - 0.5 * (syy - 2.0 * mu * sy + n * mu**2)

    def jac_rows(self, subset: DataSubset, theta: np.ndarray) -> np.ndarray:
        return np.ones((subset.n, 1))

    def in_support(self, theta: np.ndarray) -> bool:
        return bool(np.all(np.isfinite(theta))) and len(theta) == 1

    def constrain(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float).copy()

    def unconstrain(self, theta: np.ndarray) -> np.ndarray:
        return np.asarray(theta, dtype=float).copy()

    def transform_log_jacobian(self, z: np.ndarray) -> float:
        return 0.0

    def simulate(self, theta: np.ndarray, n: int, seed: int) -> DataSubset:
        rng = np.random.default_rng(seed)
        return DataSubset(y=float(theta[0]) + rng.standard_normal(n))

    def initial_guess(self, subset: DataSubset) -> np.ndarray:
        return np.array([float(subset.y.mean())])
