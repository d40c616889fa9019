"""Peaks-over-threshold model for extreme-percentile inference.

Observations above a fixed threshold u follow a generalized Pareto
distribution with scale ``sigma_g`` and shape ``xi``; the exceedance rate
``zeta`` enters through its binomial fiducial contribution (a Jeffreys-type
[zeta(1-zeta)]^(-1/2) factor folded into the Jacobian rows of the
non-exceedances).  High quantiles of the underlying distribution are then
functions of (sigma_g, xi, zeta), see :func:`gpd_tail_quantile`.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit, logit

from .base import DataSubset, Model

_XI_ZERO_TOL = 1e-8


def gpd_tail_quantile(
    theta: np.ndarray, prob: float, threshold: float
) -> float:
    """Quantile of the underlying distribution at level ``prob``.

    Valid only above the threshold regime, i.e. for prob > 1 - zeta.
    """
    sigma_g, xi, zeta = float(theta[0]), float(theta[1]), float(theta[2])
    if not 0.0 < prob < 1.0:
        raise ValueError("prob must be in (0, 1)")
    ratio = (1.0 - prob) / zeta
    if ratio > 1.0 + 1e-9:
        raise ValueError(
            f"quantile below threshold regime: prob={prob} <= {1.0 - zeta}"
        )
    if abs(xi) < _XI_ZERO_TOL:
        return threshold - sigma_g * math.log(ratio)
    return threshold + (sigma_g / xi) * (ratio ** (-xi) - 1.0)


class GpdTailModel(Model):
    name = "gpd_tail"
    p = 3
    param_names = ("sigma_g", "xi", "zeta")

    def __init__(self, threshold: float):
        self.threshold = float(threshold)

    def _split(self, subset: DataSubset) -> tuple[np.ndarray, int, int]:
        z = subset.y - self.threshold
        exceed = z[z > 0.0]
        return exceed, exceed.size, subset.n - exceed.size

    def _gpd_loglik_terms(self, z: np.ndarray, sigma: float, xi: float):
        """Per-exceedance GPD log-density; None when outside support."""
        if abs(xi) < _XI_ZERO_TOL:
            return -math.log(sigma) - z / sigma
        arg = 1.0 + xi * z / sigma
        if np.any(arg <= 0.0):
            return None
        return -math.log(sigma) - (1.0 + 1.0 / xi) * np.log(arg)

    def loglik(self, subset: DataSubset, theta: np.ndarray) -> float:
        sigma, xi, zeta = theta
        if sigma <= 0 or not 0.0 < zeta < 1.0:
            return -math.inf
        exceed, m, n_below = self._split(subset)
        total = m * math.log(zeta) + n_below * math.log1p(-zeta)
        if m:
            terms = self._gpd_loglik_terms(exceed, sigma, xi)
            if terms is None:
                return -math.inf
            total += float(np.sum(terms))
        return total

    def loglik_batch(self, subset: DataSubset, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        exceed, m, n_below = self._split(subset)
        sigma = thetas[:, 0]
        xi = thetas[:, 1]
        zeta = thetas[:, 2]
        out = m * np.log(zeta) + n_below * np.log1p(-zeta)
        if m:
            arg = 1.0 + xi[:, None] * exceed[None, :] / sigma[:, None]
            near_zero = np.abs(xi) < _XI_ZERO_TOL
            with np.errstate(divide="ignore", invalid="ignore"):
                body = -(1.0 + 1.0 / xi[:, None]) * np.log(arg)
                body[near_zero] = -(exceed[None, :] / sigma[near_zero, None])
                gpd_part = np.where(arg > 0.0, body, -np.inf).sum(axis=1)
            out += gpd_part - m * np.log(sigma)
        out[(sigma <= 0) | (zeta <= 0) | (zeta >= 1)] = -np.inf
        return out

    def jac_rows(self, subset: DataSubset, theta: np.ndarray) -> np.ndarray:
        sigma, xi, zeta = theta
        exceed, m, n_below = self._split(subset)
        rows = np.zeros((subset.n, 3))
        if m:
            z = exceed
            if abs(xi) < _XI_ZERO_TOL:
                d_sigma = -z / sigma
                d_xi = -z * z / (2.0 * sigma)
            else:
                ell = np.log1p(xi * z / sigma)
                d_sigma = -z / sigma
                d_xi = z / xi - (sigma + xi * z) * ell / (xi * xi)
            d_zeta = -(sigma + xi * z) / zeta
            rows[:m, 0] = d_sigma
            rows[:m, 1] = d_xi
            rows[:m, 2] = d_zeta
        # Below-threshold rows carry only the exceedance-rate information.
        rows[m:, 2] = 1.0 / math.sqrt(zeta * (1.0 - zeta))
        return rows

    def in_support(self, theta: np.ndarray) -> bool:
        if len(theta) != 3 or not np.all(np.isfinite(theta)):
            return False
        sigma, xi, zeta = theta
        return sigma > 0.0 and 0.0 < zeta < 1.0

    def constrain(self, z: np.ndarray) -> np.ndarray:
        return np.array([math.exp(z[0]), z[1], expit(z[2])])

    def unconstrain(self, theta: np.ndarray) -> np.ndarray:
        return np.array([math.log(theta[0]), theta[1], logit(theta[2])])

    def transform_log_jacobian(self, z: np.ndarray) -> float:
        zeta = expit(z[2])
        return float(z[0] + math.log(zeta) + math.log1p(-zeta))

    def simulate(self, theta: np.ndarray, n: int, seed: int) -> DataSubset:
        sigma, xi, zeta = theta
        rng = np.random.default_rng(seed)
        u = self.threshold
        is_exceed = rng.random(n) < zeta
        body = rng.uniform(min(0.0, u - 1.0), u, size=n)
        v = rng.random(n)
        if abs(xi) < _XI_ZERO_TOL:
            tail_z = -sigma * np.log1p(-v)
        else:
            tail_z = sigma * ((1.0 - v) ** (-xi) - 1.0) / xi
        y = np.where(is_exceed, u + tail_z, body)
        return DataSubset(y=y)

    def initial_guess(self, subset: DataSubset) -> np.ndarray:
        exceed, m, n_below = self._split(subset)
        n = subset.n
        zeta0 = min(max(m / max(n, 1), 1.0 / (n + 2)), 1.0 - 1.0 / (n + 2))
        if m >= 2:
            e = float(exceed.mean())
            v = float(exceed.var())
            if v > 0:
                xi0 = 0.5 * (1.0 - e * e / v)
                sigma0 = 0.5 * e * (1.0 + e * e / v)
            else:
                xi0, sigma0 = 0.0, max(e, 1e-3)
        else:
            xi0, sigma0 = 0.1, 1.0
        xi0 = float(np.clip(xi0, -0.4, 0.9))
        return np.array([max(sigma0, 1e-3), xi0, zeta0])
