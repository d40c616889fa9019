"""Two-component normal mixture with known unit variance.

Parameters are (mu1, mu2, gamma) with mu1 < mu2 for identifiability and
gamma in (0, 1).  The sampler works on (mu1, log(mu2 - mu1), logit gamma).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit, log_ndtr, logit, ndtr  # noqa: F401

from .base import DataSubset, Model

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _log_phi(z: np.ndarray) -> np.ndarray:
    return -0.5 * z * z - _LOG_SQRT_2PI


class NormalMixtureModel(Model):
    name = "mixture"
    p = 3
    param_names = ("mu1", "mu2", "gamma")

    def _log_density_terms(self, y: np.ndarray, theta: np.ndarray) -> np.ndarray:
        mu1, mu2, gamma = theta
        return np.logaddexp(
            math.log(gamma) + _log_phi(y - mu1),
            math.log1p(-gamma) + _log_phi(y - mu2),
        )

    def loglik(self, subset: DataSubset, theta: np.ndarray) -> float:
        return float(self._log_density_terms(subset.y, theta).sum())

    def loglik_batch(self, subset: DataSubset, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        y = subset.y
        out = np.empty(thetas.shape[0])
        chunk = max(1, int(4_000_000 // max(1, y.size)))
        for lo in range(0, thetas.shape[0], chunk):
            t = thetas[lo : lo + chunk]
            mu1 = t[:, 0:1]
            mu2 = t[:, 1:2]
            g = t[:, 2:3]
            lp = np.logaddexp(
                np.log(g) + _log_phi(y[None, :] - mu1),
                np.log1p(-g) + _log_phi(y[None, :] - mu2),
            )
            out[lo : lo + chunk] = lp.sum(axis=1)
        return out

    def jac_rows(self, subset: DataSubset, theta: np.ndarray) -> np.ndarray:
        mu1, mu2, gamma = theta
        y = subset.y
        z1 = y - mu1
        z2 = y - mu2
        phi1 = np.exp(_log_phi(z1))
        phi2 = np.exp(_log_phi(z2))
        dens = gamma * phi1 + (1.0 - gamma) * phi2
        # Gradient of the mixture CDF in each parameter, scaled by 1/density
        # (the inverse-CDF generating equation's parameter derivative).
        with np.errstate(divide="ignore", invalid="ignore"):
            rows = np.stack(
                [
                    -gamma * phi1 / dens,
                    -(1.0 - gamma) * phi2 / dens,
                    (ndtr(z1) - ndtr(z2)) / dens,
                ],
                axis=1,
            )
        return rows

    def in_support(self, theta: np.ndarray) -> bool:
        if len(theta) != 3 or not np.all(np.isfinite(theta)):
            return False
        mu1, mu2, gamma = theta
        return mu1 < mu2 and 0.0 < gamma < 1.0

    def constrain(self, z: np.ndarray) -> np.ndarray:
        return np.array([z[0], z[0] + math.exp(z[1]), expit(z[2])])

    def unconstrain(self, theta: np.ndarray) -> np.ndarray:
        return np.array([theta[0], math.log(theta[1] - theta[0]), logit(theta[2])])

    def transform_log_jacobian(self, z: np.ndarray) -> float:
        g = expit(z[2])
        return float(z[1] + math.log(g) + math.log1p(-g))

    def simulate(self, theta: np.ndarray, n: int, seed: int) -> DataSubset:
        mu1, mu2, gamma = theta
        rng = np.random.default_rng(seed)
        comp1 = rng.random(n) < gamma
        y = np.where(comp1, mu1, mu2) + rng.standard_normal(n)
        return DataSubset(y=y)

    def initial_guess(self, subset: DataSubset) -> np.ndarray:
        y = subset.y
        med = np.median(y)
        lo = y[y <= med]
        hi = y[y > med]
        mu1 = float(lo.mean())
        mu2 = float(hi.mean())
        if mu2 - mu1 < 1e-3:
            mu2 = mu1 + 1e-3
        return np.array([mu1, mu2, 0.5])
