"""Jacobian matrix norms and fiducial log-density evaluation.

The fiducial target for a data block is the model log-likelihood plus the
log of a norm of the Jacobian matrix of the data-generating equation.  Two
norms are supported:

* ``d2``: product of the singular values of the n x p matrix,
  equivalently sqrt(det(A'A)).
* ``d_inf``: sum of absolute determinants over all p-row submatrices.
  Exponential in n, so it is gated behind an enumeration cap and meant
  for small-n oracle checks.

Everything is carried in log space; a zero norm or an out-of-support
parameter maps to -inf, never to an exception.
"""

from __future__ import annotations

import itertools
import math
from enum import Enum

import numpy as np

# Singular values below this fraction of the largest are treated as zero.
RANK_RTOL = 1e-12

# Refuse d_inf above this many p-row submatrices.
DINF_ENUMERATION_CAP = 1_000_000


class DNorm(str, Enum):
    D2 = "d2"
    DINF = "dinf"


class UnderdeterminedJacobianError(ValueError):
    """Raised when the Jacobian matrix has fewer rows than columns."""


class EnumerationCapError(ValueError):
    """Raised when d_inf would enumerate more submatrices than allowed."""


def _check_shape(matrix: np.ndarray) -> np.ndarray:
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d Jacobian matrix, got ndim={a.ndim}")
    n, p = a.shape
    if n < p:
        raise UnderdeterminedJacobianError(
            f"underdetermined Jacobian: {n} rows < {p} columns"
        )
    return a


def log_d2(matrix: np.ndarray) -> float:
    """Log of the product of singular values; -inf if rank-deficient."""
    a = _check_shape(matrix)
    if not np.all(np.isfinite(a)):
        return -math.inf
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0 or s[-1] < RANK_RTOL * s[0]:
        return -math.inf
    return float(np.sum(np.log(s)))


def d2(matrix: np.ndarray) -> float:
    """Product of singular values of an n x p matrix (sqrt det A'A)."""
    value = log_d2(matrix)
    return 0.0 if value == -math.inf else math.exp(value)


def d_inf(matrix: np.ndarray, cap: int = DINF_ENUMERATION_CAP) -> float:
    """Sum of |det| over all p-row submatrices of an n x p matrix."""
    a = _check_shape(matrix)
    n, p = a.shape
    if math.comb(n, p) > cap:
        raise EnumerationCapError(
            f"C({n},{p}) submatrices exceed the enumeration cap ({cap}); use d2"
        )
    total = 0.0
    for rows in itertools.combinations(range(n), p):
        total += abs(np.linalg.det(a[list(rows)]))
    return total


def log_d_inf(matrix: np.ndarray, cap: int = DINF_ENUMERATION_CAP) -> float:
    value = d_inf(matrix, cap=cap)
    return -math.inf if value == 0.0 else math.log(value)


def log_norm(matrix: np.ndarray, norm: DNorm) -> float:
    """Log D-norm of a Jacobian matrix under the selected variant."""
    if norm == DNorm.D2:
        return log_d2(matrix)
    return log_d_inf(matrix)


class ModelEvaluationError(RuntimeError):
    """Raised when a model produces NaN where a finite value is required."""


def log_fiducial_density(model, subset, theta: np.ndarray, norm: DNorm = DNorm.D2) -> float:
    """Unnormalized log fiducial density of one data block at theta.

    Returns -inf when theta is outside the model support or the Jacobian
    norm vanishes.  The normalizing constant is never computed.
    """
    theta = np.asarray(theta, dtype=float)
    if not model.in_support(theta):
        return -math.inf
    ll = model.loglik(subset, theta)
    if math.isnan(ll):
        raise ModelEvaluationError(
            f"model evaluation failure: log-likelihood is NaN at theta={theta!r}"
        )
    if ll == -math.inf:
        return -math.inf
    rows = model.jac_rows(subset, theta)
    if not np.all(np.isfinite(rows)):
        return -math.inf
    lj = log_norm(rows, norm)
    return ll + lj
