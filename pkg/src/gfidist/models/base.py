"""Model plugin interface and shared data containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class DataSubset:
    """One worker's block of observations with its index set."""

    y: np.ndarray
    x: Optional[np.ndarray] = None
    indices: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "y", y)
        if self.x is not None:
            x = np.asarray(self.x, dtype=float)
            if x.shape[0] != y.shape[0]:
                raise ValueError("covariate rows must match response length")
            object.__setattr__(self, "x", x)
        if self.indices is None:
            object.__setattr__(self, "indices", np.arange(y.shape[0]))
        else:
            object.__setattr__(self, "indices", np.asarray(self.indices, dtype=int))

    @property
    def n(self) -> int:
        return self.y.shape[0]


def concat_subsets(subsets: list[DataSubset]) -> DataSubset:
    y = np.concatenate([s.y for s in subsets])
    if subsets[0].x is not None:
        x = np.vstack([s.x for s in subsets])
    else:
        x = None
    idx = np.concatenate([s.indices for s in subsets])
    return DataSubset(y=y, x=x, indices=idx)


class Model:
    """A pluggable model: likelihood, Jacobian rows, transform, simulator.

    Subclasses work in two coordinate systems: the constrained parameter
    space theta (what users see) and an unconstrained space z used by the
    sampler.  ``constrain``/``unconstrain`` map between them and
    ``transform_log_jacobian`` is log|d theta / d z|.
    """

    name: str = ""
    p: int = 0
    param_names: tuple[str, ...] = ()

    # -- likelihood and Jacobian -------------------------------------
    def loglik(self, subset: DataSubset, theta: np.ndarray) -> float:
        raise NotImplementedError

    def loglik_batch(self, subset: DataSubset, thetas: np.ndarray) -> np.ndarray:
        """Log-likelihood at many parameter points; default loops."""
        thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
        return np.array([self.loglik(subset, t) for t in thetas])

    def jac_rows(self, subset: DataSubset, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- support and reparametrization --------------------------------
    def in_support(self, theta: np.ndarray) -> bool:
        raise NotImplementedError

    def constrain(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def unconstrain(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def transform_log_jacobian(self, z: np.ndarray) -> float:
        raise NotImplementedError

    # -- data generation and initialization ---------------------------
    def simulate(self, theta: np.ndarray, n: int, seed: int) -> DataSubset:
        raise NotImplementedError

    def initial_guess(self, subset: DataSubset) -> np.ndarray:
        """Moment-based starting point in constrained space."""
        raise NotImplementedError
