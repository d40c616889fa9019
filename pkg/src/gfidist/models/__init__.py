"""Model plugins and observation CSV serialization."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

import numpy as np

from .base import DataSubset, Model, concat_subsets
from .cauchy import CauchyRegressionModel
from .gpd import GpdTailModel, gpd_tail_quantile
from .mixture import NormalMixtureModel
from .normal import NormalLocationModel

__all__ = [
    "DataSubset",
    "Model",
    "concat_subsets",
    "NormalLocationModel",
    "NormalMixtureModel",
    "CauchyRegressionModel",
    "GpdTailModel",
    "gpd_tail_quantile",
    "MODEL_NAMES",
    "build_model",
    "load_csv",
    "save_csv",
]

MODEL_NAMES = ("normal_location", "mixture", "cauchy_regression", "gpd_tail")


def build_model(
    name: str,
    n_covariates: Optional[int] = None,
    threshold: Optional[float] = None,
    rho: float = 0.1,
) -> Model:
    """Construct a model plugin by name.

    ``cauchy_regression`` needs ``n_covariates``; ``gpd_tail`` needs the
    exceedance ``threshold``.
    """
    if name == "normal_location":
        return NormalLocationModel()
    if name == "mixture":
        return NormalMixtureModel()
    if name == "cauchy_regression":
        if n_covariates is None:
            raise ValueError("cauchy_regression requires n_covariates")
        return CauchyRegressionModel(n_covariates=n_covariates, rho=rho)
    if name == "gpd_tail":
        if threshold is None:
            raise ValueError("gpd_tail requires a threshold")
        return GpdTailModel(threshold=threshold)
    raise ValueError(f"unknown model {name!r}; choose from {MODEL_NAMES}")


def save_csv(path: str | Path, data: DataSubset) -> None:
    """Write observations as `y,x1,...,xq` rows with a header."""
    q = 0 if data.x is None else data.x.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"] + [f"x{i}" for i in range(1, q + 1)])
        for i in range(data.n):
            row = [repr(float(data.y[i]))]
            if q:
                row += [repr(float(v)) for v in data.x[i]]
            writer.writerow(row)


def load_csv(path: str | Path) -> DataSubset:
    """Read observations from the `y,x1,...,xq` CSV layout."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "y":
            raise ValueError(f"{path}: expected a 'y,x1,...' header")
        q = len(header) - 1
        ys: list[float] = []
        xs: list[list[float]] = []
        for row in reader:
            if not row:
                continue
            ys.append(float(row[0]))
            if q:
                xs.append([float(v) for v in row[1 : q + 1]])
    y = np.array(ys)
    x = np.array(xs) if q else None
    return DataSubset(y=y, x=x)
