"""Interval estimates, confidence curves, and density estimates from a
uniform-weight fiducial sample."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class StepCdf:
    """Right-continuous empirical CDF of one coordinate."""

    sorted_values: np.ndarray

    def __call__(self, t) -> np.ndarray | float:
        idx = np.searchsorted(self.sorted_values, t, side="right")
        return idx / self.sorted_values.size

    def inverse(self, q: float) -> float:
        """Generalized inverse: infimum of t with CDF(t) >= q."""
        n = self.sorted_values.size
        k = max(int(math.ceil(q * n)), 1)
        return float(self.sorted_values[min(k, n) - 1])


def marginal_cdf(sample, coord: int) -> StepCdf:
    """Empirical CDF of one coordinate of a uniform-weight sample."""
    if np.any(sample.log_weights != 0.0):
        raise ValueError("marginal_cdf requires uniform weights")
    return StepCdf(sorted_values=np.sort(sample.particles[:, coord]))


def invert_ci(cdf: StepCdf, alpha: float, side: str = "two_sided"):
    """Interval bounds by generalized inversion of the step CDF.

    ``lower``/``upper`` give one-sided level-alpha bounds; ``two_sided``
    gives the central level-(1-alpha) interval.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if side == "lower":
        return cdf.inverse(alpha)
    if side == "upper":
        return cdf.inverse(1.0 - alpha)
    if side == "two_sided":
        return (cdf.inverse(alpha / 2.0), cdf.inverse(1.0 - alpha / 2.0))
    raise ValueError(f"unknown side {side!r}")


def confidence_curve(cdf: StepCdf, grid: np.ndarray) -> np.ndarray:
    """Pairs (t, |2 CDF(t) - 1|); level-g crossings bracket the central
    g-interval."""
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted")
    cc = np.abs(2.0 * np.asarray(cdf(grid)) - 1.0)
    return np.column_stack([grid, cc])


def silverman_bandwidth(values: np.ndarray) -> float:
    v = np.asarray(values, dtype=float)
    sd = float(v.std(ddof=1))
    iqr = float(np.subtract(*np.percentile(v, [75, 25])))
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    return 0.9 * spread * v.size ** (-0.2)


def kde(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Gaussian kernel density estimate with Silverman's bandwidth."""
    v = np.asarray(values, dtype=float)
    if np.unique(v).size < 2:
        raise ValueError("degenerate sample: all values equal")
    h = silverman_bandwidth(v)
    if h <= 0:
        raise ValueError("degenerate sample: zero bandwidth")
    grid = np.asarray(grid, dtype=float)
    z = (grid[:, None] - v[None, :]) / h
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (v.size * h * math.sqrt(2 * math.pi))
    return dens


@dataclass
class FiducialSummary:
    """Per-coordinate weighted-CDF summary: CIs, curve, and KDE grids."""

    coord: int
    name: str
    ci: dict[str, dict[str, float | list[float]]]
    curve: list[list[float]]
    kde: list[list[float]]
    mean: float
    median: float

    def to_dict(self) -> dict:
        return {
            "coord": self.coord,
            "name": self.name,
            "mean": self.mean,
            "median": self.median,
            "ci": self.ci,
            "confidence_curve": self.curve,
            "kde": self.kde,
        }


def summarize_coordinate(
    sample,
    coord: int,
    name: str,
    alphas=(0.05, 0.1),
    grid_points: int = 101,
) -> FiducialSummary:
    values = sample.particles[:, coord]
    cdf = marginal_cdf(sample, coord)
    ci: dict[str, dict] = {}
    for alpha in alphas:
        lo, hi = invert_ci(cdf, alpha, "two_sided")
        ci[f"{alpha:g}"] = {
            "two_sided": [lo, hi],
            "lower": invert_ci(cdf, alpha, "lower"),
            "upper": invert_ci(cdf, alpha, "upper"),
        }
    h = silverman_bandwidth(values)
    span = max(h, 1e-12)
    grid = np.linspace(values.min() - 4 * span, values.max() + 4 * span, grid_points)
    curve = confidence_curve(cdf, grid)
    try:
        dens = kde(values, grid)
        kde_pairs = np.column_stack([grid, dens]).tolist()
    except ValueError:
        kde_pairs = []
    return FiducialSummary(
        coord=coord,
        name=name,
        ci=ci,
        curve=curve.tolist(),
        kde=kde_pairs,
        mean=float(values.mean()),
        median=float(np.median(values)),
    )


def write_summary_json(path: str | Path, payload: dict) -> None:
    """Deterministic JSON serialization (sorted keys, fixed separators)."""
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def write_curves_csv(path: str | Path, summaries: list[FiducialSummary]) -> None:
    """CSV export of confidence curves for external plotting."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "t", "confidence"])
        for s in summaries:
            for t, c in s.curve:
                writer.writerow([s.name, repr(float(t)), repr(float(c))])
