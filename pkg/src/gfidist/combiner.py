"""Combination of per-worker fiducial samples.

Two schemes are provided, both operating entirely in log-weight space:

* ``run_direct``: direct importance weighting of each worker's
  particles by the product of the other workers' likelihoods, averaging
  the per-worker estimators.
* ``run_method_g``: a pairwise resample-and-merge tree that halves the
  number of live samples each round until a single full-data sample
  remains.

The Jacobian-ratio correction of the exact weights is kept only as an
oracle path (``exact_log_weight``); production paths use the simplified
weights, whose difference is the log Jacobian ratio exactly.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .models.base import DataSubset, Model, concat_subsets
from .norms import DNorm, log_norm
from .sampler import ChainOutput


class WeightDegeneracyError(RuntimeError):
    """All importance weights vanished (or one side of a merge did)."""


@dataclass
class WeightedSample:
    """T particles with log-weights and the data lineage they absorbed."""

    particles: np.ndarray
    log_weights: np.ndarray
    lineage: frozenset[int]
    ess: float

    @property
    def t(self) -> int:
        return self.particles.shape[0]


@dataclass
class MergeTraceEntry:
    round_index: int
    pair: tuple[int, int]
    ess_left: float
    ess_right: float
    log_sum_weight_left: float
    log_sum_weight_right: float

    def format_line(self) -> str:
        return (
            f"round={self.round_index} pair={self.pair[0]},{self.pair[1]} "
            f"ess_left={self.ess_left:.6g} ess_right={self.ess_right:.6g} "
            f"lsw_left={self.log_sum_weight_left:.10g} "
            f"lsw_right={self.log_sum_weight_right:.10g}"
        )


@dataclass
class MergePlan:
    """Pairings per round; an unpaired identifier passes through."""

    rounds: list[list[tuple[int, int]]] = field(default_factory=list)


def build_merge_plan(ids: list[int]) -> MergePlan:
    """Pair live samples in ascending id order until one remains."""
    rounds: list[list[tuple[int, int]]] = []
    live = sorted(ids)
    while len(live) > 1:
        pairs = [
            (live[i], live[i + 1]) for i in range(0, len(live) - 1, 2)
        ]
        rounds.append(pairs)
        survivors = [p[0] for p in pairs]
        if len(live) % 2 == 1:
            survivors.append(live[-1])
        live = sorted(survivors)
    return MergePlan(rounds=rounds)


# ---------------------------------------------------------------------
# weights


def simplified_log_weight(
    model: Model, other_subsets: list[DataSubset], theta: np.ndarray
) -> float:
    """Sum of log-likelihoods of the other workers' blocks at theta."""
    return float(sum(model.loglik(s, theta) for s in other_subsets))


def simplified_log_weights_batch(
    model: Model, other_subsets: list[DataSubset], thetas: np.ndarray
) -> np.ndarray:
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    total = np.zeros(thetas.shape[0])
    for s in other_subsets:
        total += model.loglik_batch(s, thetas)
    return total


def exact_log_weight(
    model: Model,
    all_subsets: list[DataSubset],
    subset_index: int,
    theta: np.ndarray,
    norm: DNorm = DNorm.D2,
) -> float:
    """Simplified weight plus the full-data/block Jacobian log-ratio.

    Needs Jacobian evaluation on the whole data set, so this is an
    oracle/testing path only.
    """
    others = [s for j, s in enumerate(all_subsets) if j != subset_index]
    lw = simplified_log_weight(model, others, theta)
    full = concat_subsets(all_subsets)
    lj_full = log_norm(model.jac_rows(full, theta), norm)
    lj_k = log_norm(model.jac_rows(all_subsets[subset_index], theta), norm)
    return lw + lj_full - lj_k


def normalize_and_ess(log_weights: np.ndarray) -> tuple[np.ndarray, float]:
    """Normalized probabilities via log-sum-exp and ESS = 1 / sum p^2."""
    lw = np.asarray(log_weights, dtype=float)
    if lw.size == 0 or not np.any(np.isfinite(lw)):
        raise WeightDegeneracyError("total weight degeneracy: no finite log-weight")
    probs = np.exp(lw - logsumexp(lw))
    probs /= probs.sum()  # remove residual rounding
    ess = 1.0 / float(np.dot(probs, probs))
    return probs, ess


def resample(
    particles: np.ndarray, probabilities: np.ndarray, m: int, seed
) -> np.ndarray:
    """Systematic resampling of m rows; deterministic given seed."""
    if m <= 0:
        raise ValueError("resample size must be positive")
    p = np.asarray(probabilities, dtype=float)
    if abs(p.sum() - 1.0) > 1e-10:
        raise ValueError("probabilities must sum to 1")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    positions = (rng.random() + np.arange(m)) / m
    cum = np.cumsum(p)
    cum[-1] = 1.0
    idx = np.searchsorted(cum, positions, side="left")
    return np.asarray(particles)[idx]


# ---------------------------------------------------------------------
# direct importance weighting


@dataclass
class DirectResult:
    estimate: float
    per_worker_estimates: dict[int, float]
    per_worker_ess: dict[int, float]
    excluded: list[int]


def run_direct(
    chains: list[ChainOutput],
    model: Model,
    subsets: list[DataSubset],
    assertion,
    use_exact_weights: bool = False,
    norm: DNorm = DNorm.D2,
) -> DirectResult:
    """Average the per-worker importance-weighted assertion estimates.

    ``assertion`` maps a (t, p) particle matrix to a boolean vector.
    Workers whose weights degenerate are excluded with a warning.
    """
    if len(chains) != len(subsets):
        raise ValueError("one chain per subset required")
    estimates: dict[int, float] = {}
    ess_by_k: dict[int, float] = {}
    excluded: list[int] = []
    for k, chain in enumerate(chains):
        if use_exact_weights:
            lw = np.array(
                [
                    exact_log_weight(model, subsets, k, theta, norm)
                    for theta in chain.particles
                ]
            )
        else:
            others = [s for j, s in enumerate(subsets) if j != k]
            lw = simplified_log_weights_batch(model, others, chain.particles)
        try:
            probs, ess = normalize_and_ess(lw)
        except WeightDegeneracyError:
            warnings.warn(f"worker {k}: weight degeneracy, excluded from the average")
            excluded.append(k)
            continue
        ind = np.asarray(assertion(chain.particles), dtype=float)
        estimates[k] = float(np.dot(probs, ind))
        ess_by_k[k] = ess
    if not estimates:
        raise WeightDegeneracyError("all workers degenerate")
    mean = float(np.mean(list(estimates.values())))
    return DirectResult(
        estimate=mean,
        per_worker_estimates=estimates,
        per_worker_ess=ess_by_k,
        excluded=excluded,
    )


def pool_direct(
    chains: list[ChainOutput],
    model: Model,
    subsets: list[DataSubset],
    seed,
) -> WeightedSample:
    """Uniform-weight pooled sample matching the averaged estimator.

    Each non-degenerate worker contributes with equal total mass; the
    pooled mixture is systematically resampled back to T particles.
    """
    parts = []
    probs_all = []
    kept = 0
    for k, chain in enumerate(chains):
        others = [s for j, s in enumerate(subsets) if j != k]
        lw = simplified_log_weights_batch(model, others, chain.particles)
        try:
            probs, _ = normalize_and_ess(lw)
        except WeightDegeneracyError:
            warnings.warn(f"worker {k}: weight degeneracy, excluded from the pool")
            continue
        parts.append(chain.particles)
        probs_all.append(probs)
        kept += 1
    if not kept:
        raise WeightDegeneracyError("all workers degenerate")
    t = chains[0].t
    stacked = np.vstack(parts)
    mixture = np.concatenate([p / kept for p in probs_all])
    pooled = resample(stacked, mixture, t, seed)
    return WeightedSample(
        particles=pooled,
        log_weights=np.zeros(t),
        lineage=frozenset(range(len(subsets))),
        ess=float(t),
    )


# ---------------------------------------------------------------------
# pairwise resample-and-merge ("method_g")


def cross_log_weights(
    model: Model, group_subsets: list[DataSubset], particles: np.ndarray
) -> np.ndarray:
    """Log-likelihood of a data group evaluated on foreign particles.

    This is the only payload (besides particle matrices) that crosses a
    subset boundary during merging.
    """
    return simplified_log_weights_batch(model, group_subsets, particles)


def run_method_g(
    chains: list[ChainOutput],
    model: Model,
    subsets: list[DataSubset],
    seed,
    plan: MergePlan | None = None,
    trace: list[MergeTraceEntry] | None = None,
    phase_timings: dict[str, float] | None = None,
) -> WeightedSample:
    """Merge worker samples pairwise until one full-data sample remains.

    Each pair's sides are weighted by the *other* side's data-group
    likelihood, resampled to half size each, and concatenated; the merged
    sample inherits the union of the two data groups.
    """
    if not chains:
        raise ValueError("at least one chain required")
    live: dict[int, WeightedSample] = {}
    for k, chain in enumerate(chains):
        live[k] = WeightedSample(
            particles=chain.particles,
            log_weights=np.zeros(chain.t),
            lineage=frozenset({k}),
            ess=float(chain.t),
        )
    if plan is None:
        plan = build_merge_plan(list(live))

    for round_index, pairs in enumerate(plan.rounds):
        for ki, kj in pairs:
            left, right = live[ki], live[kj]
            group_i = [subsets[s] for s in sorted(left.lineage)]
            group_j = [subsets[s] for s in sorted(right.lineage)]
            t0 = time.perf_counter()
            lw_left = cross_log_weights(model, group_j, left.particles)
            lw_right = cross_log_weights(model, group_i, right.particles)
            if phase_timings is not None:
                phase_timings["weighting"] = (
                    phase_timings.get("weighting", 0.0) + time.perf_counter() - t0
                )
            try:
                probs_left, ess_left = normalize_and_ess(lw_left)
                probs_right, ess_right = normalize_and_ess(lw_right)
            except WeightDegeneracyError as exc:
                raise WeightDegeneracyError(
                    f"merge degeneracy at round {round_index}, pair ({ki},{kj}): {exc}"
                ) from exc
            if trace is not None:
                trace.append(
                    MergeTraceEntry(
                        round_index=round_index,
                        pair=(ki, kj),
                        ess_left=ess_left,
                        ess_right=ess_right,
                        log_sum_weight_left=float(logsumexp(lw_left)),
                        log_sum_weight_right=float(logsumexp(lw_right)),
                    )
                )
            t1 = time.perf_counter()
            t = left.t
            n_left = (t + 1) // 2
            n_right = t - n_left
            take_left = resample(
                left.particles, probs_left, n_left, (seed, round_index, ki, 0)
            )
            take_right = resample(
                right.particles, probs_right, n_right, (seed, round_index, ki, 1)
            )
            merged = WeightedSample(
                particles=np.vstack([take_left, take_right]),
                log_weights=np.zeros(t),
                lineage=left.lineage | right.lineage,
                ess=float(min(ess_left, ess_right)),
            )
            del live[kj]
            live[ki] = merged
            if phase_timings is not None:
                phase_timings["merging"] = (
                    phase_timings.get("merging", 0.0) + time.perf_counter() - t1
                )

    if len(live) != 1:
        raise RuntimeError("merge plan did not reduce to a single sample")
    return next(iter(live.values()))


def estimate_r(sample: WeightedSample, assertion) -> float:
    """Fraction of (uniform-weight) particles satisfying the assertion."""
    if np.any(sample.log_weights != 0.0):
        raise ValueError("estimate_r requires uniform (post-resampling) weights")
    ind = np.asarray(assertion(sample.particles), dtype=float)
    return float(ind.mean())
