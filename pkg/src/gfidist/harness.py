"""End-to-end orchestration: partitioning, concurrent worker chains,
combination, coverage experiments, and timing measurements.

Reproducibility contract: every random stream is seeded from the master
seed together with a role tag and an index via ``numpy`` seed sequences,
so results are identical across hosts and independent of worker
scheduling order.
"""

from __future__ import annotations

import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import combiner
from .combiner import (
    MergeTraceEntry,
    WeightDegeneracyError,
    WeightedSample,
    pool_direct,
    run_method_g,
)
from .inference import FiducialSummary, marginal_cdf, summarize_coordinate
from .models import DataSubset, Model, build_model, gpd_tail_quantile
from .norms import DNorm
from .sampler import ChainConfig, ChainError, ChainOutput, run_chain

# Role tags for seed derivation.
_ROLE_SIMULATE = 1
_ROLE_CHAIN = 2
_ROLE_COMBINE = 3
_ROLE_REPLICATION = 4


def derive_seed(master_seed: int, role: int, index: int = 0):
    """Deterministic child seed: entropy tuple (master, role, index)."""
    return (int(master_seed), int(role), int(index))


def _seed_to_int(seed) -> int:
    return int(np.random.SeedSequence(seed).generate_state(1)[0])


class ConfigError(ValueError):
    """Invalid experiment or pipeline configuration."""


def partition(data: DataSubset, k: int, seed) -> list[DataSubset]:
    """Random shuffle, then contiguous split into sizes differing by <= 1."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    if k > data.n:
        raise ConfigError(f"k={k} exceeds the number of observations n={data.n}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    perm = rng.permutation(data.n)
    blocks = np.array_split(perm, k)
    out = []
    for block in blocks:
        out.append(
            DataSubset(
                y=data.y[block],
                x=None if data.x is None else data.x[block],
                indices=data.indices[block],
            )
        )
    return out


@dataclass
class PipelineConfig:
    model: str
    k: int = 1
    t: int = 10_000
    burn_in: Optional[int] = None
    thin: int = 1
    algorithm: str = "method_g"  # or "direct"
    norm: DNorm = DNorm.D2
    seed: int = 0
    alphas: tuple[float, ...] = (0.05, 0.1)
    max_workers: int = 1
    # model options
    rho: float = 0.1
    threshold: Optional[float] = None
    threshold_quantile: float = 0.99
    quantile_probs: tuple[float, ...] = (0.99999, 0.999999, 0.9999999)

    def __post_init__(self):
        if self.algorithm not in ("direct", "method_g"):
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        self.norm = DNorm(self.norm)


@dataclass
class PipelineResult:
    sample: WeightedSample
    summaries: list[FiducialSummary]
    merge_trace: list[MergeTraceEntry]
    timings: dict[str, float]
    chains: list[ChainOutput] = field(default=None, repr=False)  # type: ignore[assignment]

    def summary_payload(self, include_grids: bool = True) -> dict:
        coords = []
        for s in self.summaries:
            d = s.to_dict()
            if not include_grids:
                d.pop("confidence_curve")
                d.pop("kde")
            coords.append(d)
        return {"coordinates": coords, "t": int(self.sample.t)}


def resolve_model(config: PipelineConfig, data: DataSubset) -> Model:
    if config.model == "cauchy_regression":
        if data.x is None:
            raise ConfigError("cauchy_regression requires covariate columns")
        return build_model(config.model, n_covariates=data.x.shape[1], rho=config.rho)
    if config.model == "gpd_tail":
        threshold = config.threshold
        if threshold is None:
            threshold = float(np.quantile(data.y, config.threshold_quantile))
        return build_model(config.model, threshold=threshold)
    return build_model(config.model)


def _chain_task(args):
    model, subset, cfg, norm, subset_id = args
    return run_chain(model, subset, cfg, norm, subset_id=subset_id)


def run_chains(
    model: Model,
    subsets: list[DataSubset],
    config: PipelineConfig,
) -> list[ChainOutput]:
    """Run one chain per subset, up to ``max_workers`` concurrently."""
    tasks = []
    for k, subset in enumerate(subsets):
        cfg = ChainConfig(
            t=config.t,
            burn_in=config.burn_in,
            thin=config.thin,
            seed=_seed_to_int(derive_seed(config.seed, _ROLE_CHAIN, k)),
        )
        tasks.append((model, subset, cfg, config.norm, k))
    workers = max(1, min(config.max_workers, len(tasks)))
    if workers == 1:
        return [_chain_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_chain_task, tasks))


def _derived_quantile_summaries(
    model: Model, sample: WeightedSample, config: PipelineConfig
) -> list[FiducialSummary]:
    """Fiducial samples of extreme quantiles for the tail model."""
    out = []
    base = len(model.param_names)
    for i, prob in enumerate(config.quantile_probs):
        values = []
        for theta in sample.particles:
            try:
                values.append(gpd_tail_quantile(theta, prob, model.threshold))
            except ValueError:
                continue
        if len(values) < 2:
            continue
        derived = WeightedSample(
            particles=np.asarray(values)[:, None],
            log_weights=np.zeros(len(values)),
            lineage=sample.lineage,
            ess=float(len(values)),
        )
        out.append(
            summarize_coordinate(
                derived, 0, f"quantile_{prob:g}", alphas=config.alphas
            )
        )
        out[-1].coord = base + i
    return out


def run_pipeline(data: DataSubset, config: PipelineConfig) -> PipelineResult:
    """Simulate-free end-to-end run on provided data.

    Deterministic given ``config.seed``; wall-clock per phase is recorded
    under ``timings``.
    """
    model = resolve_model(config, data)
    if data.n < config.k * (model.p + 1):
        raise ConfigError(
            f"n={data.n} too small for k={config.k} blocks of dimension {model.p}"
        )
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    subsets = partition(data, config.k, derive_seed(config.seed, _ROLE_SIMULATE, 0))

    t1 = time.perf_counter()
    chains = run_chains(model, subsets, config)
    timings["sampling"] = time.perf_counter() - t1

    trace: list[MergeTraceEntry] = []
    combine_seed = derive_seed(config.seed, _ROLE_COMBINE, 0)
    if config.algorithm == "method_g":
        sample = run_method_g(
            chains, model, subsets, combine_seed, trace=trace, phase_timings=timings
        )
    else:
        t2 = time.perf_counter()
        sample = pool_direct(chains, model, subsets, combine_seed)
        timings["weighting"] = time.perf_counter() - t2
    timings.setdefault("weighting", 0.0)
    timings.setdefault("merging", 0.0)

    t3 = time.perf_counter()
    summaries = [
        summarize_coordinate(sample, j, name, alphas=config.alphas)
        for j, name in enumerate(model.param_names)
    ]
    if config.model == "gpd_tail":
        summaries.extend(_derived_quantile_summaries(model, sample, config))
    timings["inference"] = time.perf_counter() - t3
    timings["total"] = time.perf_counter() - t0
    return PipelineResult(
        sample=sample,
        summaries=summaries,
        merge_trace=trace,
        timings=timings,
        chains=chains,
    )


# ---------------------------------------------------------------------
# coverage experiments


@dataclass
class ExperimentConfig:
    model: str
    theta_true: tuple[float, ...]
    n: int
    k: int = 1
    t: int = 2000
    m: int = 100
    alphas: tuple[float, ...] = tuple(round(0.05 * i, 2) for i in range(1, 20))
    seed: int = 0
    algorithm: str = "method_g"
    norm: DNorm = DNorm.D2
    max_workers: int = 1
    burn_in: Optional[int] = None
    thin: int = 1
    rho: float = 0.1
    n_covariates: Optional[int] = None
    threshold: Optional[float] = None

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("m must be >= 1")
        if any(not 0.0 < a < 1.0 for a in self.alphas):
            raise ConfigError("alpha grid must lie in (0, 1)")
        self.norm = DNorm(self.norm)
        if self.algorithm not in ("direct", "method_g"):
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")


@dataclass
class CoverageCell:
    parameter: str
    alpha: float
    coverage: float
    band_low: float
    band_high: float
    in_band: bool


@dataclass
class CoverageReport:
    cells: list[CoverageCell]
    m_effective: int
    failures: int
    valid: bool
    timings: list[float]

    def in_band_fraction(self, parameter: Optional[str] = None) -> float:
        cells = [
            c for c in self.cells if parameter is None or c.parameter == parameter
        ]
        return sum(c.in_band for c in cells) / len(cells)


def coverage_band(alpha: float, m: int) -> tuple[float, float]:
    """Binomial band for an empirical coverage over m replications."""
    half = 1.96 * math.sqrt(alpha * (1.0 - alpha) / m)
    return alpha - half, alpha + half


def _experiment_model(config: ExperimentConfig) -> Model:
    return build_model(
        config.model,
        n_covariates=config.n_covariates,
        threshold=config.threshold,
        rho=config.rho,
    )


def _pipeline_config(config: ExperimentConfig, seed: int) -> PipelineConfig:
    return PipelineConfig(
        model=config.model,
        k=config.k,
        t=config.t,
        burn_in=config.burn_in,
        thin=config.thin,
        algorithm=config.algorithm,
        norm=config.norm,
        seed=seed,
        alphas=(0.05,),
        max_workers=1,
        rho=config.rho,
        threshold=config.threshold,
    )


def _coverage_replication(args):
    """One replication: simulate, run the pipeline, test one-sided bounds.

    Returns (rep_index, hits matrix or None, elapsed seconds); hits[j, a]
    is 1 when the true parameter j lies below the level-alpha bound.
    """
    config, rep = args
    theta_true = np.asarray(config.theta_true, dtype=float)
    model = _experiment_model(config)
    sim_seed = _seed_to_int(derive_seed(config.seed, _ROLE_SIMULATE, rep))
    data = model.simulate(theta_true, config.n, sim_seed)
    pipe_seed = _seed_to_int(derive_seed(config.seed, _ROLE_REPLICATION, rep))
    start = time.perf_counter()
    try:
        result = run_pipeline(data, _pipeline_config(config, pipe_seed))
    except (WeightDegeneracyError, ChainError) as exc:
        warnings.warn(f"replication {rep} failed: {exc}")
        return rep, None, time.perf_counter() - start
    hits = np.zeros((model.p, len(config.alphas)))
    for j in range(model.p):
        cdf = marginal_cdf(result.sample, j)
        for a, alpha in enumerate(config.alphas):
            hits[j, a] = 1.0 if theta_true[j] <= cdf.inverse(alpha) else 0.0
    return rep, hits, time.perf_counter() - start


def coverage_experiment(config: ExperimentConfig) -> CoverageReport:
    """Empirical coverage of one-sided fiducial bounds over m replications.

    Failed replications are excluded and counted; the experiment is marked
    invalid when more than 5% fail.
    """
    if config.m < 30:
        warnings.warn("m < 30: the coverage band has little meaning")
    model = _experiment_model(config)
    if len(config.theta_true) != model.p:
        raise ConfigError(
            f"theta_true has length {len(config.theta_true)}, model needs {model.p}"
        )
    tasks = [(config, rep) for rep in range(config.m)]
    workers = max(1, min(config.max_workers, config.m))
    if workers == 1:
        raw = [_coverage_replication(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_coverage_replication, tasks))
    raw.sort(key=lambda r: r[0])
    hit_stack = [h for _, h, _ in raw if h is not None]
    timings = [el for _, _, el in raw]
    failures = config.m - len(hit_stack)
    m_eff = len(hit_stack)
    if m_eff == 0:
        raise WeightDegeneracyError("every replication failed")
    mean_hits = np.mean(np.stack(hit_stack), axis=0)
    cells = []
    for j, name in enumerate(model.param_names):
        for a, alpha in enumerate(config.alphas):
            low, high = coverage_band(alpha, m_eff)
            cov = float(mean_hits[j, a])
            cells.append(
                CoverageCell(
                    parameter=name,
                    alpha=float(alpha),
                    coverage=cov,
                    band_low=low,
                    band_high=high,
                    in_band=bool(low <= cov <= high),
                )
            )
    return CoverageReport(
        cells=cells,
        m_effective=m_eff,
        failures=failures,
        valid=failures <= 0.05 * config.m,
        timings=timings,
    )


# ---------------------------------------------------------------------
# timing experiments


@dataclass
class TimingRow:
    k: int
    total: float
    sampling: float
    weighting: float
    merging: float
    inference: float


def timing_experiment(
    base: ExperimentConfig, k_values: list[int]
) -> list[TimingRow]:
    """Wall-clock per phase for each worker count on one simulated dataset.

    No assertion about an optimal K is made: past some point the
    communication and bookkeeping overhead can outweigh the per-worker
    savings.
    """
    if len(k_values) < 2:
        raise ConfigError(">=2 values of K required")
    model = _experiment_model(base)
    data = model.simulate(
        np.asarray(base.theta_true, dtype=float),
        base.n,
        _seed_to_int(derive_seed(base.seed, _ROLE_SIMULATE, 0)),
    )
    rows = []
    for k in k_values:
        cfg = _pipeline_config(base, _seed_to_int(derive_seed(base.seed, _ROLE_REPLICATION, k)))
        cfg.k = k
        cfg.max_workers = base.max_workers
        result = run_pipeline(data, cfg)
        t = result.timings
        rows.append(
            TimingRow(
                k=k,
                total=t["total"],
                sampling=t["sampling"],
                weighting=t["weighting"],
                merging=t["merging"],
                inference=t["inference"],
            )
        )
    return rows
