"""Adaptive random-walk Metropolis-Hastings for one worker's data block.

The chain runs in the model's unconstrained space and targets the block's
fiducial log-density plus the reparametrization log-Jacobian.  Proposal
covariance adaptation happens only during burn-in; the post-burn-in kernel
is fixed so the returned particles come from a time-homogeneous chain.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy import optimize

from .models.base import DataSubset, Model
from .norms import DNorm, log_fiducial_density


class ChainError(RuntimeError):
    """Chain setup or mixing failure."""


@dataclass
class ChainConfig:
    t: int = 10_000
    burn_in: Optional[int] = None  # None -> t // 2
    thin: int = 1
    init: Union[str, np.ndarray] = "auto"
    seed: int = 0
    target_accept: float = 0.234

    def __post_init__(self):
        if self.t < 100:
            raise ValueError("t must be at least 100")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.burn_in is None:
            self.burn_in = self.t // 2
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")

    @property
    def resolved_burn_in(self) -> int:
        return int(self.burn_in)  # type: ignore[arg-type]


@dataclass
class ChainOutput:
    particles: np.ndarray  # (t, p), constrained space
    log_density: np.ndarray  # (t,), target value at each particle
    accept_rate: float
    ess_per_coord: np.ndarray
    subset_id: int = 0
    proposal_cov: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    @property
    def t(self) -> int:
        return self.particles.shape[0]


def find_mle(model: Model, subset: DataSubset) -> np.ndarray:
    """Subset MLE by derivative-free search from a moment-based start."""
    z0 = model.unconstrain(model.initial_guess(subset))

    def neg_loglik(z: np.ndarray) -> float:
        theta = model.constrain(z)
        if not model.in_support(theta):
            return math.inf
        return -model.loglik(subset, theta)

    res = optimize.minimize(
        neg_loglik, z0, method="Nelder-Mead",
        options={"maxiter": 2000 * model.p, "xatol": 1e-6, "fatol": 1e-6},
    )
    z = res.x if np.isfinite(res.fun) else z0
    return model.constrain(z)


def run_chain(
    model: Model,
    subset: DataSubset,
    cfg: ChainConfig,
    norm: DNorm = DNorm.D2,
    subset_id: int = 0,
) -> ChainOutput:
    if subset.n == 0:
        raise ChainError("empty data subset")
    if subset.n < model.p:
        raise ChainError(
            f"subset size {subset.n} below parameter dimension {model.p}"
        )

    if isinstance(cfg.init, str) and cfg.init == "auto":
        theta0 = find_mle(model, subset)
    else:
        theta0 = np.asarray(cfg.init, dtype=float)
    if not model.in_support(theta0):
        raise ChainError(f"initial point outside support: {theta0!r}")

    d = model.p
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))

    def log_target(z: np.ndarray) -> float:
        theta = model.constrain(z)
        lp = log_fiducial_density(model, subset, theta, norm)
        if lp == -math.inf:
            return -math.inf
        return lp + model.transform_log_jacobian(z)

    z = model.unconstrain(theta0)
    lp = log_target(z)
    if lp == -math.inf:
        raise ChainError("initial point has zero fiducial density")

    burn = cfg.resolved_burn_in
    keep = cfg.t
    total = burn + keep * cfg.thin

    scale_base = 2.38**2 / d
    log_scale = 0.0
    run_mean = z.copy()
    run_m2 = np.zeros((d, d))
    n_seen = 1
    chol = math.sqrt(0.1**2 / d) * np.eye(d)

    particles = np.empty((keep, d))
    log_dens = np.empty(keep)
    accepted_burn = 0
    accepted_main = 0
    kept = 0

    for step in range(total):
        prop = z + chol @ rng.standard_normal(d)
        lp_prop = log_target(prop)
        log_ratio = lp_prop - lp
        accept = log_ratio >= 0.0 or rng.random() < math.exp(log_ratio)
        if accept:
            z, lp = prop, lp_prop
            if step < burn:
                accepted_burn += 1
            else:
                accepted_main += 1

        if step < burn:
            # Adapt: running covariance plus scalar scale tuned to the
            # target acceptance rate.  Frozen after burn-in.
            n_seen += 1
            delta = z - run_mean
            run_mean += delta / n_seen
            run_m2 += np.outer(delta, z - run_mean)
            alpha = min(1.0, math.exp(min(log_ratio, 0.0)))
            log_scale += (alpha - cfg.target_accept) / (step + 1) ** 0.6
            if n_seen > 2 * d and step % 25 == 24:
                cov = run_m2 / (n_seen - 1) + 1e-6 * np.eye(d)
                chol = math.sqrt(scale_base * math.exp(log_scale)) * np.linalg.cholesky(cov)
            if step == burn - 1:
                if accepted_burn == 0:
                    raise ChainError("chain failed to mix: zero acceptance over burn-in")
                cov = run_m2 / (n_seen - 1) + 1e-6 * np.eye(d)
                chol = math.sqrt(scale_base * math.exp(log_scale)) * np.linalg.cholesky(cov)
        else:
            if (step - burn + 1) % cfg.thin == 0:
                particles[kept] = model.constrain(z)
                log_dens[kept] = lp
                kept += 1

    assert kept == keep
    main_steps = keep * cfg.thin
    accept_rate = accepted_main / main_steps if main_steps else 0.0
    ess = np.array(
        [effective_sample_size(particles[:, j]) for j in range(d)]
    )
    return ChainOutput(
        particles=particles,
        log_density=log_dens,
        accept_rate=accept_rate,
        ess_per_coord=ess,
        subset_id=subset_id,
        proposal_cov=chol @ chol.T,
    )


def effective_sample_size(series: np.ndarray) -> float:
    """Autocorrelation-time ESS with Geyer initial-positive-sequence cutoff.

    Returns 1 for a constant series by convention; the result is clamped
    to (0, T].
    """
    x = np.asarray(series, dtype=float)
    t = x.size
    if t < 10:
        raise ValueError("series must have at least 10 points")
    x = x - x.mean()
    var = np.dot(x, x) / t
    if var == 0.0:
        return 1.0
    nfft = 1 << (2 * t - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:t].real / t
    rho = acov / acov[0]
    # Sum pairwise (Geyer): keep adding rho[2m] + rho[2m+1] while positive.
    tau = 1.0
    m = 0
    while 2 * m + 2 < t:
        pair = rho[2 * m + 1] + rho[2 * m + 2]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
        m += 1
    ess = t / tau
    return float(min(max(ess, 1e-12), t))


def dump_chain_csv(path: str | Path, chain: ChainOutput) -> None:
    """Diagnostic dump: one row per particle, `t,theta_*,log_density`."""
    p = chain.particles.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"theta_{j+1}" for j in range(p)] + ["log_density"])
        for i in range(chain.t):
            writer.writerow(
                [i] + [repr(float(v)) for v in chain.particles[i]]
                + [repr(float(chain.log_density[i]))]
            )
