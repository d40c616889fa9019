"""FastAPI service exposing the fiducial engine.

Error mapping: configuration problems return 400 with code
``invalid_config``; statistical failures (weight degeneracy, chain
failures, invalid coverage experiments) return 409 with code
``statistical_failure``.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from . import __version__
from .harness import (
    ConfigError,
    ExperimentConfig,
    PipelineConfig,
    coverage_experiment,
    run_pipeline,
    timing_experiment,
)
from .combiner import WeightDegeneracyError
from .models import DataSubset, build_model
from .sampler import ChainError
from .schemas import (
    ChainPayload,
    CoverageCellPayload,
    CoverageExperimentSpec,
    CoverageResponse,
    FitRequest,
    FitResponse,
    ObservationsPayload,
    SimulateRequest,
    SimulateResponse,
    TimingRequest,
    TimingResponse,
    TimingRowPayload,
)

app = FastAPI(title="gfidist", version=__version__)


@app.exception_handler(ConfigError)
async def _config_error(request, exc):
    return JSONResponse(
        status_code=400, content={"code": "invalid_config", "message": str(exc)}
    )


@app.exception_handler(ValueError)
async def _value_error(request, exc):
    return JSONResponse(
        status_code=400, content={"code": "invalid_config", "message": str(exc)}
    )


@app.exception_handler(WeightDegeneracyError)
async def _degeneracy_error(request, exc):
    return JSONResponse(
        status_code=409, content={"code": "statistical_failure", "message": str(exc)}
    )


@app.exception_handler(ChainError)
async def _chain_error(request, exc):
    return JSONResponse(
        status_code=409, content={"code": "statistical_failure", "message": str(exc)}
    )


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


def _payload_to_subset(payload: ObservationsPayload) -> DataSubset:
    x = np.asarray(payload.x) if payload.x is not None else None
    return DataSubset(y=np.asarray(payload.y), x=x)


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    n_covariates = len(req.theta) - 2 if req.model == "cauchy_regression" else None
    model = build_model(
        req.model, n_covariates=n_covariates, threshold=req.threshold, rho=req.rho
    )
    theta = np.asarray(req.theta, dtype=float)
    if req.n > 0 and not model.in_support(theta):
        raise ConfigError(f"theta outside the support of model {req.model}")
    data = model.simulate(theta, req.n, req.seed)
    return SimulateResponse(
        observations=ObservationsPayload(
            y=data.y.tolist(),
            x=None if data.x is None else data.x.tolist(),
        )
    )


@app.post("/fit", response_model=FitResponse, response_model_exclude_none=True)
def fit(req: FitRequest) -> FitResponse:
    data = _payload_to_subset(req.data)
    config = PipelineConfig(
        model=req.model,
        k=req.k,
        t=req.t,
        burn_in=req.burn_in,
        thin=req.thin,
        algorithm=req.algorithm,
        norm=req.norm,
        seed=req.seed,
        alphas=tuple(req.alphas),
        max_workers=req.max_workers,
        rho=req.rho,
        threshold=req.threshold,
        threshold_quantile=req.threshold_quantile,
    )
    result = run_pipeline(data, config)
    chains = None
    if req.include_chains:
        chains = [
            ChainPayload(
                subset_id=c.subset_id,
                particles=c.particles.tolist(),
                log_density=c.log_density.tolist(),
                accept_rate=c.accept_rate,
                ess_per_coord=c.ess_per_coord.tolist(),
            )
            for c in result.chains
        ]
    trace = None
    if req.include_trace:
        trace = [entry.format_line() for entry in result.merge_trace]
    return FitResponse(
        summary=result.summary_payload(include_grids=req.include_grids),
        chains=chains,
        trace=trace,
        timings=result.timings,
    )


def _spec_to_experiment(spec: CoverageExperimentSpec) -> ExperimentConfig:
    return ExperimentConfig(
        model=spec.model,
        theta_true=tuple(spec.theta_true),
        n=spec.n,
        k=spec.k,
        t=spec.t,
        m=spec.m,
        alphas=tuple(spec.alphas),
        seed=spec.seed,
        algorithm=spec.algorithm,
        norm=spec.norm,
        max_workers=spec.max_workers,
        burn_in=spec.burn_in,
        thin=spec.thin,
        rho=spec.rho,
        n_covariates=spec.n_covariates,
        threshold=spec.threshold,
    )


@app.post("/coverage", response_model=CoverageResponse)
def coverage(spec: CoverageExperimentSpec) -> CoverageResponse:
    report = coverage_experiment(_spec_to_experiment(spec))
    return CoverageResponse(
        cells=[CoverageCellPayload(**vars(c)) for c in report.cells],
        m_effective=report.m_effective,
        failures=report.failures,
        valid=report.valid,
    )


@app.post("/timing", response_model=TimingResponse)
def timing(req: TimingRequest) -> TimingResponse:
    rows = timing_experiment(_spec_to_experiment(req.base), req.k_values)
    return TimingResponse(rows=[TimingRowPayload(**vars(r)) for r in rows])
