"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

ModelName = Literal["normal_location", "mixture", "cauchy_regression", "gpd_tail"]
AlgorithmName = Literal["direct", "method_g"]
NormName = Literal["d2", "dinf"]


class ObservationsPayload(BaseModel):
    y: list[float]
    x: Optional[list[list[float]]] = None


class SimulateRequest(BaseModel):
    model: ModelName
    theta: list[float]
    n: int = Field(ge=0)
    seed: int = 0
    rho: float = 0.1
    threshold: Optional[float] = None


class SimulateResponse(BaseModel):
    observations: ObservationsPayload


class FitRequest(BaseModel):
    model: ModelName
    data: ObservationsPayload
    k: int = Field(default=1, ge=1)
    t: int = Field(default=10_000, ge=100)
    burn_in: Optional[int] = None
    thin: int = Field(default=1, ge=1)
    algorithm: AlgorithmName = "method_g"
    norm: NormName = "d2"
    seed: int = 0
    alphas: list[float] = [0.05, 0.1]
    max_workers: int = Field(default=1, ge=1)
    rho: float = 0.1
    threshold: Optional[float] = None
    threshold_quantile: float = 0.99
    include_chains: bool = False
    include_trace: bool = False
    include_grids: bool = True


class CoordinateSummary(BaseModel):
    coord: int
    name: str
    mean: float
    median: float
    ci: dict[str, dict[str, object]]
    confidence_curve: Optional[list[list[float]]] = None
    kde: Optional[list[list[float]]] = None


class ChainPayload(BaseModel):
    subset_id: int
    particles: list[list[float]]
    log_density: list[float]
    accept_rate: float
    ess_per_coord: list[float]


class FitResponse(BaseModel):
    summary: dict
    chains: Optional[list[ChainPayload]] = None
    trace: Optional[list[str]] = None
    timings: dict[str, float]


class CoverageExperimentSpec(BaseModel):
    model: ModelName
    theta_true: list[float]
    n: int = Field(ge=1)
    k: int = Field(default=1, ge=1)
    t: int = Field(default=2000, ge=100)
    m: int = Field(default=100, ge=1)
    alphas: list[float] = [round(0.05 * i, 2) for i in range(1, 20)]
    seed: int = 0
    algorithm: AlgorithmName = "method_g"
    norm: NormName = "d2"
    max_workers: int = Field(default=1, ge=1)
    burn_in: Optional[int] = None
    thin: int = Field(default=1, ge=1)
    rho: float = 0.1
    n_covariates: Optional[int] = None
    threshold: Optional[float] = None


class CoverageCellPayload(BaseModel):
    parameter: str
    alpha: float
    coverage: float
    band_low: float
    band_high: float
    in_band: bool


class CoverageResponse(BaseModel):
    cells: list[CoverageCellPayload]
    m_effective: int
    failures: int
    valid: bool


class TimingRequest(BaseModel):
    base: CoverageExperimentSpec
    k_values: list[int]


class TimingRowPayload(BaseModel):
    k: int
    total: float
    sampling: float
    weighting: float
    merging: float
    inference: float


class TimingResponse(BaseModel):
    rows: list[TimingRowPayload]


class ErrorPayload(BaseModel):
    code: str
    message: str
