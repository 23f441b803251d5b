"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field

from ..reward import DEFAULT_RANDOMNESS_DENYLIST


class HealthResponse(BaseModel):
    status: str
    version: str


class RunRequest(BaseModel):
    problem: str = "obp"
    rounds: int = Field(default=500, ge=1)
    group_size: int = Field(default=4, ge=1)
    population_size: int = Field(default=10, ge=1)
    weights: Optional[dict] = None
    delta0: float = 0.0005
    collapse_cap: Optional[int] = 25
    eval_budget_s: float = 60.0
    seed: int = 0
    backend: Optional[dict] = None
    evaluator: str = "auto"
    allow_unsafe_local: bool = False
    scores_path: Optional[str] = None
    worker_cmd: Optional[list[str]] = None
    seed_heuristics: list[str] = Field(default_factory=list)
    output_dir: str = "runs/latest"
    instance_seeds: list[int] = Field(default_factory=lambda: [1, 2, 3, 4, 5])
    obp_items: int = 1000
    obp_capacity: int = 100
    weibull_shape: float = 3.0
    weibull_scale: float = 45.0
    nodes: int = 50
    solver_params: dict = Field(default_factory=dict)
    advantage_population_std: bool = True
    randomness_denylist: list[str] = Field(
        default_factory=lambda: list(DEFAULT_RANDOMNESS_DENYLIST)
    )


class HeuristicModel(BaseModel):
    id: str
    idea: str
    code: str
    performance: float
    origin: dict
    round: int


class RunResponse(BaseModel):
    run_id: str
    rounds: int
    best: HeuristicModel
    pool_size: int
    collapses: list[int]
    journal_path: str
    batch_path: str


class ResumeRequest(BaseModel):
    journal_path: str
    config: RunRequest


class EvalRequest(BaseModel):
    code: str
    problem: str = "obp"
    instances: list[dict] = Field(default_factory=list)
    generate: Optional[dict] = None
    budget_s: float = 60.0
    solver_params: dict = Field(default_factory=dict)
    seed: int = 0
    evaluator: str = "local"  # local | worker
    worker_cmd: Optional[list[str]] = None
    references: Optional[list[float]] = None


class EvalResponse(BaseModel):
    status: str
    objectives: list[float]
    performance: Optional[float] = None
    error: Optional[str] = None
    references: Optional[list[float]] = None
    gaps: Optional[list[float]] = None
    mean_gap: Optional[float] = None


class GenInstancesRequest(BaseModel):
    kind: str = "obp"
    count: int = Field(default=5, ge=1)
    seed: int = 1
    n_items: int = 1000
    capacity: int = 100
    shape: float = 3.0
    scale: float = 45.0
    nodes: int = 50
    maxlen: Optional[float] = None


class GenInstancesResponse(BaseModel):
    instances: list[dict]


class CollapseSimRequest(BaseModel):
    delta0: float = 0.0005
    cap: Optional[int] = None
    trials: int = Field(default=100_000, ge=1)
    seed: int = 0


class CollapseSimResponse(BaseModel):
    trials: int
    empirical_mean: float
    closed_form: float
    relative_error: float
    max_length: int
    capped: bool


class CheckItem(BaseModel):
    name: str
    passed: bool
    detail: str


class GrpoCheckResponse(BaseModel):
    passed: bool
    checks: list[CheckItem]


class ReportRequest(BaseModel):
    journal_path: str


class ErrorResponse(BaseModel):
    detail: str
