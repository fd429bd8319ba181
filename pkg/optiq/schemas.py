"""
Pydantic schemas for solver configuration, run state, traces and benchmark reports.
"""
from enum import Enum
from typing import Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator


class SolverStatus(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    DIVERGED = "Diverged"
    NUMERICAL_FAILURE = "NumericalFailure"


class OptiQConfig(BaseModel):
    eta: float = Field(1e-12, gt=0)  # tolerance on ||grad f||^2
    max_iterations: int = Field(10000, gt=0)
    tau_grouping_rtol: float = Field(1e-9, ge=0)
    velocity_floor: float = Field(1e-14, gt=0)
    regularization_seed: float = Field(1e-10, gt=0)
    # "trajectory": |mean quiescent velocity + df/dx_q(new)|; "drift": change of df/dx_q over the step;
    # "auto": drift on quadratic objectives, trajectory otherwise
    dequiescence_measure: Literal["auto", "trajectory", "drift"] = "auto"
    # threshold = max(eta / N, ratio * ||df/dx_nq(new)||_inf); 0 keeps eta / N alone
    dequiescence_ratio: float = Field(1.0, ge=0)
    # keep x after every iteration on SolverResult.iterates
    record_iterates: bool = False


class LineSearchConfig(BaseModel):
    c1: float = Field(1e-4, gt=0, lt=1)
    shrink: float = Field(0.5, gt=0, lt=1)
    alpha0: float = Field(1.0, gt=0)
    max_backtracks: int = Field(60, ge=1)


class ForwardEulerPolicy(BaseModel):
    """Fixed step, or safety * 2 / lambda_max(H(x)) re-evaluated every iteration."""
    kind: Literal["fixed", "bound_based"] = "bound_based"
    dt: Optional[float] = Field(None, gt=0)
    safety: float = Field(0.5, gt=0)

    @model_validator(mode="after")
    def _fixed_needs_dt(self):
        if self.kind == "fixed" and self.dt is None:
            raise ValueError("fixed forward-Euler policy requires dt")
        return self


class SolverState(BaseModel):
    x: np.ndarray
    t: float = 0.0
    quiescent: List[int] = Field(default_factory=list)
    iteration: int = 0

    class Config:
        arbitrary_types_allowed = True

    @field_validator("quiescent")
    @classmethod
    def _sorted_unique(cls, value: List[int]) -> List[int]:
        return sorted(set(int(i) for i in value))

    def nonquiescent(self) -> List[int]:
        q = set(self.quiescent)
        return [i for i in range(self.x.size) if i not in q]


class QuiescenceStep(BaseModel):
    dt: float
    promoted: List[int]
    xdot_nq: np.ndarray
    xdot_q: np.ndarray
    tau_tilde: np.ndarray

    class Config:
        arbitrary_types_allowed = True


class TraceRecord(BaseModel):
    iteration: int
    t: float
    dt: float
    f_value: float
    grad_norm: float
    quiescent_count: int = 0
    demoted_count: int = 0
    promoted_count: int = 0
    step_kind: str = ""
    lyapunov: Optional[float] = None


class SolverResult(BaseModel):
    status: SolverStatus
    x_final: np.ndarray
    f_final: float
    grad_norm_final: float
    iterations: int
    wall_time: float = 0.0
    trace: List[TraceRecord] = Field(default_factory=list)
    solver: str = ""
    problem: str = ""
    t_final: float = 0.0
    message: Optional[str] = None
    factored_block_sizes: Dict[int, int] = Field(default_factory=dict)
    iterates: Optional[np.ndarray] = None  # (iterations + 1, n) when requested

    class Config:
        arbitrary_types_allowed = True


class BenchmarkRow(BaseModel):
    problem: str
    n: int
    solver: str
    status: str
    iterations: int
    wall_time_s: float
    f_final: float
    grad_norm_final: float
    factored_block_sizes: Dict[int, int] = Field(default_factory=dict)
    runtime_normalized: Optional[float] = None
    message: Optional[str] = None


class BenchmarkReport(BaseModel):
    rows: List[BenchmarkRow] = Field(default_factory=list)
    metadata: Dict[str, Any] = Field(default_factory=dict)


class SuiteProblem(BaseModel):
    name: str
    n: Optional[int] = None
    x0: Optional[List[float]] = None
    seed: Optional[int] = None


class SuiteSpec(BaseModel):
    """Flat JSON suite file: problems x solvers at one (eta, N)."""
    problems: List[SuiteProblem] = Field(default_factory=list)
    solvers: List[str] = Field(default_factory=list)
    eta: float = Field(1e-12, gt=0)
    max_iterations: int = Field(10000, gt=0)
    forward_euler: ForwardEulerPolicy = Field(default_factory=ForwardEulerPolicy)
    persist_traces: bool = False
    trace_dir: Optional[str] = None


class StepBoundFlag(BaseModel):
    iteration: int
    dt: float
    lower_bound: Optional[float] = None  # 1 / lambda_max
    upper_bound: Optional[float] = None  # 1 / lambda_min
    lower_ok: Optional[bool] = None
    upper_ok: Optional[bool] = None
    verdict: Literal["pass", "pass-with-equality", "fail-lower", "fail-upper", "not checked"] = "not checked"
