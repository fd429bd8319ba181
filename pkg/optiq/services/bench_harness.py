"""
Suite runner: problems x solvers at one tolerance, collected into a BenchmarkReport.
"""
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from optiq.config import settings
from optiq.errors import ConfigurationError
from optiq.problems.objectives import ObjectiveFunction
from optiq.problems.test_functions import make_test_function
from optiq.schemas import (
    BenchmarkReport,
    BenchmarkRow,
    LineSearchConfig,
    OptiQConfig,
    SolverResult,
    SolverStatus,
    SuiteProblem,
    SuiteSpec,
)
from optiq.services import baseline_solvers, quiescence_solver
from optiq.services.export_service import emit_trace

logger = logging.getLogger(__name__)

SolverFn = Callable[[ObjectiveFunction, np.ndarray, SuiteSpec], SolverResult]

SOLVERS: Dict[str, SolverFn] = {
    "optiq": lambda obj, x0, spec: quiescence_solver.solve(
        obj, x0, OptiQConfig(eta=spec.eta, max_iterations=spec.max_iterations)
    ),
    "newton": lambda obj, x0, spec: baseline_solvers.newton_damped_solve(
        obj, x0, spec.eta, spec.max_iterations, LineSearchConfig()
    ),
    "bfgs": lambda obj, x0, spec: baseline_solvers.bfgs_solve(
        obj, x0, spec.eta, spec.max_iterations, LineSearchConfig()
    ),
    "sr1": lambda obj, x0, spec: baseline_solvers.sr1_solve(
        obj, x0, spec.eta, spec.max_iterations, LineSearchConfig()
    ),
    "forward_euler": lambda obj, x0, spec: baseline_solvers.forward_euler_solve(
        obj, x0, spec.forward_euler, spec.eta, spec.max_iterations
    ),
}


def available_solvers() -> List[str]:
    return sorted(SOLVERS)


def load_suite(path: str) -> SuiteSpec:
    """Parse a flat JSON suite file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return SuiteSpec.model_validate(raw)
    except FileNotFoundError as exc:
        raise ConfigurationError(f"suite file not found: {path}") from exc
    except (json.JSONDecodeError, ValidationError) as exc:
        raise ConfigurationError(f"malformed suite file {path}: {exc}") from exc


def resolve_problem(problem: SuiteProblem) -> Tuple[ObjectiveFunction, np.ndarray]:
    obj = make_test_function(problem.name, problem.n, seed=problem.seed)
    x0 = obj.default_start if problem.x0 is None else np.asarray(problem.x0, dtype=float)
    if x0.shape != (obj.dimension,):
        raise ConfigurationError(
            f"{problem.name}: x0 has length {x0.size}, expected {obj.dimension}"
        )
    return obj, x0


def _run_one(obj: ObjectiveFunction, x0: np.ndarray, solver: str, spec: SuiteSpec) -> Tuple[BenchmarkRow, SolverResult]:
    start = time.perf_counter()
    try:
        result = SOLVERS[solver](obj, x0.copy(), spec)
        wall = time.perf_counter() - start
    except Exception as exc:  # a failed run becomes a row, never aborts the suite
        wall = time.perf_counter() - start
        logger.warning("%s/%s raised %s: %s", obj.name, solver, type(exc).__name__, exc)
        result = SolverResult(
            status=SolverStatus.NUMERICAL_FAILURE,
            x_final=x0.copy(),
            f_final=float("nan"),
            grad_norm_final=float("nan"),
            iterations=0,
            solver=solver,
            problem=obj.name,
            message=f"{type(exc).__name__}: {exc}",
        )
    row = BenchmarkRow(
        problem=obj.name,
        n=obj.dimension,
        solver=solver,
        status=result.status.value,
        iterations=result.iterations,
        wall_time_s=wall,
        f_final=result.f_final,
        grad_norm_final=result.grad_norm_final,
        factored_block_sizes=result.factored_block_sizes,
        message=result.message,
    )
    return row, result


def _normalize_runtimes(rows: List[BenchmarkRow]) -> None:
    """wall_time / wall_time(newton) within each (problem, n)."""
    reference = {
        (r.problem, r.n): r.wall_time_s for r in rows if r.solver == "newton" and r.wall_time_s > 0
    }
    for r in rows:
        base = reference.get((r.problem, r.n))
        r.runtime_normalized = None if base is None else r.wall_time_s / base


def worker_count(requested: Optional[int]) -> int:
    workers = max(1, requested or 1)
    if settings.OPTIQ_THREADS:
        workers = min(workers, max(1, settings.OPTIQ_THREADS))
    return workers


def run_suite(spec: SuiteSpec, parallel: Optional[int] = None) -> BenchmarkReport:
    """Run every (problem, solver) pair of the suite.

    Args:
        spec: Suite specification
        parallel: Requested worker count (capped by OPTIQ_THREADS)

    Returns:
        Report with one row per pair, sorted by (problem, n, solver)
    """
    unknown = [s for s in spec.solvers if s not in SOLVERS]
    if unknown:
        raise ConfigurationError(f"unknown solver(s) {unknown}; choose from {', '.join(available_solvers())}")

    resolved = [resolve_problem(p) for p in spec.problems]
    jobs = [(obj, x0, solver) for obj, x0 in resolved for solver in spec.solvers]
    workers = worker_count(parallel)
    logger.info("running %d jobs on %d worker(s)", len(jobs), workers)

    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda job: _run_one(*job, spec), jobs))
    else:
        outcomes = [_run_one(obj, x0, solver, spec) for obj, x0, solver in jobs]

    if spec.persist_traces:
        trace_dir = Path(spec.trace_dir or settings.TRACE_DIR)
        trace_dir.mkdir(parents=True, exist_ok=True)
        for row, result in outcomes:
            emit_trace(result.trace, str(trace_dir / f"{row.problem}_n{row.n}_{row.solver}.csv"))

    rows = sorted((row for row, _ in outcomes), key=lambda r: (r.problem, r.n, r.solver))
    _normalize_runtimes(rows)

    metadata = {
        "eta": spec.eta,
        "max_iterations": spec.max_iterations,
        "start_points": {f"{obj.name}[{obj.dimension}]": [float(v) for v in x0] for obj, x0 in resolved},
        "config": {
            "optiq": OptiQConfig(eta=spec.eta, max_iterations=spec.max_iterations).model_dump(),
            "line_search": LineSearchConfig().model_dump(),
            "forward_euler": spec.forward_euler.model_dump(),
        },
        "solvers": list(spec.solvers),
        "artifact_version": settings.ARTIFACT_VERSION,
    }
    return BenchmarkReport(rows=rows, metadata=metadata)


def failed_rows(report: BenchmarkReport) -> List[BenchmarkRow]:
    return [r for r in report.rows if r.status != SolverStatus.CONVERGED.value]
