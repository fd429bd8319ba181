"""
Comparison methods: Armijo line-search Newton/BFGS/SR1, forward Euler and a reference integrator.
"""
import logging
import time
from typing import Callable, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from optiq.errors import Diverged, LineSearchFailure, NotApplicable, NumericalFailure
from optiq.linalg.dense import FactorizationLog, solve_cholesky, solve_symmetric
from optiq.problems.objectives import ObjectiveFunction
from optiq.schemas import (
    ForwardEulerPolicy,
    LineSearchConfig,
    SolverResult,
    SolverStatus,
    TraceRecord,
)
from optiq.services.diagnostics import fe_stability_bound

logger = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e12
BFGS_SKIP_RTOL = 1e-10
SR1_SKIP_RTOL = 1e-8


def check_iterate(x: np.ndarray, f: float, g: Optional[np.ndarray] = None) -> None:
    """Raise Diverged for non-finite or runaway iterates."""
    if not np.isfinite(f) or not np.all(np.isfinite(x)) or (g is not None and not np.all(np.isfinite(g))):
        raise Diverged("non-finite iterate")
    if abs(f) > DIVERGENCE_LIMIT or np.linalg.norm(x) > DIVERGENCE_LIMIT:
        raise Diverged(f"iterate left the bounded region (|f|={abs(f):.3e}, |x|={np.linalg.norm(x):.3e})")


def armijo_backtrack(
    obj: ObjectiveFunction,
    x: np.ndarray,
    direction: np.ndarray,
    cfg: Optional[LineSearchConfig] = None,
    f0: Optional[float] = None,
    g0: Optional[np.ndarray] = None,
) -> float:
    """First alpha in alpha0 * shrink^k satisfying f(x + alpha d) <= f(x) + c1 alpha g'd."""
    cfg = cfg or LineSearchConfig()
    f0 = obj.value(x) if f0 is None else f0
    g0 = obj.gradient(x) if g0 is None else g0
    slope = float(g0 @ direction)
    if not slope < 0.0:
        raise LineSearchFailure(f"not a descent direction (g'd = {slope:.3e})")

    alpha = cfg.alpha0
    for _ in range(cfg.max_backtracks + 1):
        try:
            trial = obj.value(x + alpha * direction)
        except NumericalFailure:
            trial = np.inf
        if np.isfinite(trial) and trial <= f0 + cfg.c1 * alpha * slope:
            return alpha
        alpha *= cfg.shrink
    raise LineSearchFailure(f"no sufficient decrease after {cfg.max_backtracks} backtracks")


def bfgs_update(B: np.ndarray, s: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Inverse-Hessian BFGS update; returns (B_next, skipped)."""
    ys = float(y @ s)
    if ys <= BFGS_SKIP_RTOL * np.linalg.norm(y) * np.linalg.norm(s):
        return B, True
    rho = 1.0 / ys
    V = np.eye(s.size) - rho * np.outer(s, y)
    B_next = V @ B @ V.T + rho * np.outer(s, s)
    return 0.5 * (B_next + B_next.T), False


def sr1_update(H: np.ndarray, s: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, bool]:
    """Symmetric rank-one Hessian update; returns (H_next, skipped)."""
    v = y - H @ s
    denom = float(v @ s)
    if abs(denom) <= SR1_SKIP_RTOL * np.linalg.norm(s) * np.linalg.norm(v):
        return H, True
    return H + np.outer(v, v) / denom, False


class _NewtonDirection:
    kind = "newton"

    def __init__(self, obj: ObjectiveFunction, log: FactorizationLog):
        self.obj = obj
        self.log = log

    def direction(self, x, g):
        d = solve_cholesky(self.obj.hessian(x), -g, self.log)
        return (d, self.kind) if d is not None else (-g, "gradient")

    def update(self, s, y):
        pass

    def reset(self):
        pass


class _BFGSDirection:
    kind = "quasi_newton"

    def __init__(self, n: int):
        self.B = np.eye(n)
        self.skipped = 0

    def direction(self, x, g):
        return -self.B @ g, self.kind

    def update(self, s, y):
        self.B, skipped = bfgs_update(self.B, s, y)
        self.skipped += skipped

    def reset(self):
        self.B = np.eye(self.B.shape[0])


class _SR1Direction:
    kind = "quasi_newton"

    def __init__(self, n: int, log: FactorizationLog):
        self.H = np.eye(n)
        self.log = log
        self.skipped = 0

    def direction(self, x, g):
        d = solve_symmetric(self.H, -g, self.log)
        return (d, self.kind) if d is not None else (-g, "gradient")

    def update(self, s, y):
        self.H, skipped = sr1_update(self.H, s, y)
        self.skipped += skipped

    def reset(self):
        self.H = np.eye(self.H.shape[0])


def _line_search_solve(
    obj: ObjectiveFunction,
    x0: np.ndarray,
    eta: float,
    max_iterations: int,
    ls: Optional[LineSearchConfig],
    solver: str,
    model,
    log: FactorizationLog,
) -> SolverResult:
    ls = ls or LineSearchConfig()
    start = time.perf_counter()
    x = np.asarray(x0, dtype=float).copy()
    trace: List[TraceRecord] = []
    t = 0.0
    status = SolverStatus.MAX_ITERATIONS
    message = None
    f, g = np.nan, np.full_like(x, np.nan)

    try:
        f, g = obj.value(x), obj.gradient(x)
        check_iterate(x, f, g)
        for k in range(max_iterations):
            if g @ g <= eta:
                break
            d, kind = model.direction(x, g)
            if not np.all(np.isfinite(d)) or not g @ d < 0.0:
                d, kind = -g, "gradient"
            try:
                alpha = armijo_backtrack(obj, x, d, ls, f, g)
            except LineSearchFailure as exc:
                if kind == "gradient":
                    raise NumericalFailure(f"line search failed on steepest descent: {exc}") from exc
                logger.debug("%s: line search failed at iteration %d, resetting to -grad", solver, k + 1)
                model.reset()
                d, kind = -g, "gradient"
                try:
                    alpha = armijo_backtrack(obj, x, d, ls, f, g)
                except LineSearchFailure as exc2:
                    raise NumericalFailure(f"line search failed twice: {exc2}") from exc2

            x_new = x + alpha * d
            f_new, g_new = obj.value(x_new), obj.gradient(x_new)
            check_iterate(x_new, f_new, g_new)
            model.update(x_new - x, g_new - g)
            x, f, g = x_new, f_new, g_new
            t += alpha
            trace.append(TraceRecord(
                iteration=k + 1, t=t, dt=alpha, f_value=f,
                grad_norm=float(np.linalg.norm(g)), step_kind=kind,
            ))
        if g @ g <= eta:
            status = SolverStatus.CONVERGED
    except Diverged as exc:
        status, message = SolverStatus.DIVERGED, str(exc)
    except NumericalFailure as exc:
        status, message = SolverStatus.NUMERICAL_FAILURE, str(exc)

    return SolverResult(
        status=status,
        x_final=x,
        f_final=float(f),
        grad_norm_final=float(np.linalg.norm(g)),
        iterations=len(trace),
        wall_time=time.perf_counter() - start,
        trace=trace,
        solver=solver,
        problem=obj.name,
        t_final=t,
        message=message,
        factored_block_sizes=log.histogram(),
    )


def newton_damped_solve(
    obj: ObjectiveFunction,
    x0: np.ndarray,
    eta: float = 1e-12,
    max_iterations: int = 10000,
    ls: Optional[LineSearchConfig] = None,
) -> SolverResult:
    """Damped Newton-Raphson: full Cholesky solve each iteration, -grad on failure."""
    log = FactorizationLog()
    return _line_search_solve(obj, x0, eta, max_iterations, ls, "newton", _NewtonDirection(obj, log), log)


def bfgs_solve(
    obj: ObjectiveFunction,
    x0: np.ndarray,
    eta: float = 1e-12,
    max_iterations: int = 10000,
    ls: Optional[LineSearchConfig] = None,
) -> SolverResult:
    log = FactorizationLog()
    return _line_search_solve(obj, x0, eta, max_iterations, ls, "bfgs", _BFGSDirection(obj.dimension), log)


def sr1_solve(
    obj: ObjectiveFunction,
    x0: np.ndarray,
    eta: float = 1e-12,
    max_iterations: int = 10000,
    ls: Optional[LineSearchConfig] = None,
) -> SolverResult:
    log = FactorizationLog()
    return _line_search_solve(obj, x0, eta, max_iterations, ls, "sr1", _SR1Direction(obj.dimension, log), log)


def forward_euler_solve(
    obj: ObjectiveFunction,
    x0: np.ndarray,
    dt: Union[float, ForwardEulerPolicy, None] = None,
    eta: float = 1e-12,
    max_iterations: int = 10000,
) -> SolverResult:
    """Explicit Euler on the gradient flow, x <- x - dt * grad f(x).

    Args:
        obj: Objective
        x0: Start point
        dt: Fixed step, or a policy; bound_based uses safety * 2 / lambda_max(H(x))
        eta: Tolerance on ||grad f||^2
        max_iterations: Iteration cap N
    """
    if dt is None:
        policy = ForwardEulerPolicy()
    elif isinstance(dt, ForwardEulerPolicy):
        policy = dt
    else:
        policy = ForwardEulerPolicy(kind="fixed", dt=float(dt))

    start = time.perf_counter()
    x = np.asarray(x0, dtype=float).copy()
    trace: List[TraceRecord] = []
    t = 0.0
    status = SolverStatus.MAX_ITERATIONS
    message = None
    f, g = np.nan, np.full_like(x, np.nan)

    try:
        f, g = obj.value(x), obj.gradient(x)
        check_iterate(x, f, g)
        for k in range(max_iterations):
            if g @ g <= eta:
                break
            if policy.kind == "fixed":
                step = policy.dt
            else:
                try:
                    step = policy.safety * fe_stability_bound(obj, x)
                except NotApplicable as exc:
                    raise NumericalFailure(f"bound-based step undefined: {exc}") from exc
            x = x - step * g
            t += step
            f, g = obj.value(x), obj.gradient(x)
            check_iterate(x, f, g)
            trace.append(TraceRecord(
                iteration=k + 1, t=t, dt=step, f_value=f,
                grad_norm=float(np.linalg.norm(g)), step_kind="euler",
            ))
        if g @ g <= eta:
            status = SolverStatus.CONVERGED
    except Diverged as exc:
        status, message = SolverStatus.DIVERGED, str(exc)
    except NumericalFailure as exc:
        status, message = SolverStatus.NUMERICAL_FAILURE, str(exc)

    return SolverResult(
        status=status,
        x_final=x,
        f_final=float(f),
        grad_norm_final=float(np.linalg.norm(g)),
        iterations=len(trace),
        wall_time=time.perf_counter() - start,
        trace=trace,
        solver="forward_euler",
        problem=obj.name,
        t_final=t,
        message=message,
    )


class Trajectory(NamedTuple):
    t: np.ndarray  # (k,)
    x: np.ndarray  # (k, n)
    rejected: int


# Bogacki-Shampine 3(2), FSAL
BS_C = (0.0, 0.5, 0.75, 1.0)
BS_B = (2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0)
BS_E = (-5.0 / 72.0, 1.0 / 12.0, 1.0 / 9.0, -1.0 / 8.0)
MIN_STEP = 1e-14


def reference_integrate(
    obj: ObjectiveFunction,
    x0: np.ndarray,
    t_end: float,
    rel_tol: float = 1e-6,
    abs_tol: float = 1e-9,
    safety: float = 0.9,
    max_steps: int = 1_000_000,
) -> Trajectory:
    """Integrate x' = -grad f(x) on [0, t_end] with an adaptive embedded 3(2) pair.

    Step size follows a PI controller on the RMS error norm with per-component
    scale abs_tol + rel_tol * max(|x_old|, |x_new|).
    """

    def rhs(y: np.ndarray) -> np.ndarray:
        v = -obj.gradient(y)
        if not np.all(np.isfinite(v)):
            raise NumericalFailure("non-finite right-hand side")
        return v

    alpha, beta = 0.7 / 3.0, 0.4 / 3.0
    y = np.asarray(x0, dtype=float).copy()
    t = 0.0
    ts: List[float] = [t]
    ys: List[np.ndarray] = [y.copy()]
    k1 = rhs(y)

    scale0 = abs_tol + rel_tol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale0) ** 2))
    d1 = np.sqrt(np.mean((k1 / scale0) ** 2))
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    h = min(h, t_end) if t_end > 0 else 0.0
    err_prev = 1.0
    rejected = 0
    end_tol = MIN_STEP * max(1.0, abs(t_end))

    for _ in range(max_steps):
        if t_end - t <= end_tol:
            break
        if h < MIN_STEP:
            raise NumericalFailure(f"step size underflow at t={t:.6e} (h={h:.3e})")
        h = min(h, t_end - t)
        k2 = rhs(y + h * BS_C[1] * k1)
        k3 = rhs(y + h * BS_C[2] * k2)
        y_new = y + h * (BS_B[0] * k1 + BS_B[1] * k2 + BS_B[2] * k3)
        k4 = rhs(y_new)
        err = h * (BS_E[0] * k1 + BS_E[1] * k2 + BS_E[2] * k3 + BS_E[3] * k4)
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))

        if err_norm <= 1.0:
            t += h
            y, k1 = y_new, k4
            ts.append(t)
            ys.append(y.copy())
            if err_norm == 0.0:
                factor = 5.0
            else:
                factor = safety * err_norm ** (-alpha) * err_prev ** beta
            h *= min(5.0, max(0.2, factor))
            err_prev = max(err_norm, 1e-4)
        else:
            rejected += 1
            h *= max(0.2, safety * err_norm ** (-1.0 / 3.0))
    else:
        raise NumericalFailure(f"reference integrator exceeded {max_steps} steps")

    logger.debug("reference_integrate: %d accepted, %d rejected steps", len(ts) - 1, rejected)
    return Trajectory(np.asarray(ts), np.vstack(ys), rejected)
