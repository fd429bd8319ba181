"""
OptiQ: follow the gradient flow by forcing its fastest variables into quiescence one group at a time.

Each iteration estimates a time constant -xdot/xddot for every non-quiescent
variable, steps forward by the smallest admissible one and promotes the
variables that reach it. Quiescent variables are slaved to the rest through
the principal Hessian block, so only |Q| x |Q| systems are ever factored.
"""
import logging
import time
from typing import List, Optional, Sequence, Tuple

import numpy as np

from optiq.errors import ContractError, Diverged, LineSearchFailure, NumericalFailure, SafeguardNeeded
from optiq.linalg.dense import FactorizationLog, extract_blocks, solve_spd_with_fallback
from optiq.problems.objectives import ObjectiveFunction
from optiq.schemas import (
    LineSearchConfig,
    OptiQConfig,
    QuiescenceStep,
    SolverResult,
    SolverState,
    SolverStatus,
    TraceRecord,
)
from optiq.services.baseline_solvers import armijo_backtrack, check_iterate
from optiq.services.diagnostics import lyapunov_value

logger = logging.getLogger(__name__)


def quiescent_velocity(
    H_qq: np.ndarray,
    H_q_nq: np.ndarray,
    xdot_nq: np.ndarray,
    regularization_seed: float = 1e-10,
    log: Optional[FactorizationLog] = None,
) -> np.ndarray:
    """Solve H_qq xdot_q = -H_q_nq xdot_nq, factoring the principal block only."""
    H_qq = np.atleast_2d(np.asarray(H_qq, dtype=float))
    if H_qq.size == 0:
        return np.zeros(0)
    xdot_nq = np.asarray(xdot_nq, dtype=float).reshape(-1)
    if xdot_nq.size == 0:
        return np.zeros(H_qq.shape[0])
    rhs = -np.asarray(H_q_nq, dtype=float).reshape(H_qq.shape[0], -1) @ xdot_nq
    return solve_spd_with_fallback(H_qq, rhs, regularization_seed, log).solution


def _partial_dynamics(
    obj: ObjectiveFunction,
    x: np.ndarray,
    q: Sequence[int],
    nq: Sequence[int],
    regularization_seed: float,
    log: Optional[FactorizationLog],
    g: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (xdot_nq, xdot_q, xddot_nq) for the partition q / nq at x."""
    g = obj.gradient(x) if g is None else g
    H = obj.hessian(x)
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(H))):
        raise NumericalFailure(f"non-finite gradient or Hessian at x={x}")
    H_qq, H_q_nq, H_nq_nq, H_nq_q = extract_blocks(H, q, nq)

    xdot_nq = -g[list(nq)]
    xdot_q = quiescent_velocity(H_qq, H_q_nq, xdot_nq, regularization_seed, log)
    xddot_nq = -(H_nq_nq @ xdot_nq + H_nq_q @ xdot_q)
    return xdot_nq, xdot_q, xddot_nq


def nonquiescent_dynamics(
    obj: ObjectiveFunction,
    state: SolverState,
    regularization_seed: float = 1e-10,
    log: Optional[FactorizationLog] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Velocity -df/dx_nq and acceleration -(H_nn xdot_nq + H_nq xdot_q) of the free variables."""
    nq = state.nonquiescent()
    if not nq:
        raise ContractError("nonquiescent_dynamics needs at least one non-quiescent variable")
    xdot_nq, _, xddot_nq = _partial_dynamics(obj, state.x, state.quiescent, nq, regularization_seed, log)
    return xdot_nq, xddot_nq


def estimate_time_constants(
    xdot_nq: np.ndarray, xddot_nq: np.ndarray, velocity_floor: float = 1e-14
) -> np.ndarray:
    """tau_i = -xdot_i / xddot_i; inadmissible entries are NaN.

    Inadmissible: |xdot_i| below the floor, xddot_i == 0, or tau_i <= 0.
    """
    xdot_nq = np.asarray(xdot_nq, dtype=float)
    xddot_nq = np.asarray(xddot_nq, dtype=float)
    if xdot_nq.shape != xddot_nq.shape:
        raise ContractError(f"length mismatch: {xdot_nq.shape} vs {xddot_nq.shape}")

    tau = np.full(xdot_nq.shape, np.nan)
    usable = (np.abs(xdot_nq) >= velocity_floor) & (xddot_nq != 0.0)
    with np.errstate(over="ignore"):
        tau[usable] = -xdot_nq[usable] / xddot_nq[usable]
    tau[~np.isfinite(tau) | (tau <= 0.0)] = np.nan
    return tau


def select_promotion(tau_tilde: np.ndarray, tau_grouping_rtol: float = 1e-9) -> Tuple[float, List[int]]:
    """dt = min admissible tau; promote every position with tau <= dt (1 + rtol)."""
    tau_tilde = np.asarray(tau_tilde, dtype=float)
    admissible = np.isfinite(tau_tilde)
    if not np.any(admissible):
        raise SafeguardNeeded("no admissible time constant")
    dt = float(np.min(tau_tilde[admissible]))
    promoted = np.flatnonzero(admissible & (tau_tilde <= dt * (1.0 + tau_grouping_rtol)))
    return dt, promoted.tolist()


def apply_step(
    state: SolverState,
    dt: float,
    xdot_q: np.ndarray,
    xdot_nq: np.ndarray,
    promoted: Sequence[int] = (),
) -> SolverState:
    """Advance both partitions by dt times their velocities, then add ``promoted`` to Q.

    Velocities are ordered like ``state.quiescent`` and ``state.nonquiescent()``.
    """
    if not dt > 0.0:
        raise ContractError(f"dt must be positive, got {dt}")
    q, nq = state.quiescent, state.nonquiescent()
    xdot_q = np.asarray(xdot_q, dtype=float).reshape(-1)
    xdot_nq = np.asarray(xdot_nq, dtype=float).reshape(-1)
    if xdot_q.size != len(q) or xdot_nq.size != len(nq):
        raise ContractError("velocity lengths do not match the quiescent partition")

    x = state.x.copy()
    x[q] += dt * xdot_q
    x[nq] += dt * xdot_nq
    if not np.all(np.isfinite(x)):
        raise Diverged(f"non-finite iterate after step of {dt:.3e}")
    return SolverState(
        x=x,
        t=state.t + dt,
        quiescent=[*q, *promoted],
        iteration=state.iteration + 1,
    )


def dequiescence_check(
    obj: ObjectiveFunction,
    x_old_q: np.ndarray,
    state_new: SolverState,
    dt: float,
    eta: float,
    max_iterations: int,
    *,
    q_idx: Optional[Sequence[int]] = None,
    measure: str = "trajectory",
    grad_old_q: Optional[np.ndarray] = None,
    grad_new: Optional[np.ndarray] = None,
    floor: float = 0.0,
) -> List[int]:
    """Indices of Q whose error exceeds max(eta / N, floor).

    measure="trajectory": |(x_q(t+dt) - x_q(t)) / dt + df/dx_q(x(t+dt))|
    measure="drift": |df/dx_q(x(t+dt)) - df/dx_q(x(t))|, needs grad_old_q
    """
    if not dt > 0.0:
        raise ContractError(f"dt must be positive, got {dt}")
    q = list(state_new.quiescent if q_idx is None else q_idx)
    if not q:
        return []
    g_new = obj.gradient(state_new.x) if grad_new is None else grad_new

    if measure == "trajectory":
        mean_velocity = (state_new.x[q] - np.asarray(x_old_q, dtype=float)) / dt
        err = np.abs(mean_velocity + g_new[q])
    elif measure == "drift":
        if grad_old_q is None:
            raise ContractError("drift measure needs grad_old_q")
        err = np.abs(g_new[q] - np.asarray(grad_old_q, dtype=float))
    else:
        raise ContractError(f"unknown de-quiescence measure {measure!r}")

    threshold = max(eta / max_iterations, floor)
    return [i for i, e in zip(q, err) if e > threshold]


def time_constants_at(obj: ObjectiveFunction, x: np.ndarray, velocity_floor: float = 1e-14) -> np.ndarray:
    """Per-variable tau with every variable non-quiescent."""
    state = SolverState(x=np.asarray(x, dtype=float))
    xdot, xddot = nonquiescent_dynamics(obj, state)
    return estimate_time_constants(xdot, xddot, velocity_floor)


def _largest_gradient_group(g: np.ndarray, rtol: float) -> List[int]:
    mag = np.abs(g)
    return np.flatnonzero(mag >= mag.max() / (1.0 + rtol)).tolist()


def quiescence_step(
    obj: ObjectiveFunction,
    state: SolverState,
    config: OptiQConfig,
    log: Optional[FactorizationLog] = None,
    g: Optional[np.ndarray] = None,
) -> QuiescenceStep:
    """Dynamics, time constants and promotion for one iteration (raises SafeguardNeeded)."""
    xdot_nq, xdot_q, xddot_nq = _partial_dynamics(
        obj, state.x, state.quiescent, state.nonquiescent(), config.regularization_seed, log, g
    )
    tau = estimate_time_constants(xdot_nq, xddot_nq, config.velocity_floor)
    dt, local = select_promotion(tau, config.tau_grouping_rtol)
    nq = state.nonquiescent()
    return QuiescenceStep(
        dt=dt, promoted=[nq[i] for i in local], xdot_nq=xdot_nq, xdot_q=xdot_q, tau_tilde=tau
    )


def increase_acceptable(f_old: float, f_new: float, config: OptiQConfig) -> bool:
    """A quiescence step may raise f by at most eta / N plus round-off."""
    budget = config.eta / config.max_iterations + 1e-12 * max(1.0, abs(f_old))
    return bool(np.isfinite(f_new) and f_new - f_old <= budget)


def _gradient_step(
    obj: ObjectiveFunction, state: SolverState, g: np.ndarray, f: float, ls: LineSearchConfig
) -> SolverState:
    alpha = armijo_backtrack(obj, state.x, -g, ls, f, g)
    return SolverState(
        x=state.x - alpha * g,
        t=state.t + alpha,
        quiescent=state.quiescent,
        iteration=state.iteration + 1,
    )


def _damped_step(
    obj: ObjectiveFunction,
    state: SolverState,
    step: QuiescenceStep,
    g: np.ndarray,
    f: float,
    ls: LineSearchConfig,
) -> Tuple[SolverState, float, str]:
    """Backtrack along the rejected quiescence step; -grad f when that is not a descent direction."""
    direction = np.zeros_like(state.x)
    direction[state.quiescent] = step.dt * step.xdot_q
    direction[state.nonquiescent()] = step.dt * step.xdot_nq
    if g @ direction < 0.0:
        try:
            alpha = armijo_backtrack(obj, state.x, direction, ls, f, g)
            damped = SolverState(
                x=state.x + alpha * direction,
                t=state.t + alpha * step.dt,
                quiescent=state.quiescent,
                iteration=state.iteration + 1,
            )
            return damped, alpha * step.dt, "damped"
        except LineSearchFailure:
            logger.debug("no sufficient decrease along the quiescence step; using -grad f")
    new_state = _gradient_step(obj, state, g, f, ls)
    return new_state, new_state.t - state.t, "safeguard"


def solve(
    obj: ObjectiveFunction,
    x0: np.ndarray,
    config: Optional[OptiQConfig] = None,
    ls: Optional[LineSearchConfig] = None,
) -> SolverResult:
    """Run OptiQ from x0 until ||grad f||^2 <= eta or N iterations.

    Args:
        obj: Objective with analytic gradient and Hessian
        x0: Start point; every variable starts non-quiescent
        config: Tolerances and quiescence controls
        ls: Line search for the safeguarded gradient step

    Returns:
        SolverResult with one TraceRecord per iteration
    """
    config = config or OptiQConfig()
    ls = ls or LineSearchConfig()
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != obj.dimension:
        raise ContractError(f"x0 has length {x0.size}, objective has dimension {obj.dimension}")

    log = FactorizationLog()
    start = time.perf_counter()
    state = SolverState(x=x0.copy())
    trace: List[TraceRecord] = []
    status = SolverStatus.MAX_ITERATIONS
    message = None
    f, g = np.nan, np.full_like(x0, np.nan)
    measure = config.dequiescence_measure
    if measure == "auto":
        measure = "drift" if obj.is_quadratic else "trajectory"
    record: Optional[List[np.ndarray]] = [x0.copy()] if config.record_iterates else None
    logger.info("optiq: %s (n=%d), eta=%.1e, N=%d", obj.name, obj.dimension, config.eta, config.max_iterations)

    try:
        if not np.all(np.isfinite(x0)):
            raise NumericalFailure("x0 has non-finite entries")
        f, g = obj.value(state.x), obj.gradient(state.x)
        check_iterate(state.x, f, g)

        for _ in range(config.max_iterations):
            if g @ g <= config.eta:
                break

            demoted = 0
            if not state.nonquiescent():
                group = _largest_gradient_group(g, config.tau_grouping_rtol)
                state = state.model_copy(update={"quiescent": [i for i in state.quiescent if i not in group]})
                demoted += len(group)
                logger.debug("all variables quiescent with ||g||=%.3e; released %s", np.linalg.norm(g), group)

            old_q = list(state.quiescent)
            x_old_q = state.x[old_q]
            nq = state.nonquiescent()
            lyapunov = lyapunov_value(g[nq])

            try:
                step = quiescence_step(obj, state, config, log, g)
                new_state = apply_step(state, step.dt, step.xdot_q, step.xdot_nq, step.promoted)
                dt, promoted, kind = step.dt, step.promoted, "quiescence"
                f_new = obj.value(new_state.x)
                if not increase_acceptable(f, f_new, config):
                    logger.debug("quiescence step dt=%.3e raised f %.3e -> %.3e; damping",
                                 step.dt, f, f_new)
                    new_state, dt, kind = _damped_step(obj, state, step, g, f, ls)
                    promoted = []
            except SafeguardNeeded:
                new_state = _gradient_step(obj, state, g, f, ls)
                dt, promoted, kind = new_state.t - state.t, [], "safeguard"
                logger.debug("safeguard gradient step alpha=%.3e at iteration %d", dt, new_state.iteration)

            f_new, g_new = obj.value(new_state.x), obj.gradient(new_state.x)
            check_iterate(new_state.x, f_new, g_new)
            if record is not None:
                record.append(new_state.x.copy())

            nq_after = new_state.nonquiescent()
            floor = config.dequiescence_ratio * float(np.max(np.abs(g_new[nq_after]))) if nq_after else 0.0
            released = dequiescence_check(
                obj, x_old_q, new_state, dt, config.eta, config.max_iterations,
                q_idx=old_q,
                measure=measure,
                grad_old_q=g[old_q],
                grad_new=g_new,
                floor=floor,
            )
            if released:
                keep = set(new_state.quiescent) - set(released)
                new_state = new_state.model_copy(update={"quiescent": sorted(keep)})
                demoted += len(released)

            state, f, g = new_state, f_new, g_new
            trace.append(TraceRecord(
                iteration=state.iteration,
                t=state.t,
                dt=dt,
                f_value=f,
                grad_norm=float(np.linalg.norm(g)),
                quiescent_count=len(state.quiescent),
                demoted_count=demoted,
                promoted_count=len(promoted),
                step_kind=kind,
                lyapunov=lyapunov,
            ))

        if g @ g <= config.eta:
            status = SolverStatus.CONVERGED
    except Diverged as exc:
        status, message = SolverStatus.DIVERGED, str(exc)
    except NumericalFailure as exc:
        status, message = SolverStatus.NUMERICAL_FAILURE, str(exc)

    wall_time = time.perf_counter() - start
    logger.info("optiq: %s after %d iterations (largest factored block %d)", status.value, len(trace), log.max_size)
    return SolverResult(
        status=status,
        x_final=state.x,
        f_final=float(f),
        grad_norm_final=float(np.linalg.norm(g)),
        iterations=len(trace),
        wall_time=wall_time,
        trace=trace,
        solver="optiq",
        problem=obj.name,
        t_final=state.t,
        message=message,
        factored_block_sizes=log.histogram(),
        iterates=np.vstack(record) if record is not None else None,
    )
