"""
Analysis quantities and closed-form oracles: Lyapunov value, FE stability bound, step-size bounds.
"""
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.linalg import eigh

from optiq.errors import ContractError, NotApplicable
from optiq.linalg.dense import max_eigenvalue
from optiq.problems.objectives import ObjectiveFunction
from optiq.schemas import StepBoundFlag, TraceRecord

BOUND_RTOL = 1e-9


def lyapunov_value(xdot: np.ndarray) -> float:
    """V = 1/2 ||xdot||^2."""
    xdot = np.asarray(xdot, dtype=float)
    return 0.5 * float(xdot @ xdot)


def fe_stability_bound(obj: ObjectiveFunction, x: np.ndarray) -> float:
    """Largest stable forward-Euler step 2 / lambda_max(H(x))."""
    lam = max_eigenvalue(obj.hessian(x)).value
    if lam <= 0.0:
        raise NotApplicable(f"largest Hessian eigenvalue {lam:.6e} is not positive at x={np.asarray(x)}")
    return 2.0 / lam


def quadratic_eigenvalues(obj: ObjectiveFunction) -> Optional[np.ndarray]:
    """Ascending eigenvalues of the constant Hessian, or None for non-quadratic objectives."""
    if not obj.is_quadratic:
        return None
    return eigh(obj.quadratic_matrix, eigvals_only=True)


def gradient_flow_oracle_quadratic(
    Q: np.ndarray, b: np.ndarray, x0: np.ndarray, t: Union[float, Sequence[float]]
) -> np.ndarray:
    """Closed-form solution of x' = -(Qx + b) for symmetric positive-definite Q.

    Returns shape (n,) for scalar t and (len(t), n) for a sequence of times.
    """
    Q = np.asarray(Q, dtype=float)
    lam, V = eigh(Q)
    if lam[0] <= 0.0:
        raise ContractError("gradient-flow oracle needs a positive-definite Q")
    x_star = -np.linalg.solve(Q, np.asarray(b, dtype=float))
    c = V.T @ (np.asarray(x0, dtype=float) - x_star)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    states = x_star + (np.exp(-np.outer(times, lam)) * c) @ V.T
    return states[0] if np.ndim(t) == 0 else states


def step_bound_report(
    trace: Sequence[TraceRecord], eigenvalues: Optional[Sequence[float]]
) -> List[StepBoundFlag]:
    """Check 1/lambda_max <= dt <= (1/lambda_min)(1 + 1e-9) for every quiescence-driven step.

    Only quadratic problems (eigenvalues given) are checked; everything else is
    reported as "not checked".
    """
    if eigenvalues is None:
        return [StepBoundFlag(iteration=r.iteration, dt=r.dt) for r in trace]

    lam = np.asarray(eigenvalues, dtype=float)
    lower, upper = 1.0 / lam.max(), 1.0 / lam.min()
    flags = []
    for record in trace:
        if record.step_kind != "quiescence":
            flags.append(StepBoundFlag(iteration=record.iteration, dt=record.dt))
            continue
        dt = record.dt
        lower_ok = dt >= lower * (1.0 - BOUND_RTOL)
        upper_ok = dt <= upper * (1.0 + BOUND_RTOL)
        if not lower_ok:
            verdict = "fail-lower"
        elif not upper_ok:
            verdict = "fail-upper"
        elif np.isclose(dt, lower, rtol=BOUND_RTOL, atol=0.0) or np.isclose(dt, upper, rtol=BOUND_RTOL, atol=0.0):
            verdict = "pass-with-equality"
        else:
            verdict = "pass"
        flags.append(StepBoundFlag(
            iteration=record.iteration, dt=dt, lower_bound=lower, upper_bound=upper,
            lower_ok=lower_ok, upper_ok=upper_ok, verdict=verdict,
        ))
    return flags
