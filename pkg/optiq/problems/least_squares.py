"""
Nonlinear least-squares objectives f(x) = ||r(x)||^2 and the synthetic mismatch family.
"""
from typing import Callable, Optional, Sequence

import numpy as np

from optiq.errors import ContractError, NumericalFailure
from optiq.problems.objectives import ObjectiveFunction, finite_difference_jacobian


def make_least_squares(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    dimension: int,
    residual_hessians: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    name: str = "least_squares",
    default_start: Optional[Sequence[float]] = None,
) -> ObjectiveFunction:
    """Wrap a residual r: R^n -> R^m with Jacobian J as f = ||r||^2.

    Args:
        residual: r(x), shape (m,)
        jacobian: J(x), shape (m, n)
        dimension: n
        residual_hessians: optional stack of second derivatives, shape (m, n, n);
            central differences of J are used when omitted
        name: Problem name carried into reports
        default_start: Start point used when none is given

    Returns:
        ObjectiveFunction with gradient 2J'r and Hessian 2J'J + 2 sum_i r_i d2r_i
    """

    def r_at(x):
        r = np.atleast_1d(np.asarray(residual(x), dtype=float))
        if r.ndim != 1 or r.size < 1:
            raise ContractError(f"{name}: residual must be a nonempty vector, got shape {r.shape}")
        if not np.all(np.isfinite(r)):
            raise NumericalFailure(f"{name}: non-finite residual at x={x}")
        return r

    def J_at(x, m):
        J = np.asarray(jacobian(x), dtype=float).reshape(m, dimension)
        if not np.all(np.isfinite(J)):
            raise NumericalFailure(f"{name}: non-finite Jacobian at x={x}")
        return J

    def value(x):
        r = r_at(x)
        return float(r @ r)

    def gradient(x):
        r = r_at(x)
        return 2.0 * J_at(x, r.size).T @ r

    def hessian(x):
        r = r_at(x)
        J = J_at(x, r.size)
        if residual_hessians is not None:
            second = np.asarray(residual_hessians(x), dtype=float).reshape(r.size, dimension, dimension)
        else:
            # second[i, k, j] = d J[i, k] / d x_j
            second = finite_difference_jacobian(lambda z: J_at(z, r.size), x)
        H = 2.0 * J.T @ J + 2.0 * np.einsum("i,ikj->kj", r, second)
        return 0.5 * (H + H.T)

    return ObjectiveFunction(dimension, value, gradient, hessian, name=name, default_start=default_start)


def make_synthetic_least_squares(n: int = 16, seed: Optional[int] = None) -> ObjectiveFunction:
    """Broyden tridiagonal mismatch equations, optionally with a seeded load offset.

    r_i = (3 - 2 x_i) x_i - x_{i-1} - 2 x_{i+1} + 1 + d_i with x_0 = x_{n+1} = 0
    and d_i uniform in [-1e-2, 1e-2] when a seed is given (zero otherwise).
    """
    load = np.zeros(n) if seed is None else np.random.default_rng(seed).uniform(-1e-2, 1e-2, size=n)

    def residual(x):
        left = np.concatenate(([0.0], x[:-1]))
        right = np.concatenate((x[1:], [0.0]))
        return (3.0 - 2.0 * x) * x - left - 2.0 * right + 1.0 + load

    def jacobian(x):
        return np.diag(3.0 - 4.0 * x) + np.diag(-np.ones(n - 1), -1) + np.diag(-2.0 * np.ones(n - 1), 1)

    def residual_hessians(x):
        second = np.zeros((n, n, n))
        idx = np.arange(n)
        second[idx, idx, idx] = -4.0
        return second

    return make_least_squares(
        residual, jacobian, n,
        residual_hessians=residual_hessians,
        name="least_squares_synthetic",
        default_start=-np.ones(n),
    )


def circle_line_residual() -> ObjectiveFunction:
    """r(x) = (x1^2 + x2^2 - 4, x1 - x2); roots at +-(sqrt 2, sqrt 2)."""
    return make_least_squares(
        residual=lambda x: np.array([x[0] ** 2 + x[1] ** 2 - 4.0, x[0] - x[1]]),
        jacobian=lambda x: np.array([[2.0 * x[0], 2.0 * x[1]], [1.0, -1.0]]),
        dimension=2,
        name="circle_line",
        default_start=[1.0, 0.5],
    )
