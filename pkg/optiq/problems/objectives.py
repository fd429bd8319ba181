"""
Objective-function contract: value, gradient and Hessian handles for a point in R^n.
"""
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from optiq.errors import ContractError
from optiq.linalg.dense import extract_blocks

ScalarFn = Callable[[np.ndarray], float]
VectorFn = Callable[[np.ndarray], np.ndarray]
MatrixFn = Callable[[np.ndarray], np.ndarray]


class ObjectiveFunction:
    """Twice-differentiable objective f: R^n -> R with analytic derivatives.

    Evaluation is pure: nothing is cached on the instance, so one objective
    can be shared between concurrent solver runs.
    """

    def __init__(
        self,
        dimension: int,
        value: ScalarFn,
        gradient: VectorFn,
        hessian: MatrixFn,
        name: str = "objective",
        default_start: Optional[Sequence[float]] = None,
        quadratic_matrix: Optional[np.ndarray] = None,
        linear_term: Optional[np.ndarray] = None,
    ):
        if dimension < 1:
            raise ContractError(f"dimension must be positive, got {dimension}")
        self.dimension = int(dimension)
        self._value = value
        self._gradient = gradient
        self._hessian = hessian
        self.name = name
        self.default_start = (
            np.zeros(self.dimension) if default_start is None
            else np.asarray(default_start, dtype=float).copy()
        )
        # Constant Hessian Q and linear term b when f = 1/2 x'Qx + b'x + c
        self.quadratic_matrix = quadratic_matrix
        self.linear_term = linear_term

    @property
    def is_quadratic(self) -> bool:
        return self.quadratic_matrix is not None

    def _check_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ContractError(f"{self.name}: expected point of shape ({self.dimension},), got {x.shape}")
        return x

    def value(self, x: np.ndarray) -> float:
        return float(self._value(self._check_point(x)))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        g = np.asarray(self._gradient(self._check_point(x)), dtype=float).reshape(-1)
        if g.shape != (self.dimension,):
            raise ContractError(f"{self.name}: gradient has shape {g.shape}")
        return g

    def hessian(self, x: np.ndarray) -> np.ndarray:
        H = np.asarray(self._hessian(self._check_point(x)), dtype=float)
        if H.shape != (self.dimension, self.dimension):
            raise ContractError(f"{self.name}: hessian has shape {H.shape}")
        return 0.5 * (H + H.T)

    def hessian_blocks(
        self, x: np.ndarray, q_idx: Sequence[int], nq_idx: Sequence[int]
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Return (H_qq, H_q_nq, H_nq_nq, H_nq_q) at x."""
        return extract_blocks(self.hessian(x), q_idx, nq_idx)

    def __repr__(self) -> str:
        return f"ObjectiveFunction(name={self.name!r}, dimension={self.dimension})"


def make_quadratic(
    Q: np.ndarray,
    b: Optional[np.ndarray] = None,
    constant: float = 0.0,
    name: str = "quadratic",
    default_start: Optional[Sequence[float]] = None,
) -> ObjectiveFunction:
    """Build f(x) = 1/2 x'Qx + b'x + c for a symmetric Q."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ContractError(f"Q must be square, got shape {Q.shape}")
    Q = 0.5 * (Q + Q.T)
    n = Q.shape[0]
    b = np.zeros(n) if b is None else np.asarray(b, dtype=float).reshape(-1)
    if b.shape != (n,):
        raise ContractError(f"b must have length {n}")

    return ObjectiveFunction(
        dimension=n,
        value=lambda x: 0.5 * x @ Q @ x + b @ x + constant,
        gradient=lambda x: Q @ x + b,
        hessian=lambda x: Q.copy(),
        name=name,
        default_start=default_start,
        quadratic_matrix=Q,
        linear_term=b,
    )


def fd_step(x: np.ndarray) -> np.ndarray:
    """Central-difference step h = 1e-6 * (1 + |x_i|)."""
    return 1e-6 * (1.0 + np.abs(x))


def finite_difference_gradient(value: ScalarFn, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    h = fd_step(x)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        g[i] = (value(x + e) - value(x - e)) / (2.0 * h[i])
    return g


def finite_difference_jacobian(fn: VectorFn, x: np.ndarray) -> np.ndarray:
    """Central differences of a vector function; column j is d fn / d x_j."""
    x = np.asarray(x, dtype=float)
    h = fd_step(x)
    columns = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h[j]
        columns.append((np.asarray(fn(x + e), dtype=float) - np.asarray(fn(x - e), dtype=float)) / (2.0 * h[j]))
    return np.stack(columns, axis=-1)


def finite_difference_hessian(gradient: VectorFn, x: np.ndarray) -> np.ndarray:
    """Symmetrized central differences of an analytic gradient."""
    H = finite_difference_jacobian(gradient, x)
    return 0.5 * (H + H.T)
