"""
Dense symmetric linear algebra: block extraction, instrumented factorization, power iteration.
"""
import logging
from collections import Counter
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, lu_factor, lu_solve, solve

from optiq.errors import ContractError, NumericalFailure

logger = logging.getLogger(__name__)

MAX_SHIFT_DOUBLINGS = 40


class BlockView:
    """Rows ``row_idx`` and columns ``col_idx`` of a square matrix."""

    def __init__(self, source: np.ndarray, row_idx: Sequence[int], col_idx: Sequence[int]):
        n = source.shape[0]
        for label, idx in (("row_idx", row_idx), ("col_idx", col_idx)):
            if len(set(idx)) != len(idx):
                raise ContractError(f"{label} contains duplicates: {list(idx)}")
            if any(i < 0 or i >= n for i in idx):
                raise ContractError(f"{label} out of range for n={n}: {list(idx)}")
        self.source = source
        self.row_idx = np.asarray(row_idx, dtype=int)
        self.col_idx = np.asarray(col_idx, dtype=int)

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.row_idx.size, self.col_idx.size)

    def dense(self) -> np.ndarray:
        return self.source[np.ix_(self.row_idx, self.col_idx)].copy()


def extract_blocks(
    H: np.ndarray, q_idx: Sequence[int], nq_idx: Sequence[int]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Split H into (H_qq, H_q_nq, H_nq_nq, H_nq_q) for a partition q/nq of its indices."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {H.shape}")
    q_idx = [int(i) for i in q_idx]
    nq_idx = [int(i) for i in nq_idx]
    if set(q_idx) & set(nq_idx):
        raise ContractError("q_idx and nq_idx overlap")
    if sorted(q_idx + nq_idx) != list(range(H.shape[0])):
        raise ContractError(f"q_idx and nq_idx must partition range({H.shape[0]})")

    return (
        BlockView(H, q_idx, q_idx).dense(),
        BlockView(H, q_idx, nq_idx).dense(),
        BlockView(H, nq_idx, nq_idx).dense(),
        BlockView(H, nq_idx, q_idx).dense(),
    )


class FactorizationLog:
    """Per-run record of the sizes of every matrix handed to a factorization."""

    def __init__(self):
        self.sizes: List[int] = []

    def record(self, size: int) -> None:
        self.sizes.append(int(size))

    @property
    def max_size(self) -> int:
        return max(self.sizes, default=0)

    def histogram(self) -> Dict[int, int]:
        return dict(sorted(Counter(self.sizes).items()))


class SPDSolve(NamedTuple):
    solution: np.ndarray
    shift_used: float
    size: int
    method: str  # "cholesky", "shifted_cholesky" or "lu"


def _cholesky(A: np.ndarray):
    try:
        return cho_factor(A, lower=True, check_finite=True)
    except (LinAlgError, ValueError):
        return None


def solve_spd_with_fallback(
    A: np.ndarray,
    rhs: np.ndarray,
    shift_seed: float = 1e-10,
    log: Optional[FactorizationLog] = None,
) -> SPDSolve:
    """Solve A x = rhs for symmetric A, regularizing when A is not positive definite.

    Tries Cholesky first, then Cholesky of A + mu*I with mu doubling from
    shift_seed * max(1, max|A_ii|), then a pivoted LU of the unshifted A.
    """
    A = np.asarray(A, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or rhs.shape[0] != n:
        raise ContractError(f"shape mismatch: A {A.shape}, rhs {rhs.shape}")
    if log is not None:
        log.record(n)
    if n == 0:
        return SPDSolve(rhs.copy(), 0.0, 0, "cholesky")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(rhs))):
        raise NumericalFailure("non-finite entries in linear system")

    factor = _cholesky(A)
    if factor is not None:
        return SPDSolve(cho_solve(factor, rhs), 0.0, n, "cholesky")

    mu = shift_seed * max(1.0, float(np.max(np.abs(np.diag(A)))))
    eye = np.eye(n)
    for _ in range(MAX_SHIFT_DOUBLINGS):
        factor = _cholesky(A + mu * eye)
        if factor is not None:
            logger.debug("regularized %dx%d block with shift %.3e", n, n, mu)
            return SPDSolve(cho_solve(factor, rhs), mu, n, "shifted_cholesky")
        mu *= 2.0

    logger.warning("shifted Cholesky failed for %dx%d block; falling back to LU", n, n)
    try:
        lu, piv = lu_factor(A, check_finite=True)
    except (LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"LU factorization failed: {exc}") from exc
    if np.any(np.diag(lu) == 0.0):
        raise NumericalFailure(f"singular {n}x{n} matrix beyond all fallbacks")
    solution = lu_solve((lu, piv), rhs)
    if not np.all(np.isfinite(solution)):
        raise NumericalFailure("non-finite solution from LU fallback")
    return SPDSolve(solution, 0.0, n, "lu")


def solve_cholesky(
    A: np.ndarray, rhs: np.ndarray, log: Optional[FactorizationLog] = None
) -> Optional[np.ndarray]:
    """Cholesky solve with no regularization; None when A is not positive definite."""
    A = np.asarray(A, dtype=float)
    if log is not None:
        log.record(A.shape[0])
    factor = _cholesky(A)
    if factor is None:
        return None
    solution = cho_solve(factor, np.asarray(rhs, dtype=float))
    return solution if np.all(np.isfinite(solution)) else None


def solve_symmetric(
    A: np.ndarray, rhs: np.ndarray, log: Optional[FactorizationLog] = None
) -> Optional[np.ndarray]:
    """Symmetric-indefinite (LDL') solve with no regularization; None when A is singular."""
    A = np.asarray(A, dtype=float)
    if log is not None:
        log.record(A.shape[0])
    try:
        solution = solve(A, np.asarray(rhs, dtype=float), assume_a="sym", check_finite=True)
    except (LinAlgError, ValueError):
        return None
    return solution if np.all(np.isfinite(solution)) else None


class EigenEstimate(NamedTuple):
    value: float
    converged: bool
    iterations: int


def _power_iteration(B: np.ndarray, v: np.ndarray, tol: float, max_iter: int) -> Tuple[float, bool, int]:
    v = v / np.linalg.norm(v)
    rq = float(v @ B @ v)
    for k in range(1, max_iter + 1):
        w = B @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, True, k
        v = w / norm
        rq_next = float(v @ B @ v)
        if abs(rq_next - rq) < tol * (1.0 + abs(rq_next)):
            return rq_next, True, k
        rq = rq_next
    return rq, False, max_iter


def max_eigenvalue(H: np.ndarray, tol: float = 1e-12, max_iter: int = 10000) -> EigenEstimate:
    """Largest (algebraic) eigenvalue of a symmetric matrix by shifted power iteration.

    The Gershgorin radius R makes H + R*I positive semidefinite so its dominant
    eigenvalue is lambda_max + R. Iteration starts from the normalized all-ones
    vector and from e_1; the larger Rayleigh quotient is kept, which covers an
    all-ones start orthogonal to the dominant eigenvector.
    """
    H = np.asarray(H, dtype=float)
    n = H.shape[0]
    if H.shape != (n, n) or n == 0:
        raise ContractError(f"expected a nonempty square matrix, got shape {H.shape}")
    H = 0.5 * (H + H.T)
    radius = float(np.max(np.sum(np.abs(H), axis=1)))
    B = H + radius * np.eye(n)

    ones_rq, ones_ok, ones_it = _power_iteration(B, np.ones(n), tol, max_iter)
    e1 = np.zeros(n)
    e1[0] = 1.0
    e1_rq, e1_ok, e1_it = _power_iteration(B, e1, tol, max_iter)

    if e1_rq > ones_rq + tol * (1.0 + abs(ones_rq)):
        return EigenEstimate(e1_rq - radius, e1_ok, e1_it)
    return EigenEstimate(ones_rq - radius, ones_ok, ones_it)
