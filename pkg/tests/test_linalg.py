import numpy as np
import pytest
from scipy.linalg import eigh

from optiq.errors import ContractError, NumericalFailure
from optiq.linalg.dense import (
    FactorizationLog,
    extract_blocks,
    max_eigenvalue,
    solve_cholesky,
    solve_spd_with_fallback,
    solve_symmetric,
)

QUADRATIC_HESSIAN = np.array([[101.0, -100.0], [-100.0, 100.0]])


class TestExtractBlocks:
    def test_identity(self):
        H_qq, H_q_nq, H_nq_nq, H_nq_q = extract_blocks(np.eye(2), [0], [1])
        np.testing.assert_array_equal(H_qq, [[1.0]])
        np.testing.assert_array_equal(H_q_nq, [[0.0]])
        np.testing.assert_array_equal(H_nq_nq, [[1.0]])
        np.testing.assert_array_equal(H_nq_q, [[0.0]])

    def test_quadratic_example(self):
        H_qq, H_q_nq, _, H_nq_q = extract_blocks(QUADRATIC_HESSIAN, [0], [1])
        np.testing.assert_array_equal(H_qq, [[101.0]])
        np.testing.assert_array_equal(H_q_nq, [[-100.0]])
        np.testing.assert_array_equal(H_nq_q, H_q_nq.T)

    def test_empty_quiescent_set(self):
        H_qq, H_q_nq, H_nq_nq, H_nq_q = extract_blocks(QUADRATIC_HESSIAN, [], [0, 1])
        assert H_qq.shape == (0, 0)
        assert H_q_nq.shape == (0, 2)
        assert H_nq_q.shape == (2, 0)
        np.testing.assert_array_equal(H_nq_nq, QUADRATIC_HESSIAN)

    def test_reassembly_is_exact(self, rng):
        M = rng.standard_normal((7, 7))
        H = M + M.T
        perm = rng.permutation(7)
        q, nq = sorted(perm[:3].tolist()), sorted(perm[3:].tolist())
        H_qq, H_q_nq, H_nq_nq, H_nq_q = extract_blocks(H, q, nq)
        rebuilt = np.empty_like(H)
        rebuilt[np.ix_(q, q)] = H_qq
        rebuilt[np.ix_(q, nq)] = H_q_nq
        rebuilt[np.ix_(nq, nq)] = H_nq_nq
        rebuilt[np.ix_(nq, q)] = H_nq_q
        np.testing.assert_array_equal(rebuilt, H)

    @pytest.mark.parametrize("q, nq", [([0], [0, 1]), ([0], []), ([0, 0], [1]), ([2], [0, 1])])
    def test_contract_violations(self, q, nq):
        with pytest.raises(ContractError):
            extract_blocks(QUADRATIC_HESSIAN, q, nq)


class TestSolveSpdWithFallback:
    def test_identity(self):
        b = np.array([1.0, -2.0, 3.0])
        result = solve_spd_with_fallback(np.eye(3), b)
        np.testing.assert_allclose(result.solution, b)
        assert result.shift_used == 0.0
        assert result.method == "cholesky"

    def test_two_by_two(self):
        result = solve_spd_with_fallback(np.array([[4.0, 2.0], [2.0, 3.0]]), np.array([2.0, 3.0]))
        np.testing.assert_allclose(result.solution, [0.0, 1.0], atol=1e-14)

    def test_zero_matrix_takes_shift_path(self):
        result = solve_spd_with_fallback(np.zeros((1, 1)), np.array([1.0]))
        assert result.shift_used > 0.0
        assert np.all(np.isfinite(result.solution))

    def test_indefinite_matrix_is_regularized(self):
        result = solve_spd_with_fallback(np.diag([1.0, -1.0]), np.ones(2))
        assert result.method == "shifted_cholesky"
        assert result.shift_used > 1.0

    def test_lu_fallback(self):
        A = np.array([[0.0, 1e3], [1e3, 0.0]])
        result = solve_spd_with_fallback(A, np.array([1.0, 2.0]))
        assert result.method == "lu"
        np.testing.assert_allclose(result.solution, [2e-3, 1e-3])

    def test_singular_beyond_fallbacks(self):
        A = np.zeros((3, 3))
        A[0, 1] = A[1, 0] = 100.0
        with pytest.raises(NumericalFailure):
            solve_spd_with_fallback(A, np.ones(3))

    def test_residual_on_well_conditioned_spd(self, rng):
        for n in (2, 5, 10, 20):
            V, _ = np.linalg.qr(rng.standard_normal((n, n)))
            A = (V * np.logspace(-3, 3, n)) @ V.T
            A = 0.5 * (A + A.T)
            rhs = rng.standard_normal(n)
            x = solve_spd_with_fallback(A, rhs).solution
            assert np.linalg.norm(A @ x - rhs) <= 1e-8 * (1.0 + np.linalg.norm(rhs))

    def test_log_records_sizes(self):
        log = FactorizationLog()
        solve_spd_with_fallback(np.eye(3), np.ones(3), log=log)
        solve_spd_with_fallback(np.eye(1), np.ones(1), log=log)
        solve_cholesky(np.eye(3), np.ones(3), log)
        assert log.histogram() == {1: 1, 3: 2}
        assert log.max_size == 3

    def test_solve_cholesky_rejects_indefinite(self):
        assert solve_cholesky(np.diag([1.0, -1.0]), np.ones(2)) is None

    def test_solve_symmetric_handles_indefinite(self):
        log = FactorizationLog()
        x = solve_symmetric(np.diag([1.0, -1.0]), np.array([2.0, 3.0]), log)
        np.testing.assert_allclose(x, [2.0, -3.0])
        assert log.histogram() == {2: 1}

    def test_solve_symmetric_coupled_indefinite(self):
        A = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3 and -1
        rhs = np.array([3.0, 0.0])
        np.testing.assert_allclose(A @ solve_symmetric(A, rhs), rhs)

    def test_solve_symmetric_rejects_singular(self):
        assert solve_symmetric(np.zeros((2, 2)), np.ones(2)) is None


class TestMaxEigenvalue:
    def test_diagonal(self):
        assert max_eigenvalue(np.diag([1.0, 2.0, 3.0])).value == pytest.approx(3.0, rel=1e-9)

    def test_quadratic_example(self):
        estimate = max_eigenvalue(QUADRATIC_HESSIAN)
        assert estimate.converged
        assert estimate.value == pytest.approx((201.0 + np.sqrt(40001.0)) / 2.0, rel=1e-9)

    def test_identity(self):
        assert max_eigenvalue(np.eye(4)).value == pytest.approx(1.0)

    def test_dominant_vector_orthogonal_to_ones(self):
        # eigenvector (1, -1) carries lambda = 3; the all-ones start only sees -1
        H = np.array([[1.0, -2.0], [-2.0, 1.0]])
        assert max_eigenvalue(H).value == pytest.approx(3.0, rel=1e-9)

    def test_negative_definite(self):
        assert max_eigenvalue(np.diag([-5.0, -2.0])).value == pytest.approx(-2.0, rel=1e-9)

    @pytest.mark.parametrize("n", [2, 5, 16, 33, 64])
    def test_matches_eigendecomposition(self, n, rng):
        V, _ = np.linalg.qr(rng.standard_normal((n, n)))
        lam = rng.uniform(-5.0, 5.0, size=n)
        lam[np.argmax(lam)] += 1.0
        H = (V * lam) @ V.T
        H = 0.5 * (H + H.T)
        expected = eigh(H, eigvals_only=True)[-1]
        estimate = max_eigenvalue(H)
        assert estimate.value == pytest.approx(expected, rel=1e-6)
