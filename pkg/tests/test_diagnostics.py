import numpy as np
import pytest

from optiq.errors import NotApplicable
from optiq.problems.objectives import make_quadratic
from optiq.problems.test_functions import make_test_function
from optiq.schemas import OptiQConfig
from optiq.services.diagnostics import (
    fe_stability_bound,
    gradient_flow_oracle_quadratic,
    lyapunov_value,
    quadratic_eigenvalues,
    step_bound_report,
)
from optiq.services.quiescence_solver import solve


class TestLyapunovValue:
    @pytest.mark.parametrize("xdot, expected", [([0.0, 0.0], 0.0), ([1.0, 0.0], 0.5), ([3.0, 4.0], 12.5)])
    def test_values(self, xdot, expected):
        assert lyapunov_value(np.array(xdot)) == expected

    def test_positive_away_from_zero(self, rng):
        for v in rng.standard_normal((50, 4)):
            assert lyapunov_value(v) > 0.0


class TestFeStabilityBound:
    def test_quadratic_example(self, quadratic):
        bound = fe_stability_bound(quadratic, np.zeros(2))
        assert bound == pytest.approx(2.0 / 200.50125, rel=1e-6)
        assert bound == pytest.approx(0.009975, abs=1e-6)

    def test_identity(self):
        assert fe_stability_bound(make_quadratic(np.eye(3)), np.zeros(3)) == pytest.approx(2.0)

    def test_negative_definite(self):
        with pytest.raises(NotApplicable):
            fe_stability_bound(make_quadratic(-np.eye(2)), np.zeros(2))


class TestGradientFlowOracle:
    Q = np.array([[101.0, -100.0], [-100.0, 100.0]])
    b = np.array([-1.0, 0.0])

    def test_initial_value(self):
        x0 = np.array([0.3, -2.0])
        np.testing.assert_allclose(gradient_flow_oracle_quadratic(self.Q, self.b, x0, 0.0), x0, atol=1e-12)

    def test_long_time_limit(self):
        np.testing.assert_allclose(gradient_flow_oracle_quadratic(self.Q, self.b, np.zeros(2), 1e4), [1.0, 1.0])

    def test_quadratic_example_at_t30(self):
        x30 = gradient_flow_oracle_quadratic(self.Q, self.b, np.zeros(2), 30.0)
        # slow mode decays like exp(-0.49875 t)
        np.testing.assert_allclose(x30, [1.0, 1.0], atol=1e-6)

    def test_satisfies_the_ode(self):
        x0 = np.array([0.0, 0.0])
        h = 1e-6
        for t in (0.01, 0.5, 3.0):
            ahead, behind = gradient_flow_oracle_quadratic(self.Q, self.b, x0, [t + h, t - h])
            derivative = (ahead - behind) / (2 * h)
            x = gradient_flow_oracle_quadratic(self.Q, self.b, x0, t)
            np.testing.assert_allclose(derivative, -(self.Q @ x + self.b), atol=1e-6)


class TestStepBoundReport:
    def test_quadratic_example_passes(self, quadratic):
        result = solve(quadratic, np.zeros(2), OptiQConfig(eta=1e-12, max_iterations=100))
        flags = step_bound_report(result.trace, quadratic_eigenvalues(quadratic))
        assert [f.verdict for f in flags] == ["pass", "pass"]

    def test_scalar_problem_hits_equality(self):
        obj = make_quadratic(np.array([[4.0]]), np.array([-4.0]))
        result = solve(obj, np.zeros(1))
        flags = step_bound_report(result.trace, quadratic_eigenvalues(obj))
        assert result.iterations == 1
        assert flags[0].verdict == "pass-with-equality"

    def test_non_quadratic_is_not_checked(self):
        obj = make_test_function("rosenbrock")
        result = solve(obj, obj.default_start, OptiQConfig(max_iterations=3))
        flags = step_bound_report(result.trace, quadratic_eigenvalues(obj))
        assert {f.verdict for f in flags} == {"not checked"}

    def test_lower_bound_not_guaranteed_for_coupled_start(self):
        # strongly coupled Hessian, gradient almost aligned with one axis
        obj = make_quadratic(np.array([[2.0, 1.9], [1.9, 2.0]]), np.array([1.0, 0.01]))
        result = solve(obj, np.zeros(2), OptiQConfig(eta=1e-12))
        flags = step_bound_report(result.trace, quadratic_eigenvalues(obj))
        assert flags[0].verdict == "fail-lower"
        assert all(f.upper_ok for f in flags)
