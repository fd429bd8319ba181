"""
CLI script: plot-ready trajectories on the two-variable quadratic example.

Writes one CSV with the OptiQ iterates, the forward-Euler iterates at a
bound-respecting step, the adaptive reference integrator and the exact
gradient flow sampled at the reference times.
"""
import argparse
import sys
from pathlib import Path

import pandas as pd

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from optiq.linalg.dense import max_eigenvalue
from optiq.problems.test_functions import make_test_function
from optiq.schemas import OptiQConfig
from optiq.services.baseline_solvers import forward_euler_solve, reference_integrate
from optiq.services.diagnostics import gradient_flow_oracle_quadratic
from optiq.services.quiescence_solver import solve


def _optiq_rows(obj, x0, eta):
    result = solve(obj, x0, OptiQConfig(eta=eta, max_iterations=100, record_iterates=True))
    times = [0.0] + [record.t for record in result.trace]
    rows = [
        {"method": "optiq", "step": k, "t": t, "x1": x[0], "x2": x[1]}
        for k, (t, x) in enumerate(zip(times, result.iterates))
    ]
    print(f"  → OptiQ: {result.iterations} iterations")
    return rows


def _fe_rows(obj, x0, eta, safety, max_rows):
    lam = max_eigenvalue(obj.hessian(x0)).value
    dt = safety * 2.0 / lam
    rows = [{"method": "forward_euler", "step": 0, "t": 0.0, "x1": x0[0], "x2": x0[1]}]
    x = x0.copy()
    result = forward_euler_solve(obj, x0, dt, eta=eta, max_iterations=20000)
    stride = max(1, result.iterations // max_rows)
    for k in range(1, result.iterations + 1):
        x = x - dt * obj.gradient(x)
        if k % stride == 0 or k == result.iterations:
            rows.append({"method": "forward_euler", "step": k, "t": k * dt, "x1": x[0], "x2": x[1]})
    print(f"  → forward Euler: {result.iterations} iterations at dt={dt:.6g} ({result.status.value})")
    return rows


def export_trajectories(output: str, t_end: float = 30.0, eta: float = 1e-12, safety: float = 0.5,
                        max_rows: int = 500):
    """Run every method on the quadratic example and write one long-format CSV."""
    obj = make_test_function("quadratic_example")
    x0 = obj.default_start

    rows = _optiq_rows(obj, x0, eta)
    rows += _fe_rows(obj, x0, eta, safety, max_rows)

    traj = reference_integrate(obj, x0, t_end, rel_tol=1e-8, abs_tol=1e-10)
    exact = gradient_flow_oracle_quadratic(obj.quadratic_matrix, obj.linear_term, x0, traj.t)
    for k, (t, x, x_exact) in enumerate(zip(traj.t, traj.x, exact)):
        rows.append({"method": "reference", "step": k, "t": t, "x1": x[0], "x2": x[1]})
        rows.append({"method": "exact", "step": k, "t": t, "x1": x_exact[0], "x2": x_exact[1]})
    print(f"  → reference integrator: {len(traj.t) - 1} accepted steps, {traj.rejected} rejected")

    Path(output).parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows).to_csv(output, index=False, float_format="%.17g", lineterminator="\n")
    print(f"✓ Wrote {len(rows)} rows to {output}")


def main():
    parser = argparse.ArgumentParser(
        description="Export trajectories on the quadratic example for plotting"
    )
    parser.add_argument("--output", type=str, default="data/quadratic_trajectories.csv", help="Output CSV path")
    parser.add_argument("--t-end", type=float, default=30.0, help="End time for the reference integrator")
    parser.add_argument("--eta", type=float, default=1e-12, help="Tolerance on ||grad f||^2")
    parser.add_argument("--safety", type=float, default=0.5, help="Forward-Euler step as a fraction of 2/lambda_max")
    parser.add_argument("--max-rows", type=int, default=500, help="Thin forward-Euler output to about this many rows")

    args = parser.parse_args()

    export_trajectories(
        output=args.output,
        t_end=args.t_end,
        eta=args.eta,
        safety=args.safety,
        max_rows=args.max_rows,
    )


if __name__ == "__main__":
    main()
