"""
Command-line entrypoint: solve one problem, run a benchmark suite, or print diagnostics at a point.
"""
import argparse
import sys
from typing import List, Optional

import numpy as np
from pydantic import ValidationError

from optiq import __version__
from optiq.config import configure_logging, settings
from optiq.errors import ConfigurationError, ContractError, NotApplicable, NumericalFailure
from optiq.linalg.dense import max_eigenvalue
from optiq.problems.test_functions import available_problems, make_test_function
from optiq.schemas import ForwardEulerPolicy, LineSearchConfig, OptiQConfig, SolverStatus
from optiq.services import baseline_solvers, quiescence_solver
from optiq.services.bench_harness import available_solvers, failed_rows, load_suite, run_suite
from optiq.services.diagnostics import fe_stability_bound, lyapunov_value
from optiq.services.export_service import emit_report, emit_trace, export_summary_report

EXIT_OK, EXIT_RUN_FAILURE, EXIT_CONFIG = 0, 1, 2


def parse_x0(text: Optional[str], dimension: int) -> Optional[np.ndarray]:
    if text is None:
        return None
    try:
        x0 = np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ConfigurationError(f"--x0 must be comma-separated numbers, got {text!r}") from exc
    if x0.size != dimension:
        raise ConfigurationError(f"--x0 has {x0.size} entries, problem has dimension {dimension}")
    return x0


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="optiq",
        description="Quiescence-based second-order optimization and baseline benchmarks",
        formatter_class=fmt,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Logging level for the optiq logger")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_problem_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--problem", required=True, choices=available_problems(), help="Test function")
        p.add_argument("--n", type=int, default=None, help="Dimension (extended_wood, least_squares_synthetic)")
        p.add_argument("--x0", default=None, help="Start point v1,v2,... (use --x0=-1,2 for negative values)")
        p.add_argument("--seed", type=int, default=None, help="Load seed for least_squares_synthetic")

    solve = sub.add_parser("solve", help="Run one solver on one problem", formatter_class=fmt)
    add_problem_args(solve)
    solve.add_argument("--solver", required=True, choices=available_solvers(), help="Solver")
    solve.add_argument("--eta", type=float, default=settings.DEFAULT_ETA,
                       help="Convergence tolerance on the squared gradient norm ||grad f||^2")
    solve.add_argument("--max-iters", type=int, default=settings.DEFAULT_MAX_ITERATIONS, help="Iteration cap N")
    solve.add_argument("--trace", default=None, help="Write the per-iteration trace to this path")
    solve.add_argument("--format", choices=["csv", "json"], default=None,
                       help="Trace format (default: from the --trace extension)")
    solve.add_argument("--fe-dt", type=float, default=None,
                       help="Fixed forward-Euler step (forward_euler only; bound-based when omitted)")
    solve.add_argument("--fe-safety", type=float, default=0.5,
                       help="Fraction of the 2/lambda_max bound for bound-based forward Euler")

    bench = sub.add_parser("bench", help="Run a suite file and write a report", formatter_class=fmt)
    bench.add_argument("--suite", required=True, help="Suite JSON file")
    bench.add_argument("--out", required=True, help="Report output path")
    bench.add_argument("--format", choices=["csv", "json"], default="csv", help="Report format")
    bench.add_argument("--parallel", type=int, default=1, help="Worker count (capped by OPTIQ_THREADS)")

    diagnose = sub.add_parser("diagnose", help="Print FE bound, time constants and Lyapunov value at x0",
                              formatter_class=fmt)
    add_problem_args(diagnose)
    return parser


def _solve(args) -> int:
    obj = make_test_function(args.problem, args.n, seed=args.seed)
    x0 = parse_x0(args.x0, obj.dimension)
    x0 = obj.default_start if x0 is None else x0

    if args.solver == "optiq":
        result = quiescence_solver.solve(obj, x0, OptiQConfig(eta=args.eta, max_iterations=args.max_iters))
    elif args.solver == "forward_euler":
        policy = (
            ForwardEulerPolicy(kind="fixed", dt=args.fe_dt) if args.fe_dt is not None
            else ForwardEulerPolicy(kind="bound_based", safety=args.fe_safety)
        )
        result = baseline_solvers.forward_euler_solve(obj, x0, policy, args.eta, args.max_iters)
    else:
        run = {
            "newton": baseline_solvers.newton_damped_solve,
            "bfgs": baseline_solvers.bfgs_solve,
            "sr1": baseline_solvers.sr1_solve,
        }[args.solver]
        result = run(obj, x0, args.eta, args.max_iters, LineSearchConfig())

    print(f"problem: {obj.name} (n={obj.dimension})")
    print(f"solver: {args.solver}")
    print(f"status: {result.status.value}")
    print(f"iterations: {result.iterations}")
    print(f"f_final: {result.f_final!r}")
    print(f"grad_norm_final: {result.grad_norm_final!r}")
    print(f"x_final: {','.join(repr(float(v)) for v in result.x_final)}")
    print(f"wall_time_s: {result.wall_time:.6f}")
    if result.message:
        print(f"message: {result.message}")
    if args.trace:
        path = emit_trace(result.trace, args.trace, args.format)
        print(f"trace: {path}")
    return EXIT_OK if result.status == SolverStatus.CONVERGED else EXIT_RUN_FAILURE


def _bench(args) -> int:
    spec = load_suite(args.suite)
    report = run_suite(spec, parallel=args.parallel)
    path = emit_report(report, args.format, args.out)
    print(export_summary_report(report))
    print(f"report: {path}")
    failures = failed_rows(report)
    for row in failures:
        print(f"failed: {row.problem} (n={row.n}) / {row.solver}: {row.status}")
    return EXIT_RUN_FAILURE if failures else EXIT_OK


def _diagnose(args) -> int:
    obj = make_test_function(args.problem, args.n, seed=args.seed)
    x0 = parse_x0(args.x0, obj.dimension)
    x = obj.default_start if x0 is None else x0
    try:
        _print_diagnostics(obj, x)
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILURE
    return EXIT_OK


def _print_diagnostics(obj, x: np.ndarray) -> None:
    if not np.all(np.isfinite(x)):
        raise NumericalFailure(f"cannot diagnose non-finite point {x}")
    g = obj.gradient(x)
    estimate = max_eigenvalue(obj.hessian(x))
    print(f"problem: {obj.name} (n={obj.dimension})")
    print(f"x: {','.join(repr(float(v)) for v in x)}")
    print(f"f: {obj.value(x)!r}")
    print(f"lambda_max: {estimate.value!r}" + ("" if estimate.converged else " (unconverged)"))
    try:
        print(f"fe_bound: {fe_stability_bound(obj, x)!r}")
    except NotApplicable as exc:
        print(f"fe_bound: n/a ({exc})")
    tau = quiescence_solver.time_constants_at(obj, x)
    print("time_constants: " + ",".join("inadmissible" if np.isnan(v) else repr(float(v)) for v in tau))
    print(f"lyapunov: {lyapunov_value(-g)!r}")


def cli_main(argv: Optional[List[str]] = None) -> int:
    """Parse argv and dispatch; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG

    configure_logging(args.log_level)
    handlers = {"solve": _solve, "bench": _bench, "diagnose": _diagnose}
    try:
        return handlers[args.command](args)
    except (ConfigurationError, ContractError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(cli_main())
