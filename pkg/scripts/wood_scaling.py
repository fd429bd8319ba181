"""
CLI script: iteration counts and largest factored block on Extended Wood as n grows.
"""
import argparse
import sys
from pathlib import Path

import pandas as pd

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from optiq.schemas import SuiteProblem, SuiteSpec
from optiq.services.bench_harness import run_suite
from optiq.services.export_service import report_frame


def wood_scaling(dimensions, solvers, output: str, eta: float = 1e-12, parallel: int = 1):
    """Run the Extended Wood family and write iterations / block sizes per (n, solver)."""
    spec = SuiteSpec(
        problems=[SuiteProblem(name="extended_wood", n=n) for n in dimensions],
        solvers=solvers,
        eta=eta,
    )
    print(f"Running Extended Wood for n in {dimensions} with {', '.join(solvers)}...")
    report = run_suite(spec, parallel=parallel)

    df = report_frame(report)
    df["largest_block"] = [max(r.factored_block_sizes, default=0) for r in report.rows]
    df["runtime_normalized"] = [r.runtime_normalized for r in report.rows]

    Path(output).parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(output, index=False, float_format="%.17g", lineterminator="\n")

    for solver, group in df.groupby("solver"):
        counts = ", ".join(f"n={n}: {it}" for n, it in zip(group["n"], group["iterations"]))
        print(f"  → {solver}: {counts}")
    print(f"✓ Wrote {len(df)} rows to {output}")


def main():
    parser = argparse.ArgumentParser(
        description="Extended Wood scaling study"
    )
    parser.add_argument(
        "--dims",
        type=str,
        default="4,16,64,256",
        help="Comma-separated dimensions (multiples of 4)"
    )
    parser.add_argument(
        "--solvers",
        type=str,
        default="optiq,newton,bfgs,sr1",
        help="Comma-separated solver names"
    )
    parser.add_argument("--output", type=str, default="data/wood_scaling.csv", help="Output CSV path")
    parser.add_argument("--eta", type=float, default=1e-12, help="Tolerance on ||grad f||^2")
    parser.add_argument("--parallel", type=int, default=1, help="Worker count")

    args = parser.parse_args()

    wood_scaling(
        dimensions=[int(v) for v in args.dims.split(",")],
        solvers=args.solvers.split(","),
        output=args.output,
        eta=args.eta,
        parallel=args.parallel,
    )


if __name__ == "__main__":
    main()
