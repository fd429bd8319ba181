"""
Export service for benchmark reports and per-iteration traces (CSV / JSON).
"""
import json
from datetime import datetime
from pathlib import Path
from typing import List, Optional, Sequence

import pandas as pd

from optiq.errors import ConfigurationError
from optiq.schemas import BenchmarkReport, TraceRecord

REPORT_COLUMNS = [
    "problem", "n", "solver", "status", "iterations", "wall_time_s", "f_final", "grad_norm_final",
]
FLOAT_FORMAT = "%.17g"


def report_frame(report: BenchmarkReport) -> pd.DataFrame:
    """Report rows as a DataFrame with the fixed CSV column order."""
    df = pd.DataFrame([row.model_dump() for row in report.rows], columns=REPORT_COLUMNS)
    return df.astype({"n": "int64", "iterations": "int64"}) if len(df) else df


def _write_json(payload, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(payload, f, indent=2, ensure_ascii=False)
        f.write("\n")


def emit_report(report: BenchmarkReport, fmt: str, path: str) -> Path:
    """
    Write a report as CSV (fixed columns) or JSON (rows plus metadata).

    Returns:
        Path of the written file
    """
    if fmt == "csv":
        report_frame(report).to_csv(
            path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8"
        )
    elif fmt == "json":
        _write_json(report.model_dump(mode="json"), path)
    else:
        raise ConfigurationError(f"unknown report format {fmt!r} (expected csv or json)")
    return Path(path)


def load_report(path: str) -> BenchmarkReport:
    with open(path, "r", encoding="utf-8") as f:
        return BenchmarkReport.model_validate(json.load(f))


def emit_trace(trace: Sequence[TraceRecord], path: str, fmt: Optional[str] = None) -> Path:
    """Write a solver trace; the format follows the file extension unless given."""
    fmt = fmt or ("json" if str(path).endswith(".json") else "csv")
    records: List[dict] = [r.model_dump() for r in trace]
    if fmt == "csv":
        columns = list(TraceRecord.model_fields)
        pd.DataFrame(records, columns=columns).to_csv(
            path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n", encoding="utf-8"
        )
    elif fmt == "json":
        _write_json(records, path)
    else:
        raise ConfigurationError(f"unknown trace format {fmt!r} (expected csv or json)")
    return Path(path)


def export_summary_report(report: BenchmarkReport) -> str:
    """
    Generate a text summary of a benchmark report.

    Returns:
        Markdown formatted report string
    """
    meta = report.metadata
    summary = f"""# Benchmark Report
Generated: {datetime.now().strftime("%Y-%m-%d %H:%M:%S")}

## Summary
- **Runs**: {len(report.rows)}
- **Converged**: {sum(r.status == "Converged" for r in report.rows)}
- **Tolerance (||grad f||^2)**: {meta.get("eta")}
- **Iteration cap**: {meta.get("max_iterations")}

## Runs
"""
    for row in report.rows:
        normalized = "" if row.runtime_normalized is None else f", {row.runtime_normalized:.2f}x newton"
        summary += (
            f"- {row.problem} (n={row.n}) / {row.solver}: {row.status} in {row.iterations} iterations, "
            f"f={row.f_final:.3e}{normalized}\n"
        )
    return summary
