"""Metrics CSV format, aggregation, and reproducibility hashing.

Files start with a schema comment line, then a normal CSV header.  One row
per (seed, epoch); empty cells mean "not measured this epoch" (eval columns
off-cadence).  ``wall_time_s`` is informational and excluded from byte
comparisons.
"""

from __future__ import annotations

import csv
import hashlib
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

SCHEMA_LINE = "# schema: metrics-v1"
TIME_COLUMNS = ("wall_time_s",)

# Columns aggregated by summarize; the rest are identity or bookkeeping.
AGGREGATE_COLUMNS = ("episodic_return", "eval_return", "eval_success", "sum_q")


def write_metrics(path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(SCHEMA_LINE + "\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow(row)
    tmp.replace(path)
    return path


def read_metrics(path) -> tuple[list[str], list[dict]]:
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\n")
        if first != SCHEMA_LINE:
            raise ValueError(f"{path}: unrecognized metrics schema line {first!r}")
        reader = csv.reader(fh)
        columns = next(reader)
        rows = [dict(zip(columns, row)) for row in reader]
    return columns, rows


def canonical_csv_bytes(path, exclude: Sequence[str] = TIME_COLUMNS) -> bytes:
    """File bytes with the excluded columns blanked, for equality checks."""
    columns, rows = read_metrics(path)
    keep = [c for c in columns if c not in exclude]
    lines = [",".join(keep)]
    for row in rows:
        lines.append(",".join(row[c] for c in keep))
    return "\n".join(lines).encode()


def metrics_digest(path, exclude: Sequence[str] = TIME_COLUMNS) -> str:
    return hashlib.sha256(canonical_csv_bytes(path, exclude)).hexdigest()


def _mean_stderr(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var) / math.sqrt(n)


def summarize_rows(rows: list[dict]) -> list[dict]:
    """Aggregate metric rows across seeds: mean and std-error per epoch."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["run_id"], int(row["epoch"])), []).append(row)
    out = []
    for (run_id, epoch) in sorted(groups):
        bucket = groups[(run_id, epoch)]
        agg = {"run_id": run_id, "epoch": epoch, "seeds": len(bucket)}
        for col in AGGREGATE_COLUMNS:
            values = [
                float(r[col]) for r in bucket if col in r and r[col] not in ("", None)
            ]
            if values:
                mean, se = _mean_stderr(values)
                agg[f"{col}_mean"] = mean
                agg[f"{col}_stderr"] = se
            else:
                agg[f"{col}_mean"] = ""
                agg[f"{col}_stderr"] = ""
        out.append(agg)
    return out


def summarize_dir(in_dir, out_path: Optional[Path] = None) -> Path:
    """Aggregate every metrics.csv under ``in_dir`` into summary.csv.

    All files must share one column set; mixing schemas is an error.
    """
    in_dir = Path(in_dir)
    files = sorted(in_dir.rglob("metrics.csv"))
    if not files:
        raise FileNotFoundError(f"no metrics.csv under {in_dir}")
    columns = None
    rows: list[dict] = []
    for f in files:
        cols, file_rows = read_metrics(f)
        if columns is None:
            columns = cols
        elif cols != columns:
            raise ValueError(
                f"{f}: column set differs from {files[0]}; refusing to mix schemas"
            )
        rows.extend(file_rows)

    summary = summarize_rows(rows)
    out_cols = ["run_id", "epoch", "seeds"]
    for col in AGGREGATE_COLUMNS:
        out_cols += [f"{col}_mean", f"{col}_stderr"]
    out_path = Path(out_path) if out_path else in_dir / "summary.csv"
    with open(out_path, "w", newline="") as fh:
        fh.write(SCHEMA_LINE + "\n")
        writer = csv.writer(fh)
        writer.writerow(out_cols)
        for agg in summary:
            writer.writerow([agg[c] for c in out_cols])
    return out_path
