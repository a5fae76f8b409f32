"""CSV readers and writers (comma separated, header row, LF line endings).

Floats are written with ``repr`` so values round-trip exactly.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dynamics import TRAJECTORY_COLUMNS, Trajectory
from .metrics import SUMMARY_COLUMNS, MonteCarloReport
from .model import AllocationState


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def _write(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_state(path: str | Path, W: AllocationState) -> None:
    """Dense matrix: header ``0..n-1`` (resources), one row per unit."""
    n = W.n
    _write(Path(path), [str(y) for y in range(n)], W.to_array().tolist())


def read_state(path: str | Path) -> AllocationState:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty state file")
    header, body = rows[0], [r for r in rows[1:] if r]
    n = len(header)
    if len(body) != n or any(len(r) != n for r in body):
        raise ValueError(f"{path}: expected a {n}x{n} matrix")
    try:
        arr = np.array([[int(v) for v in r] for r in body], dtype=np.int64)
    except ValueError as exc:
        raise ValueError(f"{path}: non-integer entry") from exc
    return AllocationState.from_array(arr)


def write_trajectory(path: str | Path, log: Trajectory | None) -> None:
    events = log.events if log is not None else []
    _write(Path(path), TRAJECTORY_COLUMNS, events)


def write_summary(path: str | Path, report: MonteCarloReport) -> None:
    """One row per replica followed by a ``mean`` row."""
    rows = [[r[k] for k in SUMMARY_COLUMNS] for r in report.rows]
    rows.append([report.mean[k] if k != "seed" else "mean" for k in SUMMARY_COLUMNS])
    _write(Path(path), SUMMARY_COLUMNS, rows)


def write_aggregate(path: str | Path, report: MonteCarloReport) -> None:
    keys = [k for k in SUMMARY_COLUMNS if k != "seed"]
    rows = [[name] + [getattr(report, name)[k] for k in keys] for name in ("mean", "std", "min", "max")]
    _write(Path(path), ["stat"] + keys, rows)
