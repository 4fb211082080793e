"""Validated tabular view of a sweep CSV and series aggregation.

The column list mirrors the harness CSV schema by contract; it is spelled
out here so the plotting tool stays importable without the experiment
package installed.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Tuple

__all__ = [
    "REQUIRED_COLUMNS",
    "SweepFrame",
    "SweepValidationError",
    "X_COLUMNS",
    "series_tables",
]

REQUIRED_COLUMNS = (
    "domain",
    "planner",
    "n_b",
    "T",
    "n_mem",
    "beta0",
    "c",
    "K",
    "seed",
    "undiscounted_return",
    "discounted_return",
    "steps",
    "max_nodes",
    "mean_plan_time_ms",
)

_INT_COLUMNS = frozenset({"n_b", "T", "K", "seed", "steps", "max_nodes"})
_FLOAT_COLUMNS = frozenset(
    {"beta0", "c", "undiscounted_return", "discounted_return", "mean_plan_time_ms"}
)

# x-axis name -> CSV column holding the swept value
X_COLUMNS = {"budget": "n_b", "horizon": "T", "memory": "n_mem"}


class SweepValidationError(ValueError):
    """The CSV is missing columns, empty, or holds non-finite numbers."""


@dataclass(frozen=True)
class SweepFrame:
    """Parsed rows of one sweep CSV.

    ``rows`` hold typed values: integer columns as int, numeric columns as
    finite float, ``n_mem`` as int or None (unlimited memory).
    """

    rows: Tuple[dict, ...]

    @classmethod
    def from_csv(cls, path: os.PathLike) -> "SweepFrame":
        with open(path, "r", encoding="utf-8", newline="") as handle:
            reader = csv.DictReader(handle)
            header = reader.fieldnames
            if header is None:
                raise SweepValidationError(f"{path}: empty file, no CSV header")
            missing = [c for c in REQUIRED_COLUMNS if c not in header]
            if missing:
                raise SweepValidationError(
                    f"{path}: missing required columns: {', '.join(missing)}"
                )
            rows: List[dict] = []
            for line, raw in enumerate(reader, start=2):
                rows.append(_parse_row(raw, path, line))
        if not rows:
            raise SweepValidationError(f"{path}: no data rows")
        return cls(tuple(rows))

    def __len__(self) -> int:
        return len(self.rows)


def _parse_row(raw: dict, path: os.PathLike, line: int) -> dict:
    row: dict = {}
    for key in REQUIRED_COLUMNS:
        value = raw[key]
        try:
            if key == "n_mem":
                row[key] = None if value == "" else int(value)
            elif key in _INT_COLUMNS:
                row[key] = int(value)
            elif key in _FLOAT_COLUMNS:
                parsed = float(value)
                if not math.isfinite(parsed):
                    raise ValueError("not finite")
                row[key] = parsed
            else:
                row[key] = value
        except (TypeError, ValueError) as error:
            raise SweepValidationError(
                f"{path}:{line}: column {key!r} has invalid value {value!r} ({error})"
            ) from None
    return row


def series_tables(
    frame: SweepFrame, x_axis: str, value: str = "undiscounted_return"
) -> Dict[str, Dict[Tuple[str, float], List[Tuple[float, float, float, int]]]]:
    """Aggregate rows into per-panel, per-series point lists.

    Returns ``{domain: {(planner, beta0): [(x, mean, se, n), ...]}}`` with
    domains, series keys, and x values sorted.  The standard error is the
    ddof=1 sample standard deviation over episodes divided by sqrt(n)
    (0 for a single episode).  On the memory axis, rows with an empty
    ``n_mem`` (unlimited) are dropped: they have no finite x position.
    """
    if x_axis not in X_COLUMNS:
        raise ValueError(f"x_axis must be one of {sorted(X_COLUMNS)}, got {x_axis!r}")
    x_column = X_COLUMNS[x_axis]
    buckets: Dict[str, Dict[Tuple[str, float], Dict[float, List[float]]]] = {}
    for row in frame.rows:
        x = row[x_column]
        if x is None:
            continue
        panel = buckets.setdefault(row["domain"], {})
        series = panel.setdefault((row["planner"], row["beta0"]), {})
        series.setdefault(float(x), []).append(float(row[value]))
    tables: Dict[str, Dict[Tuple[str, float], List[Tuple[float, float, float, int]]]] = {}
    for domain in sorted(buckets):
        panel_out: Dict[Tuple[str, float], List[Tuple[float, float, float, int]]] = {}
        for key in sorted(buckets[domain]):
            points = []
            for x in sorted(buckets[domain][key]):
                values = buckets[domain][key][x]
                n = len(values)
                mean = sum(values) / n
                if n > 1:
                    var = sum((v - mean) ** 2 for v in values) / (n - 1)
                    se = math.sqrt(var / n)
                else:
                    se = 0.0
                points.append((x, mean, se, n))
            panel_out[key] = points
        tables[domain] = panel_out
    return tables
