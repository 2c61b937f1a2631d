"""JSON and CSV report writers."""

import csv
import io
import json
import math
from dataclasses import is_dataclass
from datetime import datetime, timezone
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

REPORT_SCHEMA = 1

CSV_COLUMNS = [
    "name",
    "depth",
    "trials",
    "estimate",
    "standard_error",
    "reference",
    "comparison",
    "sigma",
    "verdict",
    "runtime_sec",
]

# Wall-clock durations inside results; dropped together with the timestamp
RUNTIME_KEY = "runtime_sec"


def utc_timestamp() -> str:
    """Current UTC time in ISO-8601 with a trailing Z."""
    return datetime.now(timezone.utc).replace(tzinfo=None).isoformat() + "Z"


def to_jsonable(value: Any) -> Any:
    """Fractions become "p/q", infinities "inf", numpy scalars and arrays plain values."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        f = float(value)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return f
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [to_jsonable(v) for v in items]
    if hasattr(value, "to_dict"):
        return to_jsonable(value.to_dict())
    if is_dataclass(value):
        raise TypeError(f"dataclass {type(value).__name__} has no to_dict")
    return value


def strip_timing(value: Any) -> Any:
    """Drop every ``runtime_sec`` key, at any nesting level."""
    if isinstance(value, dict):
        return {k: strip_timing(v) for k, v in value.items() if k != RUNTIME_KEY}
    if isinstance(value, list):
        return [strip_timing(v) for v in value]
    return value


def build_report(
    command: str,
    status: str,
    config: Mapping[str, Any],
    result: Any,
    timestamp: bool = True,
) -> dict[str, Any]:
    """Assemble a versioned report; without a timestamp, runtimes are dropped from the result."""
    report: dict[str, Any] = {
        "schema": REPORT_SCHEMA,
        "command": command,
        "status": status,
        "config": to_jsonable(config),
        "result": to_jsonable(result),
    }
    if timestamp:
        report["timestamp"] = utc_timestamp()
    else:
        report["result"] = strip_timing(report["result"])
    return report


def dumps(report: Mapping[str, Any]) -> str:
    """Serialize a report with two-space indentation."""
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def write_json(report: Mapping[str, Any], path: Path) -> None:
    """Write a report, creating parent directories."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(report))


def format_csv(rows: Iterable[Mapping[str, Any]], timing: bool = True) -> str:
    """One row per experiment, columns ``CSV_COLUMNS``."""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        out = {c: to_jsonable(row.get(c)) for c in CSV_COLUMNS}
        if not timing:
            out["runtime_sec"] = ""
        writer.writerow(out)
    return buffer.getvalue()


def write_csv(rows: Iterable[Mapping[str, Any]], path: Path, timing: bool = True) -> None:
    """Write experiment rows as CSV, creating parent directories."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(format_csv(rows, timing))
