"""Deterministic report serialization.

Reports are saved as JSON (sorted keys, 2-space indent) or CSV.  Floats are
always rendered with 6 decimals so that repeated runs produce byte-identical
files and golden-file diffs stay stable.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

FLOAT_FORMAT = "%.6f"


def format_float(value: float) -> str:
    return FLOAT_FORMAT % float(value)


def _emit(obj, indent: int) -> str:
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not np.isfinite(obj):
            raise ValueError(f"report contains non-finite float {obj!r}")
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _emit(obj.tolist(), indent)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        inner = ",\n".join("  " * (indent + 1) + _emit(v, indent + 1) for v in obj)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        for key in obj:
            if not isinstance(key, str):
                raise TypeError(f"report keys must be strings, got {key!r}")
        inner = ",\n".join(
            "  " * (indent + 1) + json.dumps(k) + ": " + _emit(v, indent + 1)
            for k, v in sorted(obj.items())
        )
        return "{\n" + inner + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__} in a report")


def to_json_text(obj) -> str:
    """Render a jsonable structure deterministically, trailing newline included."""
    return _emit(obj, 0) + "\n"


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def to_csv_text(fields, rows) -> str:
    """Render dict rows as CSV with a fixed field order and float format."""
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        writer.writerow([_csv_cell(row.get(f)) for f in fields])
    return buf.getvalue()


def save_report(report, path, fmt: str | None = None) -> None:
    """Write a report as JSON or CSV; the format defaults to the file suffix.

    The report must expose ``to_jsonable()`` for JSON and ``csv_fields`` plus
    ``to_rows()`` for CSV.
    """
    out = Path(path)
    if fmt is None:
        suffix = out.suffix.lower().lstrip(".")
        if suffix not in {"json", "csv"}:
            raise ValueError(f"cannot infer report format from suffix {out.suffix!r}")
        fmt = suffix
    if fmt == "json":
        text = to_json_text(report.to_jsonable())
    elif fmt == "csv":
        text = to_csv_text(report.csv_fields, report.to_rows())
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    out.write_text(text)
