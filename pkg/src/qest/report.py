"""CSV and JSON report writers."""
from __future__ import annotations

import csv
import io
import json
import math
import sys

from .errors import QestError

FORMATS = ("csv", "json")


class ReportError(QestError):
    pass


def _clean(value):
    """JSON-safe copy: tuples become lists, non-finite floats become null."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        return _clean(value.item())
    return value


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ""
    return str(value)


def to_json(data: dict) -> str:
    return json.dumps(_clean(data), sort_keys=True, indent=2, allow_nan=False) + "\n"


def to_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def render(data: dict, fmt: str) -> str:
    """Text of a report.  CSV renders ``data["rows"]`` (with ``data["columns"]``)."""
    if fmt == "json":
        return to_json(data)
    if fmt == "csv":
        return to_csv(data["rows"], data.get("columns"))
    raise ReportError(f"unknown report format {fmt!r}; expected one of {FORMATS}")


def emit_report(data: dict, fmt: str, path=None) -> str:
    """Write the rendered report to ``path`` (stdout when ``None``)."""
    text = render(data, fmt)
    if path is None:
        sys.stdout.write(text)
        return text
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportError(f"cannot write report to {path}: {exc.strerror or exc}") from exc
    return text
