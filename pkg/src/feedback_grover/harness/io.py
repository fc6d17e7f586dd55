"""CSV / JSON emission with a fixed, versioned schema."""
from __future__ import annotations

import csv
import io
import json
import math
import sys

SCHEMA_VERSION = 1


class OutputError(OSError):
    """Raised when an output artifact cannot be written."""


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def render_csv(rows: list[dict], columns: list[str] | None = None) -> str:
    if columns is None:
        columns = []
        for row in rows:
            for key in row:
                if key not in columns:
                    columns.append(key)
    columns = ["schema_version"] + [c for c in columns if c != "schema_version"]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(SCHEMA_VERSION if c == "schema_version" else row.get(c)) for c in columns])
    return buf.getvalue()


def render_json(experiment: str, config: dict, rows: list[dict], extra: dict | None = None) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "experiment": experiment, "config": config, "rows": rows}
    if extra:
        doc.update(extra)
    return json.dumps(_json_safe(doc), indent=2, sort_keys=False) + "\n"


def emit(text: str, path: str | None) -> None:
    if not path or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
