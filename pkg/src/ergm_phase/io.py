"""Serialization helpers shared by the CLI and the sampler trace writer.

CSV files start with ``# key=value`` lines (the run manifest), then one
header row, then data. Floats are written with ``repr``, the shortest
string that round-trips to the same double.
"""

from __future__ import annotations

import io
import json
import math
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

__all__ = ["format_value", "format_csv", "format_json", "parse_csv", "jsonable"]


def format_value(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def format_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]],
               manifest: Mapping[str, Any] | None = None) -> str:
    buf = io.StringIO()
    for key, value in (manifest or {}).items():
        text = json.dumps(jsonable(value)) if isinstance(value, (dict, list, tuple)) else format_value(value)
        buf.write(f"# {key}={text}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        if len(row) != len(columns):
            raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
        buf.write(",".join(format_value(v) for v in row) + "\n")
    return buf.getvalue()


def parse_csv(text: str) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Split CSV output back into (manifest, columns, rows of raw strings)."""
    manifest: dict[str, str] = {}
    lines = text.splitlines()
    k = 0
    while k < len(lines) and lines[k].startswith("# "):
        key, _, value = lines[k][2:].partition("=")
        manifest[key] = value
        k += 1
    columns = lines[k].split(",") if k < len(lines) else []
    rows = [line.split(",") for line in lines[k + 1:] if line]
    return manifest, columns, rows


def jsonable(v: Any) -> Any:
    """Convert numpy types and tuples to plain JSON values; non-finite floats become None."""
    if isinstance(v, Mapping):
        return {str(k): jsonable(x) for k, x in v.items()}
    if isinstance(v, np.ndarray):
        return jsonable(v.tolist())
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else None
    return v


def format_json(record: Mapping[str, Any], manifest: Mapping[str, Any] | None = None) -> str:
    out = dict(record)
    if manifest is not None:
        out = {"manifest": dict(manifest), **out}
    return json.dumps(jsonable(out), indent=2, allow_nan=False) + "\n"
