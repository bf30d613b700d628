"""CSV and JSON writers shared by the trajectory, table and sweep outputs.

Floats are written with ``repr`` (shortest string that round-trips the
double), '.' as decimal separator and '\\n' line endings, so reruns are
byte-identical.
"""
from __future__ import annotations

import json
import math
from pathlib import Path


def format_value(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    with open(path, "w", newline="\n", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path):
    """Return (header, rows) with every field parsed as float."""
    with open(path, encoding="ascii") as fh:
        lines = fh.read().splitlines()
    header = tuple(lines[0].split(","))
    rows = [[float(x) for x in line.split(",")] for line in lines[1:] if line]
    return header, rows


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
