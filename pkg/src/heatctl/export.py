"""
CSV and JSON writers with a fixed text format.

Floats are written with 17 significant digits (round-trip exact), files
are UTF-8 with LF line endings, JSON keys are sorted. Nothing time- or
host-dependent is written, so identical inputs give identical bytes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def fmt(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.17g}"


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(c if isinstance(c, str) else fmt(c) for c in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # json has no inf/nan; keep them as strings
        return v if math.isfinite(v) else fmt(v)
    return obj


def write_json(path, data: dict) -> Path:
    path = Path(path)
    text = json.dumps(_jsonable(data), sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")
    return path


def field_csv(path, field) -> Path:
    """Columns x, value."""
    return write_csv(path, ["x", "value"], zip(field.domain.x, field.values))


def matrix_csv(path, matrix, rows=None, cols=None, corner: str = "x\\y") -> Path:
    """Dense matrix; with ``rows``/``cols`` a labelled grid (e.g. kernel slices)."""
    matrix = np.atleast_2d(matrix)
    if cols is None:
        header = [f"c{j}" for j in range(matrix.shape[1])]
    else:
        header = [corner] + [fmt(c) for c in cols]
    if rows is None:
        body = matrix.tolist()
    else:
        body = [[r] + list(m) for r, m in zip(rows, matrix)]
    return write_csv(path, header, body)


def vector_csv(path, name: str, values) -> Path:
    return write_csv(path, ["index", name], ((str(i + 1), v) for i, v in enumerate(values)))


def trace_csv(path, trace) -> Path:
    """Columns K, error."""
    return write_csv(path, ["K", "error"], ((str(k), e) for k, e in enumerate(trace)))


def trajectory_csv(path, times, states, x) -> Path:
    """t rows, x columns."""
    return matrix_csv(path, states, rows=times, cols=x, corner="t\\x")


def domain_descriptor_json(path, domain) -> Path:
    return write_json(path, domain.descriptor())
