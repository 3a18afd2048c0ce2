"""Deterministic CSV/JSON writers.

Floats are rounded to 10 decimals and printed in their shortest round-trip form,
with negative zero folded into ``0.0``. Two runs (or a Galerkin spectrum and its
closed-form oracle) that agree to that precision therefore produce identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

DECIMALS = 10


def canonical_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    v = round(x, DECIMALS)
    if v == 0:
        v = 0.0
    return repr(v)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating, Fraction)):
        return canonical_float(float(v))
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.write_text(csv_text(header, rows), encoding="utf-8")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(canonical_float(x))
    if isinstance(obj, complex):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    return obj


def _raw(obj):
    """JSON-safe conversion without rounding (full double precision)."""
    if isinstance(obj, dict):
        return {str(k): _raw(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_raw(v) for v in (obj.tolist() if isinstance(obj, np.ndarray) else obj)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return _jsonable(obj)


def json_text(obj, canonical: bool = True) -> str:
    """Indented JSON; ``canonical=False`` keeps floats at full precision (used for diagnostics)."""
    return json.dumps(_jsonable(obj) if canonical else _raw(obj), indent=2) + "\n"


def write_json(path, obj, canonical: bool = True) -> Path:
    path = Path(path)
    path.write_text(json_text(obj, canonical), encoding="utf-8")
    return path


def write_matrix(path, A) -> Path:
    """Dense text dump, row-major, one row per line, space separated."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    lines = [" ".join(canonical_float(v) for v in row) for row in A]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
