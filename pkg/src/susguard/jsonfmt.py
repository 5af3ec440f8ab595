"""Float-exact JSON helpers.

Wire formats (corpus files, calibration exports, websocket frames) carry
floats as decimal strings with 17 significant digits, which is enough to
reproduce any IEEE-754 double bit-exactly on parse.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np


def format_float(x: float) -> str:
    """Render a finite double as a 17-significant-digit decimal string."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"non-finite value cannot be serialized: {x!r}")
    return format(x, ".17g")


def parse_float(s: str | float | int) -> float:
    return float(s)


def encode_floats(obj: Any) -> Any:
    """Recursively replace floats (and numpy scalars/arrays) with decimal strings.

    Ints and bools pass through; containers are rebuilt.
    """
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return encode_floats(obj.tolist())
    if isinstance(obj, dict):
        return {k: encode_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode_floats(v) for v in obj]
    return obj


def decode_floats(obj: Any) -> Any:
    """Inverse of encode_floats: decimal strings back to floats where they parse.

    Only strings that look like numbers are converted; other strings pass
    through untouched, so schema fields like ids and enum values are safe.
    """
    if isinstance(obj, str):
        try:
            return float(obj)
        except ValueError:
            return obj
    if isinstance(obj, dict):
        return {k: decode_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [decode_floats(v) for v in obj]
    return obj


def dumps(obj: Any, **kwargs: Any) -> str:
    """json.dumps with floats pre-encoded as decimal strings."""
    return json.dumps(encode_floats(obj), **kwargs)


def float_matrix(rows: Any) -> list[list[str]]:
    arr = np.asarray(rows, dtype=float)
    return [[format_float(v) for v in row] for row in arr.reshape(arr.shape[0], -1)]


def float_vector(vals: Any) -> list[str]:
    return [format_float(v) for v in np.asarray(vals, dtype=float).ravel()]


def parse_matrix(rows: Any) -> np.ndarray:
    return np.asarray([[float(v) for v in row] for row in rows], dtype=float)


def parse_vector(vals: Any) -> np.ndarray:
    return np.asarray([float(v) for v in vals], dtype=float)
