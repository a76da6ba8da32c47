"""JSON conversion keeping large integers exact."""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from fractions import Fraction

import numpy as np

SAFE_INT = 2**53


def jsonable(obj):
    """Recursively convert to JSON-ready values; ints at or above 2^53 become strings."""
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        v = int(obj)
        return str(v) if abs(v) >= SAFE_INT else v
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if dataclasses.is_dataclass(obj):
        return jsonable({f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)})
    return str(obj)


def dumps(obj, **kw) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, **kw)
