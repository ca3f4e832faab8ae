"""Canonical JSON serialization shared by all report documents.

Floats are rounded to 6 decimal places before encoding so that
serialize -> parse -> serialize is byte-identical and golden files stay
stable across platforms.
"""

from __future__ import annotations

import json
import math

FLOAT_DECIMALS = 6


def _canonical(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError(f"non-finite float in JSON document: {obj}")
        return round(obj, FLOAT_DECIMALS)
    if isinstance(obj, dict):
        return {k: _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    return obj


def dump_canonical(obj: dict) -> str:
    """Stable two-space-indent JSON with 6-decimal floats."""
    return json.dumps(_canonical(obj), indent=2, allow_nan=False) + "\n"


def load(text: str) -> dict:
    return json.loads(text)
