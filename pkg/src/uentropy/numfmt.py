"""Stable number formatting for CSV and JSON outputs."""

import math


def fmt(x) -> str:
    """15 significant digits; scientific notation outside ``[1e-3, 1e6)``."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return "0"
    if 1e-3 <= abs(x) < 1e6:
        return f"{x:.15g}"
    return f"{x:.14e}"


def jsonable(obj):
    """Recursively replace floats by their formatted strings' numeric value.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``
    since JSON has no literal for them.
    """
    if isinstance(obj, float):
        if math.isfinite(obj):
            return float(fmt(obj))
        return fmt(obj)
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj
