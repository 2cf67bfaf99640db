"""Deterministic text serialization for run artifacts.

Floating-point values are always written with a fixed 17-significant-
digit format so that a value round-trips exactly and two runs of the
same config produce byte-identical files. The JSON emitter below exists
only because the stdlib encoder offers no hook for float formatting.
"""

import json

import numpy as np

METRICS_COLUMNS = (
    "step",
    "task_id",
    "loss",
    "sparsity",
    "beta_t",
    "n_conflict",
    "n_recover",
    "conflict_ratio",
    "wrongly_masked_top30",
    "strategy",
)


def fmt_float(v: float) -> str:
    return format(float(v), ".17g")


def _render(obj, indent: int, level: int) -> str:
    pad = " " * (indent * level)
    child_pad = " " * (indent * (level + 1))
    if obj is None:
        return "null"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not np.isfinite(obj):
            raise ValueError(f"cannot serialize non-finite float {obj!r}")
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            return "[]"
        body = ",\n".join(child_pad + _render(v, indent, level + 1) for v in items)
        return "[\n" + body + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        body = ",\n".join(
            child_pad + json.dumps(str(k)) + ": " + _render(v, indent, level + 1)
            for k, v in obj.items()
        )
        return "{\n" + body + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(obj, indent: int = 2) -> str:
    """Deterministic JSON with .17g floats and insertion-ordered keys."""
    return _render(obj, indent, 0) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return fmt_float(v)
    return str(v)


def metrics_csv_text(rows) -> str:
    """Render metric rows (sequences matching METRICS_COLUMNS) as CSV."""
    lines = [",".join(METRICS_COLUMNS)]
    for row in rows:
        if len(row) != len(METRICS_COLUMNS):
            raise ValueError(f"metrics row has {len(row)} cells, expected {len(METRICS_COLUMNS)}")
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"
