"""CSV and JSON writers for result records.

A record is a flat dict. CSV columns are the union of keys in first-seen
order; floats are written with 17 significant digits so that a round trip
is exact. JSON output is a list of records (or a single object when a
single dict is passed).
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError

FORMATS = ("csv", "json")


def _plain(v):
    """Convert numpy scalars and arrays to JSON-friendly Python values."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        # JSON has no inf/nan; keep them readable
        return repr(v)
    return v


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (dict, list, tuple, np.ndarray)):
        return json.dumps(_plain(v), sort_keys=True)
    if isinstance(v, np.generic):
        return v.item()
    return v


def columns(records) -> list[str]:
    cols: dict[str, None] = {}
    for r in records:
        for k in r:
            cols.setdefault(k, None)
    return list(cols)


def emit_report(results, path, fmt: str | None = None) -> Path:
    """Write ``results`` (a dict or a list of dicts) to ``path``.

    ``fmt`` defaults to the file suffix. An empty list gives an empty CSV
    file or ``[]``. Unwritable paths raise OSError.
    """
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt not in FORMATS:
        raise InvalidArgumentError(f"format must be one of {FORMATS}, got {fmt!r}")
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump(_plain(results), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path
    records = [results] if isinstance(results, dict) else list(results)
    cols = columns(records)
    with open(path, "w", newline="") as fh:
        if cols:
            w = csv.DictWriter(fh, fieldnames=cols, restval="")
            w.writeheader()
            for r in records:
                w.writerow({k: _cell(v) for k, v in r.items()})
    return path


def read_csv(path) -> list[dict]:
    """Rows as dicts of strings, for round-trip checks."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
