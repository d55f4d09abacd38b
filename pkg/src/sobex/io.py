"""File formats for fields, distance and ridge tables, and JSON documents.

Reals are written with 17 significant digits, which round-trips doubles.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidParams
from .geometry import Grid, ScalarField

FORMATS = ("csv", "json")


def _num(v) -> str:
    return f"{float(v):.17g}"


def export_field(f: ScalarField, path, format: str = "csv") -> None:
    """Write a field as CSV (``x,y,value``, row-major) or JSON.

    The JSON document is ``{nx, ny, h, origin, values}`` with ``values`` the
    row-major list of node values.
    """
    if format not in FORMATS:
        raise InvalidParams("format", f"must be one of {FORMATS}, got {format!r}")
    g = f.grid
    if format == "json":
        doc = {"nx": g.nx, "ny": g.ny, "h": g.h, "origin": [g.x0, g.y0],
               "values": f.values.ravel().tolist()}
        Path(path).write_text(json.dumps(doc))
        return
    X, Y = g.coords()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for x, y, v in zip(X.ravel(), Y.ravel(), f.values.ravel()):
            w.writerow([_num(x), _num(y), _num(v)])


def import_field(path, grid: Grid, format: str | None = None) -> ScalarField:
    """Read a field written by :func:`export_field` back onto ``grid``."""
    path = Path(path)
    format = format or path.suffix.lstrip(".").lower()
    if format not in FORMATS:
        raise InvalidParams("format", f"must be one of {FORMATS}, got {format!r}")
    if format == "json":
        doc = json.loads(path.read_text())
        if (doc["nx"], doc["ny"]) != (grid.nx, grid.ny) or not math.isclose(doc["h"], grid.h):
            raise InvalidParams("path", "stored lattice does not match the grid")
        vals = np.array(doc["values"], dtype=float)
    else:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if rows[0] != ["x", "y", "value"]:
            raise InvalidParams("path", f"unexpected CSV header {rows[0]}")
        vals = np.array([float(r[2]) for r in rows[1:]])
    if vals.size != grid.nx * grid.ny:
        raise InvalidParams("path", f"expected {grid.nx * grid.ny} values, found {vals.size}")
    return ScalarField(grid, vals.reshape(grid.shape))


def write_grid_csv(grid: Grid, path) -> None:
    """All lattice nodes as ``x,y,interior`` with a 0/1 flag."""
    X, Y = grid.coords()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "interior"])
        for x, y, m in zip(X.ravel(), Y.ravel(), grid.mask.ravel()):
            w.writerow([_num(x), _num(y), int(m)])


def write_distance_csv(res, path) -> None:
    """Interior distance values as ``x,y,rho``."""
    g = res.rho.grid
    X, Y = g.coords()
    m = g.mask
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "rho"])
        for x, y, v in zip(X[m], Y[m], res.rho.values[m]):
            w.writerow([_num(x), _num(y), _num(v)])


def write_ridge_csv(res, grid: Grid, path) -> None:
    """Ridge nodes with their two boundary witnesses."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "y1x", "y1y", "y2x", "y2y"])
        for node in res.ridge_nodes:
            (a, b), (c, d) = res.witnesses[node]
            w.writerow([_num(v) for v in (*grid.node_xy(node), a, b, c, d)])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if not math.isfinite(obj) else float(obj)
    return obj


def write_json(obj, path) -> None:
    """JSON with sorted keys; non-finite reals become ``null``."""
    Path(path).write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
