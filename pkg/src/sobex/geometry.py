"""Analytic 2-D domains and their node-centred rasterization.

A :class:`DomainSpec` is a shape kind plus validated parameters.  Every
solver works on a :class:`Grid`, the uniform lattice of nodes strictly inside
the domain, and stores results in :class:`ScalarField` objects whose values at
non-interior nodes are the zero Dirichlet trace.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import ndimage

from .errors import InvalidParams, ResolutionTooCoarse

KINDS = ("disk", "annulus", "rectangle", "diamond", "ellipse", "polygon")

# exterior rings kept around the bounding box; the infinity-Laplace stencil
# reaches two nodes away from any interior node
MARGIN = 2


@dataclass(frozen=True, eq=False)
class DomainSpec:
    kind: str
    params: dict

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": _jsonable(self.params)}

    @classmethod
    def from_json(cls, obj: dict | str) -> "DomainSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, dict) or "kind" not in obj:
            raise InvalidParams("kind", "domain JSON needs a 'kind' entry")
        return make_domain(obj["kind"], obj.get("params", {}))

    def bbox(self) -> tuple[float, float, float, float]:
        p = self.params
        if self.kind in ("disk", "annulus", "diamond", "ellipse"):
            cx, cy = p["center"]
            if self.kind == "disk":
                rx = ry = p["R"]
            elif self.kind == "annulus":
                rx = ry = p["b"]
            elif self.kind == "diamond":
                rx = ry = p["s"]
            else:
                rx, ry = p["a"], p["b"]
            return cx - rx, cx + rx, cy - ry, cy + ry
        if self.kind == "rectangle":
            return p["x0"], p["x0"] + p["w"], p["y0"], p["y0"] + p["h"]
        v = np.asarray(p["vertices"])
        return v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max()

    def area(self) -> float:
        """Analytic area of the domain."""
        p = self.params
        if self.kind == "disk":
            return math.pi * p["R"] ** 2
        if self.kind == "annulus":
            return math.pi * (p["b"] ** 2 - p["a"] ** 2)
        if self.kind == "rectangle":
            return p["w"] * p["h"]
        if self.kind == "diamond":
            return 2.0 * p["s"] ** 2
        if self.kind == "ellipse":
            return math.pi * p["a"] * p["b"]
        return _signed_area(np.asarray(p["vertices"]))


def _jsonable(params):
    out = {}
    for k, v in params.items():
        if isinstance(v, tuple):
            v = [list(x) if isinstance(x, tuple) else x for x in v]
        out[k] = v
    return out


def _positive(params, name):
    try:
        v = float(params[name])
    except KeyError:
        raise InvalidParams(name, "missing") from None
    except (TypeError, ValueError):
        raise InvalidParams(name, "must be a real number") from None
    if not math.isfinite(v) or v <= 0:
        raise InvalidParams(name, f"must be > 0, got {params[name]!r}")
    return v


def _point(params, name, default=(0.0, 0.0)):
    v = params.get(name, default)
    try:
        x, y = (float(t) for t in v)
    except (TypeError, ValueError):
        raise InvalidParams(name, "must be a pair of reals") from None
    return (x, y)


def _signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 * d2 != 0 and d3 * d4 != 0:
        return True

    def on_seg(a, b, c):
        return (orient(a, b, c) == 0 and min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    return on_seg(q1, q2, p1) or on_seg(q1, q2, p2) or on_seg(p1, p2, q1) or on_seg(p1, p2, q2)


def make_domain(kind: str, params: dict[str, Any] | None = None) -> DomainSpec:
    """Validate ``params`` for ``kind`` and return the domain.

    Recognized parameters (lengths in abstract units):

    - ``disk``: ``R``, optional ``center``
    - ``annulus``: ``a < b``, optional ``center``
    - ``rectangle``: ``w``, ``h``, optional lower-left corner ``x0``, ``y0``
    - ``diamond``: ``s`` (the set ``|x|+|y| < s``), optional ``center``
    - ``ellipse``: semi-axes ``a``, ``b``, optional ``center``
    - ``polygon``: ``vertices``, simple and counterclockwise

    Raises
    ------
    InvalidParams
        If a constraint is violated; the offending field is named.
    """
    params = dict(params or {})
    if kind not in KINDS:
        raise InvalidParams("kind", f"unknown domain kind {kind!r}")
    if kind == "disk":
        out = {"R": _positive(params, "R"), "center": _point(params, "center")}
    elif kind == "annulus":
        a, b = _positive(params, "a"), _positive(params, "b")
        if not a < b:
            raise InvalidParams("a", f"annulus needs a < b, got a={a}, b={b}")
        out = {"a": a, "b": b, "center": _point(params, "center")}
    elif kind == "rectangle":
        out = {"w": _positive(params, "w"), "h": _positive(params, "h"),
               "x0": float(params.get("x0", 0.0)), "y0": float(params.get("y0", 0.0))}
    elif kind == "diamond":
        out = {"s": _positive(params, "s"), "center": _point(params, "center")}
    elif kind == "ellipse":
        out = {"a": _positive(params, "a"), "b": _positive(params, "b"),
               "center": _point(params, "center")}
    else:
        try:
            v = np.asarray(params["vertices"], dtype=float)
        except KeyError:
            raise InvalidParams("vertices", "missing") from None
        except (TypeError, ValueError):
            raise InvalidParams("vertices", "must be a list of [x, y] pairs") from None
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise InvalidParams("vertices", "need at least 3 [x, y] pairs")
        if not np.all(np.isfinite(v)):
            raise InvalidParams("vertices", "must be finite")
        if _signed_area(v) <= 0:
            raise InvalidParams("vertices", "must be listed counterclockwise")
        m = len(v)
        for i in range(m):
            for j in range(i + 1, m):
                if j == i + 1 or (i == 0 and j == m - 1):
                    continue
                if _segments_cross(v[i], v[(i + 1) % m], v[j], v[(j + 1) % m]):
                    raise InvalidParams("vertices", "polygon is not simple")
        out = {"vertices": tuple(tuple(map(float, row)) for row in v)}
    return DomainSpec(kind, out)


def _polygon_inside(verts, x, y):
    n = len(verts)
    res = np.zeros(np.broadcast(x, y).shape, dtype=bool)
    on_edge = np.zeros_like(res)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        cond = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        res ^= cond & (x < xc)
        # points on the edge itself are boundary points
        dx, dy = x2 - x1, y2 - y1
        t = np.clip(((x - x1) * dx + (y - y1) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
        d2 = (x - x1 - t * dx) ** 2 + (y - y1 - t * dy) ** 2
        on_edge |= d2 <= 1e-24
    return res & ~on_edge


def inside(spec: DomainSpec, point) -> np.ndarray | bool:
    """True where ``point`` lies in the open set; vectorized over arrays."""
    x = np.asarray(point[0], dtype=float)
    y = np.asarray(point[1], dtype=float)
    p = spec.params
    k = spec.kind
    if k in ("disk", "annulus", "diamond", "ellipse"):
        cx, cy = p["center"]
        dx, dy = x - cx, y - cy
    if k == "disk":
        res = dx * dx + dy * dy < p["R"] ** 2
    elif k == "annulus":
        r2 = dx * dx + dy * dy
        res = (r2 > p["a"] ** 2) & (r2 < p["b"] ** 2)
    elif k == "rectangle":
        res = (x > p["x0"]) & (x < p["x0"] + p["w"]) & (y > p["y0"]) & (y < p["y0"] + p["h"])
    elif k == "diamond":
        res = np.abs(dx) + np.abs(dy) < p["s"]
    elif k == "ellipse":
        res = (dx / p["a"]) ** 2 + (dy / p["b"]) ** 2 < 1.0
    else:
        res = _polygon_inside(p["vertices"], x, y)
    if res.ndim == 0:
        return bool(res)
    return res


def _closed_polyline(corners, step):
    pts = []
    m = len(corners)
    for i in range(m):
        a = np.asarray(corners[i], dtype=float)
        b = np.asarray(corners[(i + 1) % m], dtype=float)
        k = max(1, int(math.ceil(np.hypot(*(b - a)) / step)))
        t = np.arange(k)[:, None] / k
        pts.append(a + t * (b - a))
    return np.vstack(pts)


def _circle(cx, cy, r, step):
    k = max(8, int(math.ceil(2 * math.pi * r / step)))
    t = 2 * math.pi * np.arange(k) / k
    return np.column_stack([cx + r * np.cos(t), cy + r * np.sin(t)])


def boundary_loops(spec: DomainSpec, step: float) -> list[np.ndarray]:
    """Sample each boundary component as an ordered closed loop.

    Consecutive samples are at most ``step`` apart (polygonal edges are
    subdivided uniformly, vertices included).
    """
    p = spec.params
    if spec.kind == "disk":
        return [_circle(*p["center"], p["R"], step)]
    if spec.kind == "annulus":
        return [_circle(*p["center"], p["a"], step), _circle(*p["center"], p["b"], step)]
    if spec.kind == "ellipse":
        cx, cy = p["center"]
        a, b = p["a"], p["b"]
        k = max(8, int(math.ceil(2 * math.pi * max(a, b) / step)))
        t = 2 * math.pi * np.arange(k) / k
        return [np.column_stack([cx + a * np.cos(t), cy + b * np.sin(t)])]
    if spec.kind == "rectangle":
        x0, y0, w, h = p["x0"], p["y0"], p["w"], p["h"]
        corners = [(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)]
    elif spec.kind == "diamond":
        cx, cy = p["center"]
        s = p["s"]
        corners = [(cx + s, cy), (cx, cy + s), (cx - s, cy), (cx, cy - s)]
    else:
        corners = p["vertices"]
    return [_closed_polyline(corners, step)]


def max_boundary_distance(spec: DomainSpec, point, step: float = 1e-3) -> float:
    """Largest distance from ``point`` to the boundary (sampled)."""
    pts = np.vstack(boundary_loops(spec, step))
    return float(np.max(np.hypot(pts[:, 0] - point[0], pts[:, 1] - point[1])))


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform node lattice over a domain.

    Node ``(i, j)`` (row, column) sits at ``(x0 + j*h, y0 + i*h)``.  ``mask``
    marks the interior nodes; every other node carries the Dirichlet value.
    """

    spec: DomainSpec
    h: float
    nx: int
    ny: int
    x0: float
    y0: float
    mask: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def n_interior(self) -> int:
        return int(self.mask.sum())

    @property
    def area(self) -> float:
        return self.n_interior * self.h * self.h

    @property
    def xs(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.nx)

    @property
    def ys(self) -> np.ndarray:
        return self.y0 + self.h * np.arange(self.ny)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinate arrays ``(X, Y)`` of shape ``(ny, nx)``."""
        return np.meshgrid(self.xs, self.ys)

    def node_xy(self, node) -> tuple[float, float]:
        i, j = node
        return (self.x0 + j * self.h, self.y0 + i * self.h)

    def nearest_node(self, point) -> tuple[int, int]:
        j = int(round((point[0] - self.x0) / self.h))
        i = int(round((point[1] - self.y0) / self.h))
        return (min(max(i, 0), self.ny - 1), min(max(j, 0), self.nx - 1))

    def is_interior(self, node) -> bool:
        i, j = node
        return 0 <= i < self.ny and 0 <= j < self.nx and bool(self.mask[i, j])

    @property
    def boundary_band(self) -> np.ndarray:
        """Interior nodes having at least one non-interior 4-neighbour."""
        m = self.mask
        pad = np.pad(m, 1, constant_values=False)
        full = pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
        return m & ~full

    def zeros(self) -> "ScalarField":
        return ScalarField(self, np.zeros(self.shape))


def rasterize(spec: DomainSpec, n: int) -> Grid:
    """Rasterize ``spec`` with ``n`` nodes per unit length.

    The spacing is ``h = 1/(n-1)``, i.e. ``n`` nodes span a unit interval
    end to end.  The lattice is centred on the bounding box and has odd
    dimensions, so shapes symmetric about their centre get a centre node.

    Raises
    ------
    InvalidParams
        If ``n < 8``.
    ResolutionTooCoarse
        If no interior node has four interior neighbours, or the interior
        is not 4-connected.
    """
    if int(n) != n or n < 8:
        raise InvalidParams("n", f"resolution must be an integer >= 8, got {n!r}")
    h = 1.0 / (int(n) - 1)
    xmin, xmax, ymin, ymax = spec.bbox()
    cx, cy = 0.5 * (xmin + xmax), 0.5 * (ymin + ymax)
    # small relative slack so exact lattice hits of the bbox edge are kept
    kx = int(math.ceil((xmax - cx) / h - 1e-9)) + MARGIN
    ky = int(math.ceil((ymax - cy) / h - 1e-9)) + MARGIN
    nx, ny = 2 * kx + 1, 2 * ky + 1
    x0, y0 = cx - kx * h, cy - ky * h
    X, Y = np.meshgrid(x0 + h * np.arange(nx), y0 + h * np.arange(ny))
    mask = np.asarray(inside(spec, (X, Y)), dtype=bool)
    if not mask.any():
        raise ResolutionTooCoarse(f"no lattice node lies inside the {spec.kind} at n={n}")
    pad = np.pad(mask, 1)
    deep = mask & pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    if not deep.any():
        raise ResolutionTooCoarse(
            f"no interior node of the {spec.kind} has four interior neighbours at n={n}")
    _, ncomp = ndimage.label(mask)
    if ncomp != 1:
        raise ResolutionTooCoarse(
            f"interior of the {spec.kind} splits into {ncomp} pieces at n={n}")
    mask.setflags(write=False)
    return Grid(spec, h, nx, ny, x0, y0, mask)


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One real value per node of ``grid``; shape ``(ny, nx)``."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_interior(cls, grid: Grid, vec) -> "ScalarField":
        """Scatter a vector of interior values (row-major order) onto the grid."""
        v = np.zeros(grid.shape)
        v[grid.mask] = vec
        return cls(grid, v)

    def interior(self) -> np.ndarray:
        return self.values[self.grid.mask]

    def max(self) -> float:
        return float(self.values.max())

    def argmax(self) -> tuple[int, int]:
        """Interior node of the largest value; ties go to the lowest (row, col)."""
        v = np.where(self.grid.mask, self.values, -np.inf)
        k = int(np.argmax(v))
        return divmod(k, self.grid.nx)

    def sup_distance(self, other: "ScalarField") -> float:
        return float(np.max(np.abs(self.values - other.values)))
