"""Distance to the boundary, its maxima, and the ridge set.

``distance_field`` samples closed-form distances where the shape admits one
(disk, annulus, rectangle, diamond) and otherwise solves ``|grad rho| = 1`` by
first-order fast marching.  ``ridge_set`` finds the interior nodes whose
distance to the boundary is attained at two well separated boundary points.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParams
from .geometry import DomainSpec, Grid, ScalarField, boundary_loops, inside

EXACT_KINDS = ("disk", "annulus", "rectangle", "diamond")


@dataclass(frozen=True)
class DistanceResult:
    rho: ScalarField
    sup_norm: float
    maxima: list = field(default_factory=list)
    used_exact_formula: bool = True

    @property
    def maxima_nodes(self) -> list[tuple[int, int]]:
        g = self.rho.grid
        return [g.nearest_node(xy) for xy in self.maxima]


@dataclass(frozen=True)
class RidgeResult:
    ridge_nodes: list
    witnesses: dict

    def mask(self, grid: Grid) -> np.ndarray:
        m = np.zeros(grid.shape, dtype=bool)
        for i, j in self.ridge_nodes:
            m[i, j] = True
        return m


def exact_distance(spec: DomainSpec, X, Y) -> np.ndarray:
    """Closed-form distance to the boundary for the primitive shapes."""
    p = spec.params
    if spec.kind == "disk":
        cx, cy = p["center"]
        return p["R"] - np.hypot(X - cx, Y - cy)
    if spec.kind == "annulus":
        cx, cy = p["center"]
        r = np.hypot(X - cx, Y - cy)
        return np.minimum(r - p["a"], p["b"] - r)
    if spec.kind == "rectangle":
        x0, y0 = p["x0"], p["y0"]
        return np.minimum.reduce([X - x0, x0 + p["w"] - X, Y - y0, y0 + p["h"] - Y])
    if spec.kind == "diamond":
        cx, cy = p["center"]
        return (p["s"] - np.abs(X - cx) - np.abs(Y - cy)) / math.sqrt(2.0)
    raise InvalidParams("kind", f"no closed-form distance for {spec.kind!r}")


def _crossing_fraction(spec, a, b, iters=52):
    """Fraction t in (0, 1] with a + t (b - a) on the boundary; a inside, b not."""
    lo = np.zeros(len(a))
    hi = np.ones(len(a))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pt = a + mid[:, None] * (b - a)
        ins = inside(spec, (pt[:, 0], pt[:, 1]))
        lo = np.where(ins, mid, lo)
        hi = np.where(ins, hi, mid)
    return hi


def _initial_band(spec: DomainSpec, grid: Grid) -> dict:
    """Distance estimates at interior nodes next to the boundary.

    Along each axis the nearest boundary crossing is located by bisection;
    the estimate is the distance to the line through the crossings.
    """
    m = grid.mask
    h = grid.h
    X, Y = grid.coords()
    inv_sq = np.zeros(grid.shape)
    for axis in (0, 1):
        best = np.full(grid.shape, np.inf)
        for step in (-1, 1):
            nb = np.roll(m, -step, axis=axis)
            edge = m & ~nb
            ii, jj = np.nonzero(edge)
            if len(ii) == 0:
                continue
            a = np.column_stack([X[ii, jj], Y[ii, jj]])
            d = np.zeros(2)
            d[1 - axis] = step * h  # axis 0 is rows (y), axis 1 columns (x)
            t = _crossing_fraction(spec, a, a + d)
            best[ii, jj] = np.minimum(best[ii, jj], t * h)
        has = np.isfinite(best)
        inv_sq[has] += 1.0 / best[has] ** 2
    band = {}
    ii, jj = np.nonzero(inv_sq > 0)
    for i, j, s in zip(ii, jj, inv_sq[ii, jj]):
        band[(int(i), int(j))] = 1.0 / math.sqrt(s)
    return band


def fast_marching(spec: DomainSpec, grid: Grid) -> np.ndarray:
    """Distance to the boundary by first-order fast marching."""
    h = grid.h
    m = grid.mask
    ny, nx = grid.shape
    rho = np.where(m, np.inf, 0.0)
    known = ~m.copy()
    heap = []
    for (i, j), d in _initial_band(spec, grid).items():
        rho[i, j] = d
        heapq.heappush(heap, (d, i, j))

    def update(i, j):
        a = min(rho[i, j - 1] if known[i, j - 1] and m[i, j - 1] else math.inf,
                rho[i, j + 1] if known[i, j + 1] and m[i, j + 1] else math.inf)
        b = min(rho[i - 1, j] if known[i - 1, j] and m[i - 1, j] else math.inf,
                rho[i + 1, j] if known[i + 1, j] and m[i + 1, j] else math.inf)
        if a > b:
            a, b = b, a
        if b - a >= h:
            return a + h
        return 0.5 * (a + b + math.sqrt(2 * h * h - (a - b) ** 2))

    while heap:
        d, i, j = heapq.heappop(heap)
        if known[i, j] or d > rho[i, j]:
            continue
        known[i, j] = True
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            k, l = i + di, j + dj
            if 0 <= k < ny and 0 <= l < nx and m[k, l] and not known[k, l]:
                nd = update(k, l)
                if nd < rho[k, l]:
                    rho[k, l] = nd
                    heapq.heappush(heap, (nd, k, l))
    return np.where(m, rho, 0.0)


def distance_field(spec: DomainSpec, grid: Grid, method: str = "auto") -> DistanceResult:
    """Distance function rho sampled on ``grid``.

    ``method`` is ``"auto"`` (closed form when available, else fast
    marching), ``"exact"`` or ``"fmm"``.  Maxima are all interior nodes
    within ``h/2`` of the largest value.
    """
    if method not in ("auto", "exact", "fmm"):
        raise InvalidParams("method", f"unknown distance method {method!r}")
    use_exact = method == "exact" or (method == "auto" and spec.kind in EXACT_KINDS)
    if use_exact:
        X, Y = grid.coords()
        rho = np.where(grid.mask, exact_distance(spec, X, Y), 0.0)
        rho = np.maximum(rho, 0.0)
    else:
        rho = fast_marching(spec, grid)
    sup = float(rho[grid.mask].max())
    ii, jj = np.nonzero(grid.mask & (rho >= sup - 0.5 * grid.h))
    maxima = [grid.node_xy((i, j)) for i, j in zip(ii, jj)]
    return DistanceResult(ScalarField(grid, rho), sup, maxima, use_exact)


def eikonal_residual(res: DistanceResult) -> ScalarField:
    """Per-node ``| |grad rho| - 1 |`` with Godunov upwind differences.

    Each component takes the one-sided difference toward the smaller
    neighbour (zero if both neighbours are larger).  Computed at every node
    with edge padding, so it is only meaningful away from the boundary band.
    """
    g = res.rho.grid
    r = np.pad(res.rho.values, 1, mode="edge")
    c = r[1:-1, 1:-1]
    dx = np.maximum.reduce([c - r[1:-1, :-2], c - r[1:-1, 2:], np.zeros_like(c)]) / g.h
    dy = np.maximum.reduce([c - r[:-2, 1:-1], c - r[2:, 1:-1], np.zeros_like(c)]) / g.h
    return ScalarField(g, np.abs(np.hypot(dx, dy) - 1.0))


def ridge_set(spec: DomainSpec, grid: Grid, eps_near: float | None = None,
              delta_sep: float | None = None, chunk: int = 2048) -> RidgeResult:
    """Interior nodes whose boundary distance is reached at two separated points.

    The boundary is sampled at arc step ``h/2``.  For each node the local
    minima of the distance along every boundary loop are the witness
    candidates; those within ``eps_near`` of the global minimum are kept.
    The node is a ridge node when the candidate farthest from the nearest
    boundary point lies more than ``delta_sep`` away from it.

    Defaults are ``eps_near = 2h`` and ``delta_sep = 5h``.
    """
    h = grid.h
    eps = 2.0 * h if eps_near is None else float(eps_near)
    sep = 5.0 * h if delta_sep is None else float(delta_sep)
    if eps < 2.0 * h * (1 - 1e-12):
        raise InvalidParams("eps_near", f"must be >= 2h = {2 * h:g}")
    if sep <= 4.0 * h:
        raise InvalidParams("delta_sep", f"must be > 4h = {4 * h:g}")
    loops = boundary_loops(spec, 0.5 * h)
    X, Y = grid.coords()
    ii, jj = np.nonzero(grid.mask)
    px, py = X[ii, jj], Y[ii, jj]
    pts = np.vstack(loops)
    nodes, wit = [], {}
    for s in range(0, len(ii), chunk):
        sl = slice(s, s + chunk)
        x, y = px[sl, None], py[sl, None]
        dists, locmin = [], []
        for L in loops:
            D = np.hypot(x - L[:, 0], y - L[:, 1])
            dists.append(D)
            locmin.append((D <= np.roll(D, 1, axis=1)) & (D <= np.roll(D, -1, axis=1)))
        D = np.hstack(dists)
        lm = np.hstack(locmin)
        k1 = np.argmin(D, axis=1)
        dmin = D[np.arange(len(k1)), k1]
        cand = lm & (D < dmin[:, None] + eps)
        y1 = pts[k1]
        sepd = np.hypot(pts[None, :, 0] - y1[:, None, 0], pts[None, :, 1] - y1[:, None, 1])
        sepd = np.where(cand, sepd, -1.0)
        k2 = np.argmax(sepd, axis=1)
        far = sepd[np.arange(len(k2)), k2]
        for t in np.nonzero(far > sep)[0]:
            node = (int(ii[s + t]), int(jj[s + t]))
            nodes.append(node)
            wit[node] = (tuple(pts[k1[t]]), tuple(pts[k2[t]]))
    return RidgeResult(nodes, wit)
