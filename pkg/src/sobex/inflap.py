"""Punctured-domain infinity-Laplace problem and comparison diagnostics.

The solution equals 0 on the boundary and 1 at the puncture.  It is computed
with the monotone midrange scheme: every stencil neighbour value is linearly
interpolated back to distance ``h`` along its ray, and the node takes the
mean of the largest and smallest of these values.  Rays that leave the
domain are cut at the boundary crossing, where the value is 0; nodes with
such rays solve their local midrange equation exactly.  Nodes are relaxed by
Gauss-Seidel sweeps in alternating lexicographic and reverse order.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import BadNode, InvalidParams, NoConvergence
from .distance import _crossing_fraction
from .geometry import Grid, ScalarField, inside, max_boundary_distance

log = logging.getLogger(__name__)


def stencil(radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Primitive lattice directions with ``max(|di|, |dj|) <= radius``.

    Returns the integer offsets and their interpolation factors ``1/|offset|``.
    Radius 1 gives the 8-neighbour stencil, radius 2 gives 16 directions.
    """
    if int(radius) != radius or radius < 1:
        raise InvalidParams("stencil_radius", f"must be a positive integer, got {radius!r}")
    offs = [(a, b) for a in range(-radius, radius + 1) for b in range(-radius, radius + 1)
            if (a, b) != (0, 0) and math.gcd(abs(a), abs(b)) == 1]
    offs = np.array(offs, dtype=np.int64)
    return offs, 1.0 / np.hypot(offs[:, 0], offs[:, 1])


@numba.njit(cache=True)
def _local_solve(u, i, j, offs, dist, zero):
    # root of max_k s_k + min_k s_k = 0 with slopes s_k = (u_k - c)/d_k,
    # which is max_a min_b of the chord values (d_b u_a + d_a u_b)/(d_a + d_b)
    K = offs.shape[0]
    best = -1e300
    for a in range(K):
        ua = 0.0 if zero[a] else u[i + offs[a, 0], j + offs[a, 1]]
        low = 1e300
        for b in range(K):
            ub = 0.0 if zero[b] else u[i + offs[b, 0], j + offs[b, 1]]
            c = (dist[b] * ua + dist[a] * ub) / (dist[a] + dist[b])
            if c < low:
                low = c
        if low > best:
            best = low
    return best


@numba.njit(cache=True)
def _sweep(u, fixed, offs, w, forward, band, bdist, bzero):
    ny, nx = u.shape
    worst = 0.0
    total = ny * nx
    for k in range(total):
        kk = k if forward else total - 1 - k
        i = kk // nx
        j = kk - i * nx
        if fixed[i, j]:
            continue
        c = u[i, j]
        r = band[i, j]
        if r >= 0:
            new = _local_solve(u, i, j, offs, bdist[r], bzero[r])
            d = abs(new - c)
            if d > worst:
                worst = d
            u[i, j] = new
            continue
        hi = -1e300
        lo = 1e300
        for t in range(offs.shape[0]):
            a = i + offs[t, 0]
            b = j + offs[t, 1]
            nb = u[a, b] if 0 <= a < ny and 0 <= b < nx else 0.0
            v = c + (nb - c) * w[t]
            if v > hi:
                hi = v
            if v < lo:
                lo = v
        new = 0.5 * (hi + lo)
        d = abs(new - c)
        if d > worst:
            worst = d
        u[i, j] = new
    return worst


@numba.njit(cache=True)
def _residual(u, active, offs, w, band, bdist, bzero):
    ny, nx = u.shape
    out = np.zeros_like(u)
    for i in range(ny):
        for j in range(nx):
            if not active[i, j]:
                continue
            c = u[i, j]
            r = band[i, j]
            if r >= 0:
                out[i, j] = abs(c - _local_solve(u, i, j, offs, bdist[r], bzero[r]))
                continue
            hi = -1e300
            lo = 1e300
            for t in range(offs.shape[0]):
                a = i + offs[t, 0]
                b = j + offs[t, 1]
                nb = u[a, b] if 0 <= a < ny and 0 <= b < nx else 0.0
                v = c + (nb - c) * w[t]
                if v > hi:
                    hi = v
                if v < lo:
                    lo = v
            out[i, j] = abs(c - 0.5 * (hi + lo))
    return out


_RAY_SAMPLES = 8


def _boundary_rays(grid: Grid, offs: np.ndarray):
    """Stencil rays of interior nodes that leave the domain.

    Returns ``band`` (row index per node, -1 when no ray leaves), and per
    band row the ray lengths in units of h (shortened to the first boundary
    crossing) and flags marking rays that end on the boundary.
    """
    ii, jj = np.nonzero(grid.mask)
    X, Y = grid.coords()
    px, py = X[ii, jj], Y[ii, jj]
    h = grid.h
    K = len(offs)
    length = np.hypot(offs[:, 0], offs[:, 1])
    n = len(ii)
    hit = np.zeros((n, K), dtype=bool)
    frac = np.ones((n, K))
    ny, nx = grid.shape
    for k, (di, dj) in enumerate(offs):
        ti, tj = ii + di, jj + dj
        ok = (ti >= 0) & (ti < ny) & (tj >= 0) & (tj < nx)
        end_in = np.zeros(n, dtype=bool)
        end_in[ok] = grid.mask[ti[ok], tj[ok]]
        first = np.full(n, np.inf)
        for s in range(_RAY_SAMPLES, 0, -1):
            t = s / _RAY_SAMPLES
            ins = inside(grid.spec, (px + t * dj * h, py + t * di * h))
            if s == _RAY_SAMPLES:
                ins = ins & end_in
            first = np.where(~ins, t, first)
        out = np.isfinite(first)
        if not out.any():
            continue
        sel = np.nonzero(out)[0]
        a = np.column_stack([px[sel], py[sel]])
        b = a + first[sel, None] * np.array([dj * h, di * h])
        frac[sel, k] = first[sel] * _crossing_fraction(grid.spec, a, b)
        hit[sel, k] = True
    rows = np.nonzero(hit.any(axis=1))[0]
    band = -np.ones(grid.shape, dtype=np.int64)
    band[ii[rows], jj[rows]] = np.arange(len(rows))
    dist = np.maximum(frac[rows] * length[None, :], 1e-6)
    return band, np.ascontiguousarray(dist), np.ascontiguousarray(hit[rows])


@functools.lru_cache(maxsize=16)
def _rays(grid: Grid, radius: int):
    offs, w = stencil(radius)
    return (offs, w) + _boundary_rays(grid, offs)


@dataclass(frozen=True)
class InfProblem:
    """Dirichlet data 0 off the interior and 1 at ``puncture``.

    ``puncture=None`` leaves only the zero boundary data.
    """

    grid: Grid
    puncture: tuple | None
    stencil_radius: int = 2

    def __post_init__(self):
        if self.puncture is not None:
            node = (int(self.puncture[0]), int(self.puncture[1]))
            if not self.grid.is_interior(node):
                raise BadNode(f"puncture {node} is not an interior node")
            object.__setattr__(self, "puncture", node)
        stencil(self.stencil_radius)


@dataclass(frozen=True)
class InfReport:
    field: ScalarField
    iterations: int
    final_update: float
    lipschitz_estimate: float

    def to_json(self) -> dict:
        return {"iterations": self.iterations, "final_update": self.final_update,
                "lipschitz_estimate": self.lipschitz_estimate}


def lipschitz_estimate(u: ScalarField) -> float:
    """Largest ``|u(a) - u(b)| / |a - b|`` over axis and diagonal node pairs."""
    v, h = u.values, u.grid.h
    slopes = [np.abs(np.diff(v, axis=0)).max() / h, np.abs(np.diff(v, axis=1)).max() / h,
              np.abs(v[1:, 1:] - v[:-1, :-1]).max() / (h * math.sqrt(2)),
              np.abs(v[1:, :-1] - v[:-1, 1:]).max() / (h * math.sqrt(2))]
    return float(max(slopes))


def cone(grid: Grid, vertex, m: float | None = None) -> ScalarField:
    """Sampled cone ``1 - |x - vertex|/m`` on interior nodes, 0 elsewhere.

    ``m`` defaults to the largest boundary distance from the vertex, which
    makes the cone an upper barrier for the punctured problem.
    """
    xv, yv = grid.node_xy(vertex)
    if m is None:
        m = max_boundary_distance(grid.spec, (xv, yv), step=0.25 * grid.h)
    if not m > 0:
        raise InvalidParams("m", f"must be > 0, got {m}")
    X, Y = grid.coords()
    c = 1.0 - np.hypot(X - xv, Y - yv) / m
    return ScalarField(grid, np.where(grid.mask, c, 0.0))


def inf_solve(problem: InfProblem, tol: float = 1e-8, max_sweeps: int = 100_000) -> InfReport:
    """Monotone midrange iteration for the punctured infinity-Laplace problem.

    Starts from the cone at the puncture and stops when the largest nodal
    change in one sweep drops below ``tol``.

    Raises
    ------
    InvalidParams
        If ``tol <= 0`` or ``max_sweeps < 1``.
    NoConvergence
        If ``max_sweeps`` sweeps do not reach ``tol``.
    """
    if not tol > 0:
        raise InvalidParams("tol", "must be > 0")
    if int(max_sweeps) != max_sweeps or max_sweeps < 1:
        raise InvalidParams("max_sweeps", "must be a positive integer")
    g = problem.grid
    fixed = ~g.mask
    if problem.puncture is None:
        u = np.zeros(g.shape)
    else:
        fixed = fixed.copy()
        fixed[problem.puncture] = True
        u = np.clip(cone(g, problem.puncture).values, 0.0, 1.0)
        u[problem.puncture] = 1.0
    offs, w, band, bdist, bzero = _rays(g, problem.stencil_radius)
    fixed = np.ascontiguousarray(fixed)
    change = math.inf
    sweeps = 0
    while change >= tol:
        if sweeps >= max_sweeps:
            f = ScalarField(g, u)
            raise NoConvergence(
                f"infinity-Laplace sweeps stalled at update {change:.3e} after {sweeps} sweeps",
                InfReport(f, sweeps, change, lipschitz_estimate(f)))
        change = _sweep(u, fixed, offs, w, sweeps % 2 == 0, band, bdist, bzero)
        sweeps += 1
    f = ScalarField(g, u)
    log.info("inf_solve: %d sweeps, final update %.3e", sweeps, change)
    return InfReport(f, sweeps, float(change), lipschitz_estimate(f))


def inf_residual(u: ScalarField, exclude=(), stencil_radius: int = 2) -> ScalarField:
    """Per-node ``|u - (max + min)/2|`` with the stencil of :func:`inf_solve`.

    At nodes with rays cut by the boundary this is the distance to the exact
    local midrange solution.  Zero at non-interior nodes and at the nodes in
    ``exclude``.
    """
    active = np.array(u.grid.mask, copy=True)
    for node in exclude:
        active[tuple(node)] = False
    offs, w, band, bdist, bzero = _rays(u.grid, stencil_radius)
    vals = np.ascontiguousarray(u.values)
    return ScalarField(u.grid, _residual(vals, active, offs, w, band, bdist, bzero))


def comparison_check(u: ScalarField, v: ScalarField, slack: float = 0.0) -> bool:
    """True iff ``u <= v + slack`` at every node."""
    if u.grid is not v.grid and u.grid.shape != v.grid.shape:
        raise InvalidParams("v", "fields live on different grids")
    return bool(np.all(u.values <= v.values + slack))
