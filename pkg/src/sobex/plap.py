"""Discrete p-Dirichlet energy and the three variational solvers.

The energy is the integral of ``|grad u|^p`` for the bilinear interpolant of
the nodal values, integrated cell by cell with the 2x2 Gauss rule.  On top of
it sit

* :func:`solve_lambda_q`, the minimizer of ``E(u) / ||u||_q^p``;
* :func:`dirac_solve`, the minimizer of ``E(v)/p - v(y)``, i.e. the discrete
  solution of ``-Delta_p v = delta_y``;
* :func:`solve_extremal`, which assembles ``Lambda_p`` and its extremal
  function from Dirac solutions.

All descents are preconditioned by the lagged-diffusivity matrix
``B^T diag(|grad u|^(p-2)) B`` and globalized by Armijo backtracking, so the
recorded objective never increases.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .distance import distance_field
from .errors import BadExponent, BadNode, InvalidParams, NoConvergence
from .geometry import Grid, ScalarField

log = logging.getLogger(__name__)

_GAUSS = (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0))
_STAGES = (3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 48.0)
MAX_Q = 128.0
MAX_P = 50.0


@dataclass(frozen=True)
class SolveConfig:
    p: float
    q: float | None = None
    tol_rel_energy: float = 1e-9
    max_iters: int = 50_000
    continuation: tuple = ()
    shrink: float = 0.5
    armijo: float = 1e-4
    patience: int = 10
    dirac_patience: int = 2
    # "fixed-point" follows the argmax of successive Dirac solutions;
    # "hill-climb" additionally maximizes v_y(y) over neighbouring nodes
    locate: str = "fixed-point"
    max_updates: int = 20

    def __post_init__(self):
        if not self.tol_rel_energy > 0:
            raise InvalidParams("tol_rel_energy", "must be > 0")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InvalidParams("max_iters", "must be a positive integer")
        if not 0 < self.shrink < 1:
            raise InvalidParams("shrink", "must lie in (0, 1)")
        if not 0 < self.armijo < 1:
            raise InvalidParams("armijo", "must lie in (0, 1)")
        if self.locate not in ("fixed-point", "hill-climb"):
            raise InvalidParams("locate", f"unknown strategy {self.locate!r}")
        stages = tuple(float(s) for s in self.continuation)
        if stages:
            if any(b <= a for a, b in zip(stages, stages[1:])):
                raise InvalidParams("continuation", "stages must be strictly increasing")
            if stages[-1] != float(self.p):
                raise InvalidParams("continuation", "last stage must equal p")
        object.__setattr__(self, "continuation", stages)

    def stages(self) -> tuple:
        """Continuation schedule, defaulting to the standard ladder below p."""
        if self.continuation:
            return self.continuation
        return tuple(s for s in _STAGES if s < self.p) + (float(self.p),)

    def to_json(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["continuation"] = list(self.continuation)
        return d


@dataclass(frozen=True)
class SolveReport:
    value: float
    field: ScalarField
    argmax_node: tuple
    iterations: int
    final_residual: float
    energy_trace: list = field(default_factory=list, repr=False)
    node: tuple = ()

    def to_json(self) -> dict:
        return {"value": self.value, "iterations": self.iterations,
                "final_residual": self.final_residual, "argmax": list(self.argmax_node)}


class EnergyOperator:
    """Sparse map from interior node values to Gauss-point gradients.

    Row ``2*(q*ncells + c) + k`` holds component ``k`` of the gradient at
    Gauss point ``q`` of cell ``c``; every Gauss point has weight ``h^2/4``.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        h = grid.h
        m = grid.mask
        idx = -np.ones(grid.shape, dtype=np.int64)
        idx[m] = np.arange(grid.n_interior)
        touch = m[:-1, :-1] | m[1:, :-1] | m[:-1, 1:] | m[1:, 1:]
        ci, cj = np.nonzero(touch)
        nc = len(ci)
        corners = ((0, 0), (0, 1), (1, 0), (1, 1))
        rows, cols, vals = [], [], []
        q = 0
        for eta in _GAUSS:          # local y coordinate
            for xi in _GAUSS:       # local x coordinate
                dnx = {(0, 0): -(1 - eta), (0, 1): 1 - eta, (1, 0): -eta, (1, 1): eta}
                dny = {(0, 0): -(1 - xi), (0, 1): -xi, (1, 0): 1 - xi, (1, 1): xi}
                base = 2 * (q * nc + np.arange(nc))
                for comp, dn in ((0, dnx), (1, dny)):
                    for c in corners:
                        node = idx[ci + c[0], cj + c[1]]
                        keep = node >= 0
                        rows.append(base[keep] + comp)
                        cols.append(node[keep])
                        vals.append(np.full(keep.sum(), dn[c] / h))
                q += 1
        self.n = grid.n_interior
        self.B = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(8 * nc, self.n))
        self.BT = self.B.T.tocsr()
        self.weight = 0.25 * h * h
        self.y_index = idx

    def gradients(self, vec):
        g = (self.B @ vec).reshape(-1, 2)
        return g, np.einsum("ij,ij->i", g, g)

    def energy(self, vec, p):
        """Energy, its gradient, and squared Gauss-point slopes."""
        g, s = self.gradients(vec)
        a = s ** (0.5 * (p - 2))
        E = self.weight * float(np.dot(a, s))
        grad = p * self.weight * (self.BT @ (a[:, None] * g).ravel())
        return E, grad, s

    def lagged_matrix(self, s, p, scale=1.0):
        w = scale * self.weight * s ** (0.5 * (p - 2))
        top = w.max()
        if top <= 0:
            w = np.full_like(w, scale * self.weight)
        else:
            w = np.maximum(w, 1e-10 * top)
        return (self.BT @ sp.diags(np.repeat(w, 2)) @ self.B).tocsc()


@functools.lru_cache(maxsize=8)
def energy_operator(grid: Grid) -> EnergyOperator:
    return EnergyOperator(grid)


def p_energy(u: ScalarField, p: float) -> tuple[float, ScalarField]:
    """Discrete ``||grad u||_p^p`` and its gradient w.r.t. interior node values.

    Non-interior nodes are the fixed Dirichlet data, so the returned gradient
    field is zero there.
    """
    if not p > 1:
        raise BadExponent(f"p_energy needs p > 1, got {p}")
    op = energy_operator(u.grid)
    E, g, _ = op.energy(u.interior(), p)
    return E, ScalarField.from_interior(u.grid, g)


def _lq(vec, q, area_weight):
    m = float(np.max(np.abs(vec))) if len(vec) else 0.0
    if m == 0.0:
        return 0.0
    return m * float(np.sum((np.abs(vec) / m) ** q) * area_weight) ** (1.0 / q)


def lq_norm(u: ScalarField, q: float) -> float:
    """``(sum |u|^q h^2)^(1/q)`` over the nodes."""
    if not q >= 1:
        raise BadExponent(f"lq_norm needs q >= 1, got {q}")
    return _lq(u.values.ravel(), q, u.grid.h ** 2)


def _check_p(p):
    if not p > 2:
        raise BadExponent(f"p must exceed the dimension N = 2, got p={p}")
    if p > MAX_P:
        raise BadExponent(f"p={p} exceeds the supported maximum {MAX_P:g}")


def _positive_start(grid: Grid) -> np.ndarray:
    rho = distance_field(grid.spec, grid).rho
    return rho.interior() / rho.interior().max()


def solve_lambda_q(grid: Grid, cfg: SolveConfig, init: ScalarField | None = None) -> SolveReport:
    """Best constant lambda_q and its positive extremal function.

    Minimizes ``E(u)/||u||_q^p`` by preconditioned projected descent: each
    trial point is clamped to ``u >= 0`` and rescaled to unit ``L^q`` norm.
    Stops once the relative change stays below ``tol_rel_energy`` for
    ``patience`` consecutive accepted steps.

    Raises
    ------
    BadExponent
        If ``p <= 2``, ``q`` is missing, ``q < 1`` or ``q >= 128``.
    NoConvergence
        If ``max_iters`` is reached; the partial report is attached.
    """
    p, q = cfg.p, cfg.q
    _check_p(p)
    if q is None or not 1 <= q < MAX_Q:
        raise BadExponent(f"q must satisfy 1 <= q < {MAX_Q:g}, got {q}")
    op = energy_operator(grid)
    A = grid.h ** 2

    def quotient(u):
        E, gE, s = op.energy(u, p)
        N = _lq(u, q, A)
        gN = N ** (1 - q) * np.abs(u) ** (q - 2) * u * A if q != 1 else np.sign(u) * A
        R = E / N ** p
        return R, gE / N ** p - p * E * N ** (-p - 1) * gN, s

    def normalize(u):
        u = np.maximum(u, 0.0)
        return u / _lq(u, q, A)

    u = init.interior() if init is not None else _positive_start(grid)
    u = normalize(np.asarray(u, dtype=float))
    R, g, s = quotient(u)
    trace = [R]
    alpha, quiet, it = 1.0, 0, 0
    while quiet < cfg.patience:
        if it >= cfg.max_iters:
            rep = _report(grid, u, R, it, float(np.abs(g).max()), trace)
            raise NoConvergence(f"lambda_q solve did not converge in {it} iterations", rep)
        it += 1
        K = op.lagged_matrix(s, p, scale=p)
        d = -spla.splu(K).solve(g)
        slope = float(g @ d)
        alpha = min(1.0, 2.0 * alpha)
        while True:
            un = normalize(u + alpha * d)
            Rn, gn, sn = quotient(un)
            if Rn <= R + cfg.armijo * alpha * slope:
                break
            alpha *= cfg.shrink
            if alpha < 1e-14:
                break
        if not Rn <= R:
            log.debug("lambda_q line search stalled at R=%.17g", R)
            break
        rel = (R - Rn) / Rn
        quiet = quiet + 1 if rel < cfg.tol_rel_energy else 0
        u, R, g, s = un, Rn, gn, sn
        trace.append(R)
    log.info("lambda_q p=%g q=%g: %.10g after %d iterations", p, q, R, it)
    E = op.energy(u, p)[0]
    return _report(grid, u, E, it, float(np.abs(g).max()), trace)


def _report(grid, vec, value, iters, resid, trace, node=None):
    f = ScalarField.from_interior(grid, vec)
    amax = f.argmax()
    return SolveReport(float(value), f, grid.node_xy(amax), int(iters), float(resid),
                       list(trace), node if node is not None else amax)


def _ray_scale(op, v, p, yk):
    """Scale v so that t*v minimizes J along its ray."""
    E = op.energy(v, p)[0]
    if E <= 0 or v[yk] <= 0:
        return v
    return v * (v[yk] / E) ** (1.0 / (p - 1))


def _dirac_stage(op, p, yk, v, cfg, tol, max_iters):
    """Minimize E(v)/p - v[yk]; returns (v, iterations, residual, trace)."""

    def J(v):
        E, gE, s = op.energy(v, p)
        g = gE / p
        g[yk] -= 1.0
        return E / p - v[yk], g, s

    Jv, g, s = J(v)
    trace = [Jv]
    quiet, it = 0, 0
    while quiet < cfg.dirac_patience:
        if it >= max_iters:
            return v, it, float(np.abs(g).max()), trace, False
        it += 1
        d = -spla.splu(op.lagged_matrix(s, p)).solve(g)
        slope = float(g @ d)
        if slope >= 0:
            break
        # secant estimate of the exact line minimizer, then Armijo backtracking
        _, g1, _ = J(v + d)
        curv = float(g1 @ d) - slope
        alpha = min(1.0, max(1e-3, -slope / curv)) if curv > 0 else 1.0
        while True:
            vn = v + alpha * d
            Jn, gn, sn = J(vn)
            if Jn <= Jv + cfg.armijo * alpha * slope:
                break
            alpha *= cfg.shrink
            if alpha < 1e-14:
                break
        if not Jn <= Jv:
            log.debug("dirac line search stalled at J=%.17g", Jv)
            break
        rel = (Jv - Jn) / max(abs(Jn), 1e-300)
        quiet = quiet + 1 if rel < tol else 0
        v, Jv, g, s = vn, Jn, gn, sn
        trace.append(Jv)
    return v, it, float(np.abs(g).max()), trace, True


def dirac_solve(grid: Grid, p: float, y, cfg: SolveConfig | None = None,
                init: ScalarField | None = None) -> SolveReport:
    """Solve ``-Delta_p v = delta_y`` with a unit load lumped at node ``y``.

    The minimizer of the strictly convex ``J(v) = E(v)/p - v(y)`` is sought
    through the exponent stages of ``cfg``; intermediate stages use a looser
    tolerance.  ``value`` is ``p_energy(v)``, which equals ``v(y)`` at the
    exact discrete minimizer.

    Raises
    ------
    BadExponent, BadNode, NoConvergence
    """
    _check_p(p)
    cfg = cfg or SolveConfig(p=p)
    node = (int(y[0]), int(y[1]))
    if not grid.is_interior(node):
        raise BadNode(f"load node {node} is not an interior node")
    op = energy_operator(grid)
    yk = int(op.y_index[node])
    stages = cfg.stages() if cfg.p == p else tuple(s for s in _STAGES if s < p) + (float(p),)
    v = init.interior().copy() if init is not None else _positive_start(grid)
    v = np.maximum(v, 0.0)
    total, trace, resid = 0, [], math.inf
    for k, ps in enumerate(stages):
        last = k == len(stages) - 1
        tol = cfg.tol_rel_energy if last else max(cfg.tol_rel_energy, 1e-6)
        v = _ray_scale(op, v, ps, yk)
        v, it, resid, trace, ok = _dirac_stage(op, ps, yk, v, cfg, tol, cfg.max_iters - total)
        total += it
        if not ok:
            rep = _report(grid, v, op.energy(v, p)[0], total, resid, trace, node)
            raise NoConvergence(f"Dirac solve at p={ps:g} did not converge", rep)
    E = op.energy(v, p)[0]
    log.info("dirac p=%g y=%s: E=%.10g v(y)=%.10g after %d iterations", p, node, E, v[yk], total)
    return _report(grid, v, E, total, resid, trace, node)


def _neighbours(grid, node):
    i, j = node
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if (di or dj) and grid.is_interior((i + di, j + dj)):
                yield (i + di, j + dj)


def _shifted(field: ScalarField, src, dst) -> ScalarField:
    di, dj = dst[0] - src[0], dst[1] - src[1]
    v = np.roll(field.values, (di, dj), axis=(0, 1))
    return ScalarField(field.grid, np.where(field.grid.mask, v, 0.0))


def solve_extremal(grid: Grid, p: float, cfg: SolveConfig | None = None,
                   init: ScalarField | None = None) -> SolveReport:
    """Best constant Lambda_p and its extremal function u_p (max exactly 1).

    Starting from the largest value of the distance function, the load node
    is moved to the argmax of the current Dirac solution until it stops
    moving.  With ``cfg.locate == "hill-climb"`` the node is then moved to
    any neighbour with a larger ``v_y(y)``, since ``Lambda_p`` is the
    minimum over y of ``v_y(y)^(1-p)``.

    Raises
    ------
    NoConvergence
        If the load node cycles or needs more than ``cfg.max_updates`` moves.
    """
    _check_p(p)
    cfg = cfg or SolveConfig(p=p)
    warm = replace(cfg, continuation=(float(p),))
    y = distance_field(grid.spec, grid).rho.argmax()
    first = warm if init is not None and not cfg.continuation else cfg
    rep = dirac_solve(grid, p, y, first, init=init)
    total = rep.iterations
    seen = [y]
    while True:
        ynew = rep.field.argmax()
        if ynew == y:
            break
        if ynew in seen or len(seen) > cfg.max_updates:
            raise NoConvergence(f"load node cycles through {seen + [ynew]}", rep)
        seen.append(ynew)
        rep = dirac_solve(grid, p, ynew, warm, init=_shifted(rep.field, y, ynew))
        total += rep.iterations
        y = ynew
    if cfg.locate == "hill-climb":
        best = rep
        improved = True
        while improved:
            improved = False
            vy = best.field.values[y]
            for nb in _neighbours(grid, y):
                trial = dirac_solve(grid, p, nb, warm, init=_shifted(best.field, y, nb))
                total += trial.iterations
                if trial.field.values[nb] > vy * (1 + 1e-12) and trial.field.argmax() == nb:
                    best, y, vy, improved = trial, nb, trial.field.values[nb], True
            if len(seen) > cfg.max_updates:
                raise NoConvergence("hill climb exceeded max_updates", best)
            seen.append(y)
        rep = best
    v = rep.field.values
    u = ScalarField(grid, v / v[y])
    lam = p_energy(u, p)[0]
    log.info("extremal p=%g: Lambda=%.10g at node %s", p, lam, y)
    return SolveReport(lam, u, grid.node_xy(y), total, rep.final_residual,
                       rep.energy_trace, y)
