"""Exponent sweeps for the q- and p-limits, and the annulus puncture study."""

from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .distance import distance_field
from .errors import BadExponent, BadNode, InvalidParams, SobexError
from .geometry import Grid, make_domain, rasterize
from .inflap import InfProblem, InfReport, inf_solve
from .plap import _STAGES, MAX_P, MAX_Q, SolveConfig, solve_extremal, solve_lambda_q

log = logging.getLogger(__name__)

MONOTONE_SLACK = 0.005


@dataclass
class StudyRecord:
    exponent: float
    value: float = math.nan
    normalized: float = math.nan
    argmax_node: tuple = ()
    wall_time: float = 0.0
    status: str = "ok"
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_json(self, timing: bool = False) -> dict:
        d = {"exponent": self.exponent, "value": self.value, "normalized": self.normalized,
             "argmax": list(self.argmax_node), "status": self.status}
        if self.message:
            d["message"] = self.message
        d.update(self.extra)
        if timing:
            d["wall_time"] = self.wall_time
        return d


@dataclass
class StudyReport:
    kind: str
    records: list = field(default_factory=list)
    extrapolated_limit: float | None = None
    target: float | None = None
    verdicts: dict = field(default_factory=dict)
    incomplete: bool = False
    extra: dict = field(default_factory=dict)
    fields: dict = field(default_factory=dict, repr=False)

    def successes(self) -> list:
        return [r for r in self.records if r.ok]

    def to_json(self, timing: bool = False) -> dict:
        return {"kind": self.kind, "records": [r.to_json(timing) for r in self.records],
                "extrapolated_limit": self.extrapolated_limit, "target": self.target,
                "verdicts": self.verdicts, "incomplete": self.incomplete, **self.extra}

    def write_csv(self, path) -> None:
        """Flat table: one row per exponent with its per-step monotonicity flag."""
        steps = _step_flags(self)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["exponent", "value", "normalized", "argmax_x", "argmax_y",
                        "status", "monotone_step"])
            for r in self.records:
                ax, ay = r.argmax_node if r.argmax_node else ("", "")
                w.writerow([repr(float(r.exponent)), repr(float(r.value)),
                            repr(float(r.normalized)), ax if ax == "" else repr(float(ax)),
                            ay if ay == "" else repr(float(ay)), r.status,
                            steps.get(r.exponent, "")])


def _step_flags(rep: StudyReport) -> dict:
    ok = rep.successes()
    flags = {}
    for a, b in zip(ok, ok[1:]):
        if rep.kind == "q":
            flags[b.exponent] = bool(b.normalized <= a.normalized * (1 + MONOTONE_SLACK))
        else:
            flags[b.exponent] = bool(b.normalized >= a.normalized * (1 - MONOTONE_SLACK))
    return flags


def _check_increasing(values, name):
    vals = [float(v) for v in values]
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise InvalidParams(name, "exponents must be strictly increasing")
    return vals


def study_q(grid: Grid, p: float, q_list, cfg: SolveConfig | None = None,
            reference: float | None = None, threads: int = 1) -> StudyReport:
    """Sweep ``lambda_q`` over ``q_list`` at fixed ``p``.

    Checks that ``lambda_q * area^(p/q)`` does not increase, compares the
    last value with ``Lambda_p`` (from :func:`solve_extremal` unless
    ``reference`` is given) and records the sup-distance between each
    max-normalized minimizer and the extremal function.  Points are solved
    sequentially with warm starts, or cold and in parallel when
    ``threads > 1``.  A failing point is recorded and the sweep goes on.
    """
    qs = _check_increasing(q_list, "q_list")
    if qs and (qs[0] < 1 or qs[-1] >= MAX_Q):
        raise BadExponent(f"q values must lie in [1, {MAX_Q:g})")
    base = cfg or SolveConfig(p=p)
    if base.p != p:
        base = replace(base, p=p, continuation=())
    rep = StudyReport("q", extra={"p": p})
    if not qs:
        return rep
    area = grid.area

    def one(q, init=None):
        t = time.perf_counter()
        try:
            r = solve_lambda_q(grid, replace(base, q=q), init=init)
        except SobexError as exc:
            log.warning("study_q: q=%g failed: %s", q, exc)
            return StudyRecord(q, wall_time=time.perf_counter() - t, status="failed",
                               message=str(exc)), None
        rec = StudyRecord(q, r.value, r.value * area ** (p / q), r.argmax_node,
                          time.perf_counter() - t, extra={"iterations": r.iterations})
        return rec, r.field

    results = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, qs))
    else:
        prev = None
        for q in qs:
            rec, f = one(q, prev)
            results.append((rec, f))
            prev = f if f is not None else prev
    rep.records = [r for r, _ in results]
    wq = {r.exponent: f for r, f in results if f is not None}
    rep.incomplete = any(not r.ok for r in rep.records)

    target, up = reference, None
    if target is None:
        try:
            ext = solve_extremal(grid, p, replace(base, q=None))
            target, up = ext.value, ext.field
            rep.fields["extremal"] = up
        except SobexError as exc:
            log.warning("study_q: reference extremal solve failed: %s", exc)
            rep.incomplete = True
            rep.extra["reference_error"] = str(exc)
    rep.target = target
    for r in rep.records:
        if r.exponent in wq and up is not None:
            w = wq[r.exponent]
            r.extra["sup_distance_to_extremal"] = float(
                np.max(np.abs(w.values / w.max() - up.values)))
    rep.fields.update({f"w_{q:g}": f for q, f in wq.items()})
    ok = rep.successes()
    flags = _step_flags(rep)
    rep.verdicts["monotone"] = all(flags.values()) if ok else None
    if ok and target is not None:
        rel = abs(ok[-1].value - target) / target
        rep.extra["tail_relative_error"] = rel
        rep.verdicts["tail_within_5pct"] = bool(rel <= 0.05)
    return rep


def fit_limit(exponents, normalized) -> tuple[float, float]:
    """Least-squares fit of ``log y = log L + c/p``; returns ``(L, c)``."""
    x = 1.0 / np.asarray(exponents, dtype=float)
    y = np.log(np.asarray(normalized, dtype=float))
    c, logL = np.polyfit(x, y, 1)
    return float(math.exp(logL)), float(c)


def study_p(grid: Grid, p_list, cfg: SolveConfig | None = None) -> StudyReport:
    """Sweep ``Lambda_p`` over increasing ``p`` with warm-started continuation.

    Checks that ``Lambda_p^(1/p) * area^(-1/p)`` increases, extrapolates its
    limit from the last three successful points with :func:`fit_limit`, and
    compares it with ``1/||rho||_inf``.  Each record stores the distance
    from its argmax to the nearest maximum of the distance function.
    """
    ps = _check_increasing(p_list, "p_list")
    if ps and (ps[0] <= 2 or ps[-1] > MAX_P):
        raise BadExponent(f"p values must lie in (2, {MAX_P:g}]")
    dist = distance_field(grid.spec, grid)
    maxima = np.array(dist.maxima)
    rep = StudyReport("p", target=1.0 / dist.sup_norm)
    area = grid.area
    prev_p, prev_u = None, None
    for p in ps:
        if prev_u is None:
            c = SolveConfig(p=p) if cfg is None else replace(cfg, p=p, q=None, continuation=())
        else:
            stages = tuple(s for s in _STAGES if prev_p < s < p) + (p,)
            c = (SolveConfig(p=p, continuation=stages) if cfg is None
                 else replace(cfg, p=p, q=None, continuation=stages))
        t = time.perf_counter()
        try:
            r = solve_extremal(grid, p, c, init=prev_u)
        except SobexError as exc:
            log.warning("study_p: p=%g failed: %s", p, exc)
            rep.records.append(StudyRecord(p, wall_time=time.perf_counter() - t,
                                           status="failed", message=str(exc)))
            continue
        drift = float(np.min(np.hypot(maxima[:, 0] - r.argmax_node[0],
                                      maxima[:, 1] - r.argmax_node[1])))
        rep.records.append(StudyRecord(
            p, r.value, r.value ** (1 / p) * area ** (-1 / p), r.argmax_node,
            time.perf_counter() - t,
            extra={"iterations": r.iterations, "argmax_to_distance_max": drift}))
        rep.fields[f"u_{p:g}"] = r.field
        prev_p, prev_u = p, r.field
    rep.incomplete = any(not r.ok for r in rep.records)
    ok = rep.successes()
    if ok:
        rep.verdicts["increasing"] = all(_step_flags(rep).values())
        rep.verdicts["argmax_near_distance_max"] = bool(
            ok[-1].extra["argmax_to_distance_max"] <= 2 * grid.h + 1e-12)
    if len(ok) >= 2:
        tail = ok[-3:]
        L, c = fit_limit([r.exponent for r in tail], [r.normalized for r in tail])
        rep.extrapolated_limit = L
        rep.extra["fit_c"] = c
        rep.verdicts["limit_within_10pct"] = bool(abs(L - rep.target) <= 0.1 * rep.target)
        top = max(r.normalized for r in ok)
        rep.verdicts["limit_bracketed"] = bool(
            top * (1 - MONOTONE_SLACK) <= L <= 1.1 * rep.target)
    return rep


@dataclass
class MultiplicityReport:
    reports: list
    punctures: list
    pairwise: np.ndarray

    def to_json(self) -> dict:
        return {"punctures": [list(p) for p in self.punctures],
                "reports": [r.to_json() for r in self.reports],
                "pairwise_sup_distance": self.pairwise.tolist()}


def annulus_multiplicity(a: float, b: float, n: int, angles, tol: float = 1e-8,
                         max_sweeps: int = 100_000, stencil_radius: int = 2
                         ) -> MultiplicityReport:
    """Punctured infinity-Laplace solutions on the annulus ``a < |x| < b``.

    One solve per angle, punctured at the node nearest the mid-circle point
    at that angle, plus the matrix of pairwise sup-distances.
    """
    if not 0 < a < b:
        raise InvalidParams("a", f"need 0 < a < b, got a={a}, b={b}")
    angles = [float(t) for t in angles]
    if len(set(angles)) != len(angles):
        raise InvalidParams("angles", "angles must be distinct")
    grid = rasterize(make_domain("annulus", {"a": a, "b": b}), n)
    rm = 0.5 * (a + b)
    nodes = [grid.nearest_node((rm * math.cos(t), rm * math.sin(t))) for t in angles]
    if len(set(nodes)) != len(nodes):
        raise InvalidParams("angles", "two angles map to the same puncture node")
    for nd in nodes:
        if not grid.is_interior(nd):
            raise BadNode(f"puncture node {nd} is not interior")
    reports: list[InfReport] = [
        inf_solve(InfProblem(grid, nd, stencil_radius), tol, max_sweeps) for nd in nodes]
    k = len(reports)
    pair = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            pair[i, j] = pair[j, i] = reports[i].field.sup_distance(reports[j].field)
    return MultiplicityReport(reports, [grid.node_xy(nd) for nd in nodes], pair)
