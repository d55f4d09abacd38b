"""Command-line entry point.

Every subcommand validates its inputs, computes, writes its outputs and then
a ``<stem>.manifest.json`` beside the primary output.  Exit codes: 0 success,
2 validation error, 3 no convergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, closedform
from .asymptotics import annulus_multiplicity, study_p, study_q
from .distance import distance_field, ridge_set
from .errors import InvalidParams, NoConvergence, ValidationError
from .geometry import DomainSpec, make_domain, rasterize
from .inflap import InfProblem, inf_solve
from .io import export_field, write_distance_csv, write_json, write_ridge_csv
from .plap import SolveConfig, _check_p, dirac_solve, solve_extremal, solve_lambda_q

EXIT_OK, EXIT_VALIDATION, EXIT_NO_CONVERGENCE, EXIT_IO = 0, 2, 3, 4
LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "trace": logging.DEBUG}

log = logging.getLogger("sobex")


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    version: str = __version__
    timestamp: str = ""
    outputs: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj) -> "RunManifest":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(**obj)


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _load_domain(path) -> DomainSpec:
    if path is None:
        return make_domain("disk", {"R": 1.0})
    text = Path(path).read_text()
    try:
        return DomainSpec.from_json(text)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InvalidParams("domain", f"cannot parse {path}: {exc}")


def _stem(out) -> Path:
    p = Path(out)
    return p.with_suffix("") if p.suffix else p


def _solver_cfg(args, p, q=None) -> SolveConfig:
    return SolveConfig(p=p, q=q, tol_rel_energy=args.tol, max_iters=args.max_iters,
                       locate=getattr(args, "locate", "fixed-point"))


# ---------------------------------------------------------------- commands


def cmd_closed_form(args):
    f = args.formula
    if f == "lambda-ball":
        v = closedform.lambda_ball(args.n, args.p, args.r)
    elif f == "sobolev":
        v = closedform.sobolev_constant(args.n, args.p)
    elif f == "ball-profile":
        v = closedform.ball_profile(args.n, args.p, args.r, args.at)
    elif f == "talenti-lower":
        v = closedform.talenti_lower(args.n, args.p, args.area)
    elif f == "inradius-upper":
        v = closedform.inradius_upper(args.n, args.p, args.r)
    elif f == "p-to-n-limit":
        v = closedform.p_to_N_limit_constant(args.n)
    else:
        v = closedform.renwei_constant(args.n)
    print(f"{v:.17g}")
    outputs, result = [], {"formula": f, "value": v}
    if args.out:
        write_json(result, args.out)
        outputs.append(str(args.out))
    return outputs, None


def _grid(args):
    spec = _load_domain(args.domain)
    return spec, rasterize(spec, args.resolution)


def cmd_distance(args):
    spec, grid = _grid(args)
    res = distance_field(spec, grid, method=args.method)
    print(f"{res.sup_norm:.17g}")
    write_distance_csv(res, args.out)
    rep = _stem(args.out).with_suffix(".report.json")
    write_json({"sup_norm": res.sup_norm, "maxima": res.maxima,
                "used_exact_formula": res.used_exact_formula}, rep)
    return [str(args.out), str(rep)], None


def cmd_ridge(args):
    spec, grid = _grid(args)
    res = ridge_set(spec, grid, args.eps_near, args.delta_sep)
    print(len(res.ridge_nodes))
    write_ridge_csv(res, grid, args.out)
    return [str(args.out)], None


def _write_solve(args, rep):
    export_field(rep.field, args.out, args.format)
    path = _stem(args.out).with_suffix(".report.json")
    write_json(rep.to_json(), path)
    print(f"{rep.value:.17g}")
    return [str(args.out), str(path)], {"iterations": rep.iterations}


def cmd_lambda_q(args):
    cfg = _solver_cfg(args, args.p, args.q)
    _check_p(args.p)
    spec, grid = _grid(args)
    return _write_solve(args, solve_lambda_q(grid, cfg))


def cmd_extremal(args):
    cfg = _solver_cfg(args, args.p)
    _check_p(args.p)
    spec, grid = _grid(args)
    return _write_solve(args, solve_extremal(grid, args.p, cfg))


def cmd_dirac(args):
    cfg = _solver_cfg(args, args.p)
    _check_p(args.p)
    spec, grid = _grid(args)
    at = args.at if args.at is not None else distance_field(spec, grid).maxima[0]
    return _write_solve(args, dirac_solve(grid, args.p, grid.nearest_node(at), cfg))


def cmd_infinity(args):
    spec, grid = _grid(args)
    at = args.puncture if args.puncture is not None else distance_field(spec, grid).maxima[0]
    prob = InfProblem(grid, grid.nearest_node(at), args.stencil_radius)
    rep = inf_solve(prob, args.tol, args.max_sweeps)
    export_field(rep.field, args.out, args.format)
    path = _stem(args.out).with_suffix(".report.json")
    write_json({**rep.to_json(), "puncture": grid.node_xy(prob.puncture)}, path)
    print(f"{rep.lipschitz_estimate:.17g}")
    return [str(args.out), str(path)], None


def _write_study(args, rep):
    write_json(rep.to_json(), args.out)
    csv_path = _stem(args.out).with_suffix(".csv")
    rep.write_csv(csv_path)
    json.dump(rep.verdicts, sys.stdout)
    print()
    timings = {repr(r.exponent): r.wall_time for r in rep.records}
    return [str(args.out), str(csv_path)], {"wall_times": timings}


def cmd_study_q(args):
    cfg = _solver_cfg(args, args.p)
    _check_p(args.p)
    spec, grid = _grid(args)
    return _write_study(args, study_q(grid, args.p, args.q_list, cfg, threads=args.threads))


def cmd_study_p(args):
    base = _solver_cfg(args, max(args.p_list) if args.p_list else 3.0)
    spec, grid = _grid(args)
    return _write_study(args, study_p(grid, args.p_list, base))


def cmd_annulus(args):
    res = annulus_multiplicity(args.a, args.b, args.resolution, args.angles,
                               args.tol, args.max_sweeps, args.stencil_radius)
    write_json(res.to_json(), args.out)
    outputs = [str(args.out)]
    stem = _stem(args.out)
    for k, rep in enumerate(res.reports):
        p = Path(f"{stem}.field{k}.{args.format}")
        export_field(rep.field, p, args.format)
        outputs.append(str(p))
    print(json.dumps(res.pairwise.tolist()))
    return outputs, None


# ------------------------------------------------------------------ parser


def _common_grid(sp):
    sp.add_argument("--domain", help="domain JSON file (default: unit disk)")
    sp.add_argument("--resolution", type=int, default=81, help="nodes per unit length")
    sp.add_argument("--out", help="primary output file (default: <command>.<format>)")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")


def _solver_opts(sp):
    sp.add_argument("--tol", type=float, default=1e-9, help="relative energy tolerance")
    sp.add_argument("--max-iters", type=int, default=50_000)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sobex", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"sobex {__version__}")
    ap.add_argument("--threads", type=int, default=1, help="cap on worker threads")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("closed-form", help="evaluate a closed-form constant")
    sp.add_argument("formula", choices=("lambda-ball", "sobolev", "ball-profile",
                                        "talenti-lower", "inradius-upper", "p-to-n-limit",
                                        "renwei"))
    sp.add_argument("--n", type=int, default=2, help="dimension")
    sp.add_argument("--p", type=float, default=4.0)
    sp.add_argument("--r", type=float, default=1.0, help="radius")
    sp.add_argument("--at", type=float, default=0.0, help="radius for ball-profile")
    sp.add_argument("--area", type=float, default=math.pi)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_closed_form)

    sp = sub.add_parser("distance", help="distance to the boundary")
    _common_grid(sp)
    sp.add_argument("--method", choices=("auto", "exact", "fmm"), default="auto")
    sp.set_defaults(func=cmd_distance)

    sp = sub.add_parser("ridge", help="ridge nodes and witnesses")
    _common_grid(sp)
    sp.add_argument("--eps-near", type=float)
    sp.add_argument("--delta-sep", type=float)
    sp.set_defaults(func=cmd_ridge)

    sp = sub.add_parser("lambda-q", help="best constant lambda_q")
    _common_grid(sp)
    _solver_opts(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.set_defaults(func=cmd_lambda_q)

    sp = sub.add_parser("extremal", help="best constant Lambda_p and extremal function")
    _common_grid(sp)
    _solver_opts(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--locate", choices=("fixed-point", "hill-climb"), default="fixed-point")
    sp.set_defaults(func=cmd_extremal)

    sp = sub.add_parser("dirac", help="p-Laplace problem with a point load")
    _common_grid(sp)
    _solver_opts(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--at", type=float, nargs=2, metavar=("X", "Y"),
                    help="load point (default: a distance maximum)")
    sp.set_defaults(func=cmd_dirac)

    sp = sub.add_parser("infinity", help="punctured infinity-Laplace problem")
    _common_grid(sp)
    sp.add_argument("--puncture", type=float, nargs=2, metavar=("X", "Y"))
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--max-sweeps", type=int, default=100_000)
    sp.add_argument("--stencil-radius", type=int, default=2)
    sp.set_defaults(func=cmd_infinity)

    sp = sub.add_parser("study-q", help="sweep lambda_q over q")
    _common_grid(sp)
    _solver_opts(sp)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--q-list", type=_floats, default=[2, 4, 8, 16, 32, 64])
    sp.set_defaults(func=cmd_study_q)

    sp = sub.add_parser("study-p", help="sweep Lambda_p over p")
    _common_grid(sp)
    _solver_opts(sp)
    sp.add_argument("--p-list", type=_floats, default=[3, 4, 6, 8, 12, 16])
    sp.set_defaults(func=cmd_study_p)

    sp = sub.add_parser("annulus-multiplicity", help="punctured annulus solutions")
    sp.add_argument("--a", type=float, default=1.0)
    sp.add_argument("--b", type=float, default=2.0)
    sp.add_argument("--resolution", type=int, default=41)
    sp.add_argument("--angles", type=_floats, default=[0.0, math.pi])
    sp.add_argument("--out", help="report JSON (default: annulus-multiplicity.json)")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--max-sweeps", type=int, default=100_000)
    sp.add_argument("--stencil-radius", type=int, default=2)
    sp.set_defaults(func=cmd_annulus)
    return ap


def _config(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    if getattr(args, "domain", None):
        try:
            cfg["domain_spec"] = json.loads(Path(args.domain).read_text())
        except (OSError, json.JSONDecodeError):
            pass
    return cfg


def run(argv=None) -> int:
    """Parse ``argv``, run the subcommand and return the exit code."""
    level = os.environ.get("SOBEX_LOG", "quiet").lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    if args.command != "closed-form" and args.out is None:
        json_out = args.command.startswith("study") or args.command == "annulus-multiplicity"
        args.out = f"{args.command}.{'json' if json_out else args.format}"
    t0 = time.perf_counter()
    try:
        outputs, extra = args.func(args)
        if outputs:
            man = RunManifest(args.command, _config(args),
                              timestamp=datetime.now(timezone.utc).isoformat(),
                              outputs=outputs)
            man.timings = {"total_seconds": time.perf_counter() - t0, **(extra or {})}
            write_json(man.to_json(), _stem(outputs[0]).with_suffix(".manifest.json"))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NoConvergence as exc:
        print(f"error: no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
