"""Command-line interface.

Exit codes: 0 success, 2 invariant violation, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .audit import (audit_fixed_chain, audit_no_fixed_chain, audit_profile, no_fixed_slack,
                    replay_fixed_branch)
from .errors import IrrmapError, NumericalFailure
from .mapping import RationalMapEval, estimate_degrees, fiber, random_regular_point
from .pipeline import (RunConfig, dumps_report, load_surface, resolve_profile, run_pipeline,
                       write_report)
from .profile import condition_matrix, four_squares, solve_subsystem, vanishing_report
from .projection import classify_case, compose_to_plane
from .theta import even_basis, truncation_radius

EXIT_OK, EXIT_INVARIANT, EXIT_NUMERICAL = 0, 2, 3


def _ints(text: str) -> tuple[int, ...]:
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    return tuple(vals) + (0,) * max(0, 16 - len(vals))


def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags appear before or after the subcommand
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master random seed (default 0)")
    p.add_argument("--tol", type=float, default=argparse.SUPPRESS,
                   help="Newton residual tolerance (default 1e-10)")
    p.add_argument("--out", default=argparse.SUPPRESS, help="write the JSON result to this path")
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                   help="print JSON instead of a text summary")
    return p


def _surface_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-d", "--degree", dest="d", type=int, help="polarization type (1, d)")
    p.add_argument("--omega", default="random:0",
                   help="'random:<seed>', 'identity', or a surface descriptor JSON file")
    p.add_argument("--profile", default="auto", help="'auto' or 16 comma-separated integers")


def _map_flags(p: argparse.ArgumentParser) -> None:
    _surface_flags(p)
    p.add_argument("--grid", type=int, default=16, help="Newton seeds per torus axis")
    p.add_argument("--trials", type=int, default=5, help="random targets for degree estimation")
    p.add_argument("--no-refine", dest="refine", action="store_false",
                   help="skip the grid-doubling stability check")


def build_parser() -> argparse.ArgumentParser:
    flags = _global_flags()
    parser = argparse.ArgumentParser(
        prog="irrmap", parents=[flags],
        description="Build V in H0(2L)+ on a (1, d)-polarized abelian surface, measure the "
                    "induced maps, and certify a degree-4 map to the plane.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", parents=[flags], help="basis, condition matrix and V")
    _surface_flags(p)

    p = sub.add_parser("fibers", parents=[flags], help="fiber of phi through a random point")
    _map_flags(p)

    p = sub.add_parser("degree", parents=[flags], help="estimate deg phi and deg S")
    _map_flags(p)

    p = sub.add_parser("project", parents=[flags], help="compose phi with projections to P^2")
    _map_flags(p)

    p = sub.add_parser("certify", parents=[flags], help="full run with a JSON report")
    _map_flags(p)
    p.add_argument("--final-trials", type=int, default=20, help="plane targets for the final degree")
    p.add_argument("--config", help="JSON file with RunConfig fields (overrides other flags)")

    p = sub.add_parser("audit", parents=[flags], help="exact integer audits")
    p.add_argument("-d", "--degree", dest="d", type=int, help="polarization type (1, d)")
    p.add_argument("--profile", default="auto", help="'auto' or 16 comma-separated integers")
    p.add_argument("--d-mults", type=_ints, help="multiplicities d_i (default 2 a_i)")
    p.add_argument("--f-mults", type=_ints, help="fixed-part multiplicities f_i")
    p.add_argument("--m-mults", type=_ints, help="movable-part multiplicities m_i")
    p.add_argument("--replay", action="store_true", help="exhaustive fixed-branch replay")
    p.add_argument("--max-d", type=int, default=10, help="largest d in the replay")

    p = sub.add_parser("foursquares", parents=[flags], help="write n as a sum of four squares")
    p.add_argument("n", type=int)
    return parser


def _config(args, **extra) -> RunConfig:
    return RunConfig(d=args.d, omega=args.omega, seed=getattr(args, "seed", 0),
                     profile=args.profile, grid=getattr(args, "grid", 16),
                     n_trials=getattr(args, "trials", 5),
                     newton_tol=getattr(args, "tol", 1e-10),
                     refine=getattr(args, "refine", True), **extra)


def _subsystem(config: RunConfig):
    surface = load_surface(config.omega, config.d)
    profile = resolve_profile(config.profile, config.d)
    profile.validate(config.d)
    trunc = truncation_radius(surface, config.tail_tol)
    basis = even_basis(surface, trunc, config.rank_tol)
    cond = condition_matrix(basis, profile)
    return surface, profile, trunc, cond, solve_subsystem(cond, config.rank_tol)


def cmd_construct(args) -> dict:
    surface, profile, trunc, cond, V = _subsystem(_config(args))
    vanish = vanishing_report(V)
    return {
        "surface": surface.to_descriptor(),
        "profile": list(profile.a),
        "radii": list(trunc.radii),
        "series_tail": trunc.tail_bound,
        "basis_size": V.basis.size,
        "conditions": int(cond.rows.shape[0]),
        "dimV": V.dim,
        "N": V.N,
        "subsystem_gap": V.gap,
        "vanishing_orders": list(vanish.orders),
        "sharp": vanish.sharp(profile),
    }


def cmd_fibers(args) -> dict:
    config = _config(args)
    m = RationalMapEval(_subsystem(config)[-1])
    rng = np.random.default_rng(config.seed)
    z0 = random_regular_point(m.linear, rng)
    rep = fiber(m, z0, seed=int(rng.integers(2**32)), refine=config.refine,
                settings=config.settings())
    return rep.to_json()


def cmd_degree(args) -> dict:
    config = _config(args)
    m = RationalMapEval(_subsystem(config)[-1])
    est = estimate_degrees(m, config.n_trials, config.seed, config.settings(), config.refine)
    out = est.to_json()
    out["branch"] = classify_case(est).value
    return out


def _compose(config: RunConfig):
    m = RationalMapEval(_subsystem(config)[-1])
    est = estimate_degrees(m, config.n_trials, config.seed, config.settings(), config.refine)
    composed = compose_to_plane(m, classify_case(est), config.seed + 1, est, config.settings())
    return est, composed


def cmd_project(args) -> dict:
    est, composed = _compose(_config(args))
    return {
        "deg_phi": est.deg_phi,
        "deg_S": est.deg_S,
        "branch": composed.branch.value,
        "projection_centers": [c.to_json() for c in composed.projection_centers],
        "projection_degrees": composed.projection_degrees,
    }


def cmd_certify(args) -> dict:
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        if getattr(args, "out", None):
            data["out"] = args.out
        config = RunConfig.from_dict(data)
    else:
        config = _config(args, final_trials=args.final_trials, out=getattr(args, "out", None))
    return run_pipeline(config)


def cmd_audit(args) -> dict:
    if args.replay:
        summary = replay_fixed_branch(args.max_d)
        return {
            "replay_max_d": summary.max_d,
            "cases": summary.cases,
            "counterexamples": [list(map(list, c[1:])) for c in summary.counterexamples[:20]],
            "failed_checks": summary.failed_checks,
            "pass": summary.passed,
        }
    if args.d is None:
        raise SystemExit("audit needs -d unless --replay is given")
    a = resolve_profile(args.profile, args.d).a
    report = audit_profile(args.d, a)
    out = {"d": args.d, "profile": list(a)}
    if report.passed:
        if args.f_mults is not None or args.m_mults is not None:
            report.extend(audit_fixed_chain(args.d, a, args.f_mults, args.m_mults))
        else:
            dm = args.d_mults or tuple(2 * x for x in a)
            report.extend(audit_no_fixed_chain(args.d, a, dm))
            out["slack"] = no_fixed_slack(args.d, a, dm)
    out["pass"] = report.passed
    out["audits"] = report.to_json()
    return out


def cmd_foursquares(args) -> dict:
    if args.n < 0:
        raise SystemExit("n must be nonnegative")
    return {"n": args.n, "squares": list(four_squares(args.n))}


COMMANDS = {
    "construct": cmd_construct,
    "fibers": cmd_fibers,
    "degree": cmd_degree,
    "project": cmd_project,
    "certify": cmd_certify,
    "audit": cmd_audit,
    "foursquares": cmd_foursquares,
}


def _summary(result: dict) -> str:
    lines = []
    for key, value in result.items():
        if key == "audits":
            bad = [c["name"] for c in value if not c["pass"]]
            lines.append(f"audits: {len(value) - len(bad)}/{len(value)} pass"
                         + (f" (failed: {', '.join(bad)})" if bad else ""))
        elif key in ("versions", "details", "omega", "surface", "projection_centers"):
            continue
        elif isinstance(value, dict):
            lines.append(f"{key}:")
            lines += [f"  {k}: {v:.3g}" if isinstance(v, float) else f"  {k}: {v}"
                      for k, v in value.items()]
        elif isinstance(value, float):
            lines.append(f"{key}: {value:.3g}")
        else:
            lines.append(f"{key}: {value}")
    return "\n".join(lines)


def _emit(result: dict, args, write: bool = True) -> None:
    out = getattr(args, "out", None)
    if out and write:
        write_report(result, out)
    if getattr(args, "json", False):
        sys.stdout.write(dumps_report(result))
    else:
        print(_summary(result))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    # run_pipeline writes its own report, including partial ones on failure
    write = args.command != "certify"
    try:
        result = COMMANDS[args.command](args)
    except IrrmapError as exc:
        partial = getattr(exc, "report", None)
        if partial is not None:
            _emit(partial, args, write)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL if isinstance(exc, NumericalFailure) else EXIT_INVARIANT
    _emit(result, args, write)
    if args.command == "audit" and not result.get("pass", True):
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
