"""Command-line front end.

Exit codes: 0 success, 2 invalid configuration, 3 runtime failure (for
example a setting with no accepted events).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import analytic, montecarlo, protocol

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3

DEFAULT_P_POINTS = 101
DEFAULT_D_POINTS = 181


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_prep(p, mixed=True):
    p.add_argument("--alpha-sq", type=float, default=0.5, help="|alpha|^2 of the system state")
    p.add_argument("--gamma", type=float, default=0.0, help="phase of alpha beta* (gamma_1 for mixtures)")
    if mixed:
        p.add_argument("--p", type=float, default=None, help="use the balanced mixed family with this weight")


def _add_refs(p):
    p.add_argument("--qsq", type=float, default=0.5, help="|q|^2 of Alice's reference")
    p.add_argument("--qsq-b", type=float, default=0.5, help="|q|^2 of Bob's reference")
    p.add_argument("--transmittivity", type=float, default=0.5)


def _add_output(p, default_format="json"):
    p.add_argument("--output", default=None, help="write here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"), default=default_format)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="modebell", description="Spatial-mode CHSH test simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("chsh", help="exact correlators and CHSH value")
    _add_prep(p)
    _add_refs(p)
    p.add_argument("--angles", default="optimal", help="optimal | optimal-search | four comma-separated angles")
    p.add_argument("--d", type=float, default=None, help="surface phase offset (overrides --angles)")
    _add_output(p)

    p = sub.add_parser("scan", help="C(p, d) surface of the balanced mixed family")
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--p-points", type=int, default=DEFAULT_P_POINTS)
    p.add_argument("--d-points", type=int, default=DEFAULT_D_POINTS)
    _add_output(p, "csv")

    p = sub.add_parser("boundary", help="mixing probability where the violation ends")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--d-points", type=int, default=360)
    _add_output(p)

    p = sub.add_parser("shots", help="Monte Carlo CHSH estimate")
    _add_prep(p)
    _add_refs(p)
    p.add_argument("--angles", default="optimal")
    p.add_argument("--d", type=float, default=None)
    p.add_argument("--shots", type=int, default=100_000, help="shots per setting")
    p.add_argument("--seed", type=int, default=42)
    _add_output(p)

    p = sub.add_parser("horodecki", help="maximal CHSH value of the mixed family")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=0.0)
    _add_output(p)

    p = sub.add_parser("separable", help="largest CHSH value over number-diagonal separable states")
    p.add_argument("--n", type=int, default=1, help="total particle number (1 or 2)")
    p.add_argument("--weight-steps", type=int, default=10, help="weight grid resolution 1/steps")
    p.add_argument("--angle-points", type=int, default=72)
    _add_refs(p)
    _add_output(p)

    p = sub.add_parser("biased", help="optimized CHSH value against Alice's reference bias")
    p.add_argument("--qsq", default=None, help="comma-separated |q|^2 values (default 0, 0.1, ..., 1)")
    p.add_argument("--qsq-b", type=float, default=0.5)
    p.add_argument("--alpha-sq", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--angle-points", type=int, default=72)
    _add_output(p)
    return parser


def _unit_interval(name, value):
    if value is None or not (0.0 <= value <= 1.0) or not math.isfinite(value):
        raise ConfigError(f"{name} must lie in [0, 1], got {value}")
    return value


def _prep(args):
    if getattr(args, "p", None) is not None:
        return analytic.mixed_family(_unit_interval("--p", args.p), args.gamma)
    return protocol.SystemPrep.from_alpha_sq(_unit_interval("--alpha-sq", args.alpha_sq), args.gamma)


def _refs(args):
    return (
        protocol.ReferenceSpec.from_qsq(_unit_interval("--qsq", args.qsq)),
        protocol.ReferenceSpec.from_qsq(_unit_interval("--qsq-b", args.qsq_b)),
    )


def _settings(args, prep, ref_a, ref_b, t):
    gamma1 = args.gamma
    if args.d is not None:
        return analytic.surface_settings(args.d, gamma1), "surface"
    if args.angles == "optimal":
        return analytic.optimal_settings(gamma1, 0.0), "optimal"
    if args.angles == "optimal-search":
        res = protocol.maximize_chsh(protocol.Experiment(prep, ref_a, ref_b, t))
        return res.settings, "optimal-search"
    try:
        vals = [float(x) for x in args.angles.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse --angles {args.angles!r}") from None
    if len(vals) != 4 or not all(math.isfinite(v) for v in vals):
        raise ConfigError("--angles needs four finite comma-separated values")
    return protocol.ChshSettings(*vals), "explicit"


def _transmittivity(args):
    return _unit_interval("--transmittivity", args.transmittivity)


def cmd_chsh(args):
    prep = _prep(args)
    ref_a, ref_b = _refs(args)
    t = _transmittivity(args)
    settings, how = _settings(args, prep, ref_a, ref_b, t)
    res = protocol.Experiment(prep, ref_a, ref_b, t).chsh(settings)
    return {**res.to_dict(), "angles": how}


def surface_rows(gamma, p_points, d_points):
    if p_points < 2 or d_points < 2:
        raise ConfigError("grid resolutions must be >= 2")
    p_grid = np.linspace(0.0, 1.0, p_points)
    # C(p, d + pi) = C(p, d): one period of d suffices
    d_grid = np.linspace(0.0, math.pi, d_points)
    return analytic.c_mixed_surface(p_grid, d_grid, gamma)


def cmd_scan(args):
    rows = surface_rows(args.gamma, args.p_points, args.d_points)
    return [{"p": r.p, "d": r.d, "C": r.C} for r in rows]


def cmd_boundary(args):
    if not args.tol > 0:
        raise ConfigError("--tol must be positive")
    if args.d_points < 2:
        raise ConfigError("--d-points must be >= 2")
    p_star = analytic.violation_boundary(args.tol, args.d_points)
    return {
        "p_star": p_star,
        "p_star_upper": 1.0 - p_star,
        "analytic": analytic.boundary_analytic(),
        "tol": args.tol,
        "d_points": args.d_points,
    }


def cmd_shots(args):
    if args.shots < montecarlo.MIN_SHOTS_PER_SETTING:
        raise ConfigError(f"--shots must be >= {montecarlo.MIN_SHOTS_PER_SETTING}")
    prep = _prep(args)
    ref_a, ref_b = _refs(args)
    t = _transmittivity(args)
    settings, _ = _settings(args, prep, ref_a, ref_b, t)
    res = montecarlo.estimate_chsh(prep, settings, ref_a, ref_b, t, args.shots, args.seed)
    exact = protocol.Experiment(prep, ref_a, ref_b, t).chsh(settings).value
    return {**res.to_dict(), "C_exact": exact}


def cmd_horodecki(args):
    prep = analytic.mixed_family(_unit_interval("--p", args.p), args.gamma)
    rho = analytic.TwoQubitState.from_prep(prep)
    return {
        "p": args.p,
        "horodecki_max_chsh": analytic.horodecki_max_chsh(rho),
        "correlation_matrix": analytic.correlation_matrix(rho).tolist(),
    }


def cmd_separable(args):
    if args.n not in (1, 2):
        raise ConfigError("--n must be 1 or 2")
    if args.weight_steps < 1 or args.angle_points < 2:
        raise ConfigError("--weight-steps must be >= 1 and --angle-points >= 2")
    ref_a, ref_b = _refs(args)
    res = protocol.separable_scan(
        args.n,
        protocol.simplex_grid(args.n + 1, args.weight_steps),
        protocol.angle_grid(args.angle_points),
        ref_a,
        ref_b,
        _transmittivity(args),
    )
    return res.to_dict()


def cmd_biased(args):
    if args.qsq is None:
        grid = [k / 10 for k in range(11)]
    else:
        try:
            grid = [float(x) for x in args.qsq.split(",")]
        except ValueError:
            raise ConfigError(f"cannot parse --qsq {args.qsq!r}") from None
    for q in grid:
        _unit_interval("--qsq", q)
    _unit_interval("--qsq-b", args.qsq_b)
    _unit_interval("--alpha-sq", args.alpha_sq)
    if args.angle_points < 2:
        raise ConfigError("--angle-points must be >= 2")
    pts = analytic.biased_reference_scan(grid, args.qsq_b, args.alpha_sq, args.gamma, args.angle_points)
    return [pt.to_dict() for pt in pts]


COMMANDS = {
    "chsh": cmd_chsh,
    "scan": cmd_scan,
    "boundary": cmd_boundary,
    "shots": cmd_shots,
    "horodecki": cmd_horodecki,
    "separable": cmd_separable,
    "biased": cmd_biased,
}
TABULAR = {"scan", "biased"}


def _format_csv(rows) -> str:
    buf = io.StringIO()
    flat = [{k: (json.dumps(v) if isinstance(v, (dict, list)) else v) for k, v in r.items()} for r in rows]
    writer = csv.DictWriter(buf, fieldnames=list(flat[0]), lineterminator="\n")
    writer.writeheader()
    for r in flat:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def render(command: str, result, fmt: str) -> str:
    if fmt == "csv":
        if command not in TABULAR:
            raise ConfigError(f"csv output is only available for: {', '.join(sorted(TABULAR))}")
        return _format_csv(result)
    if command == "scan":
        result = {"columns": ["p", "d", "C"], "rows": [[r["p"], r["d"], r["C"]] for r in result]}
    return json.dumps(result, indent=2, sort_keys=True) + "\n"


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        result = COMMANDS[args.command](args)
        text = render(args.command, result, args.format)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (montecarlo.AllShotsRejected, protocol.PostSelectionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
