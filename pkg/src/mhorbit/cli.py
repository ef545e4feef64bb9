"""Command-line frontend.

Subcommands: count, reduce, geodesics count, fit-beta, fundamental, verify,
series.  Exit codes: 0 success, 1 runtime error, 2 usage error.  Output is
deterministic JSON/CSV with a top-level formatVersion.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

from . import analysis, descent, geodesics
from .engine import (
    BallQuery,
    OrbitSpec,
    checkpoint_resume,
    checkpoint_save,
    count_ball,
    enumerate_ball,
    run_partial,
)
from .errors import DimensionMismatch, LetterOutOfRange, OrbitError
from .logspace import LogPoint, PrecisionConfig
from .variety import ExactPoint, VarietyParams, coords_to_json

USAGE_ERRORS = (DimensionMismatch, LetterOutOfRange)


def _parse_scalar(s: str):
    if "/" in s:
        return Fraction(s)
    try:
        return int(s)
    except ValueError:
        return float(s)


def _parse_point(s: str):
    return tuple(_parse_scalar(x) for x in s.split(","))


def _parse_threshold(s: str):
    """Returns (log_radius, exact_radius_or_None)."""
    if s.startswith("ln:"):
        r = Fraction(s[3:])
        return math.log(float(r)), r
    if s.startswith("exp:"):
        return float(s[4:]), None
    return float(s), None


def _make_query(args) -> BallQuery:
    log_r, radius = _parse_threshold(args.log_radius)
    return BallQuery(log_radius=log_r, radius=radius,
                     depth_cap=getattr(args, "depth_cap", None))


def _make_spec(args) -> OrbitSpec:
    params = VarietyParams(n=args.n, a=Fraction(args.a))
    coords = _parse_point(args.base)
    if len(coords) != params.n:
        raise DimensionMismatch(f"expected {params.n} coordinates, got {len(coords)}")
    kw = {}
    if getattr(args, "k_radius", None) is not None:
        kw["k_radius"] = float(args.k_radius)
    if all(not isinstance(c, float) for c in coords):
        base = ExactPoint.make(params, coords)
    else:
        bits = int(os.environ.get("ORBIT_PRECISION_BITS", "128"))
        base = LogPoint.from_coords(coords, PrecisionConfig(working_bits=bits))
    return OrbitSpec(params=params, base=base, **kw)


def _emit(obj: dict, args) -> None:
    out = json.dumps(obj, indent=2)
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(out + "\n")
    else:
        print(out)


def _cmd_count(args) -> int:
    spec = _make_spec(args)
    q = _make_query(args)
    if args.checkpoint_path and os.path.exists(args.checkpoint_path):
        result = checkpoint_resume(spec, q, args.checkpoint_path, threads=args.threads)
    elif args.checkpoint_path and args.pause_depth is not None:
        state = run_partial(spec, q, pause_depth=args.pause_depth, threads=args.threads)
        checkpoint_save(spec, q, state, args.checkpoint_path)
        _emit({"formatVersion": 1, "paused": True, "depth": state.depth,
               "frontierSize": len(state.frontier_words or [])}, args)
        return 0
    else:
        result = count_ball(spec, q, threads=args.threads, backend=args.backend)
    _emit(result.to_json(), args)
    return 0


def _cmd_reduce(args) -> int:
    params = VarietyParams(n=args.n, a=Fraction(args.a))
    coords = _parse_point(args.point)
    if len(coords) != params.n:
        raise DimensionMismatch(f"expected {params.n} coordinates, got {len(coords)}")
    point = ExactPoint.make(params, coords)
    cert = descent.reduce_to_root(params, point)
    obj = {"formatVersion": 1, **cert.to_json()}
    if args.show_steps:
        replay = cert.root
        points = [coords_to_json(replay.coords)]
        from .variety import apply_move
        for j in reversed(cert.word):
            replay = apply_move(params, replay, j)
            points.append(coords_to_json(replay.coords))
        obj["points"] = points
    _emit(obj, args)
    return 0


def _cmd_geodesics_count(args) -> int:
    if args.lengths:
        structure = geodesics.structure_from_lengths(
            [float(x) for x in args.lengths.split(",")], tolerance=args.tolerance)
    else:
        structure = geodesics.structure_from_coords(
            _parse_point(args.coords), tolerance=args.tolerance)
    gc = geodesics.count_one_sided_geodesics(
        structure, args.max_length, threads=args.threads, backend=args.backend)
    _emit(gc.to_json(), args)
    return 0


def _cmd_fit_beta(args) -> int:
    with open(args.series) as fh:
        series = analysis.CountSeries.from_csv(fh.read())
    fit_range = None
    if args.fit_min is not None or args.fit_max is not None:
        ls = [s[0] for s in series.samples]
        fit_range = (args.fit_min if args.fit_min is not None else ls[0],
                     args.fit_max if args.fit_max is not None else ls[-1])
    est = analysis.fit_power_law(series, fit_range, window=args.window)
    verdict, margin = analysis.bracket_check(est)
    obj = est.to_json()
    obj["bracket"] = {"lo": analysis.BARAGAR_BRACKET[0],
                      "hi": analysis.BARAGAR_BRACKET[1],
                      "verdict": verdict, "margin": repr(margin)}
    if args.plot:
        _write_fit_plot(series, est, args.plot)
        obj["plot"] = args.plot
    _emit(obj, args)
    return 0


def _write_fit_plot(series, est, path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    ls = np.array([s[0] for s in series.samples])
    ns = np.array([s[1] for s in series.samples], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(ls, ns, "o", ms=4, label="counts")
    xs = np.geomspace(ls[0], ls[-1], 100)
    ax.loglog(xs, np.exp(est.log_c) * xs ** est.beta, "-",
              label=f"fit slope {est.beta:.3f}")
    ax.set_xlabel("L")
    ax.set_ylabel("N(e^L)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _cmd_fundamental(args) -> int:
    params = VarietyParams(n=args.n, a=Fraction(args.a))
    roots = descent.find_fundamental_solutions(params, args.box)
    _emit({"formatVersion": 1,
           "roots": [coords_to_json(r) for r in roots]}, args)
    return 0


def _cmd_verify(args) -> int:
    spec = _make_spec(args)
    q = _make_query(args)
    violations = []
    checked = {"n": 0}

    def visitor(word, point):
        if not word:
            return  # the root itself is exempt
        checked["n"] += 1
        report = descent.verify_properties(spec.params, point)
        if not report.holds_all:
            violations.append({"word": list(word),
                               "point": coords_to_json(point.coords),
                               "A": report.holds_a, "B": report.holds_b,
                               "C": report.holds_c})

    result = enumerate_ball(spec, q, visitor, backend="exact")
    _emit({"formatVersion": 1, "checked": checked["n"], "total": result.total,
           "violations": violations}, args)
    return 0


def _cmd_series(args) -> int:
    spec = _make_spec(args)
    if args.thresholds:
        thresholds = [_parse_threshold(t)[0] for t in args.thresholds.split(",")]
        series = analysis.collect_series(spec, thresholds, threads=args.threads)
    else:
        series = analysis.collect_series_budget(
            spec, node_budget=args.budget, num_points=args.points,
            threads=args.threads)
    csv = series.to_csv()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(csv)
    else:
        sys.stdout.write(csv)
    return 0


def _add_variety_flags(p):
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--a", default="1")


def _add_run_flags(p):
    p.add_argument("--threads", type=int,
                   default=int(os.environ.get("ORBIT_THREADS", "1")))
    p.add_argument("--backend", choices=("auto", "exact", "log"), default="auto")
    p.add_argument("--depth-cap", type=int, default=None)
    p.add_argument("--output", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbit",
        description="Markoff-Hurwitz orbit enumeration and growth-exponent tools")
    parser.add_argument("--config", default=None,
                        help="key=value file; command-line flags take precedence")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="count orbit points in a sup-norm ball")
    p.add_argument("--base", required=True)
    p.add_argument("--log-radius", required=True,
                   help="log-scale threshold: decimal, ln:<radius>, or exp:<t>")
    _add_variety_flags(p)
    _add_run_flags(p)
    p.add_argument("--k-radius", type=float, default=None)
    p.add_argument("--checkpoint-path", default=None)
    p.add_argument("--pause-depth", type=int, default=None)
    p.set_defaults(func=_cmd_count)

    p = sub.add_parser("reduce", help="descend an integer point to its root")
    p.add_argument("--point", required=True)
    _add_variety_flags(p)
    p.add_argument("--show-steps", action="store_true")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_reduce)

    geo = sub.add_parser("geodesics", help="hyperbolic geodesic counting")
    geo_sub = geo.add_subparsers(dest="geo_command", required=True)
    p = geo_sub.add_parser("count", help="count one-sided simple closed geodesics")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--lengths", help="four geodesic lengths, comma separated")
    grp.add_argument("--coords", help="four variety coordinates, comma separated")
    p.add_argument("--max-length", type=float, required=True)
    p.add_argument("--tolerance", type=float, default=geodesics.DEFAULT_TOLERANCE)
    _add_run_flags(p)
    p.set_defaults(func=_cmd_geodesics_count)

    p = sub.add_parser("fit-beta", help="fit the growth exponent from a series CSV")
    p.add_argument("--series", required=True)
    p.add_argument("--fit-min", type=float, default=None)
    p.add_argument("--fit-max", type=float, default=None)
    p.add_argument("--window", type=int, default=analysis.DEFAULT_WINDOW)
    p.add_argument("--plot", default=None, help="write a log-log SVG plot here")
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_fit_beta)

    p = sub.add_parser("fundamental", help="find fundamental integer solutions")
    _add_variety_flags(p)
    p.add_argument("--box", type=int, required=True)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_fundamental)

    p = sub.add_parser("verify", help="check the descent properties on a ball")
    p.add_argument("--base", required=True)
    p.add_argument("--log-radius", required=True)
    _add_variety_flags(p)
    _add_run_flags(p)
    p.add_argument("--k-radius", type=float, default=None)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("series", help="collect a count series as CSV")
    p.add_argument("--base", required=True)
    p.add_argument("--thresholds", default=None,
                   help="comma-separated log-scale thresholds; default: budget schedule")
    p.add_argument("--budget", type=int, default=analysis.DEFAULT_NODE_BUDGET)
    p.add_argument("--points", type=int, default=40)
    _add_variety_flags(p)
    _add_run_flags(p)
    p.add_argument("--k-radius", type=float, default=None)
    p.set_defaults(func=_cmd_series)

    return parser


def _apply_config(argv):
    """Splice --config key=value pairs in as defaults (flags still win)."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    extra = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            flag = "--" + key.strip().replace("_", "-")
            if flag not in rest:
                extra.extend([flag, value.strip()])
    # insert after the subcommand tokens so argparse attributes them correctly
    return rest + extra


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    argv = _apply_config(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return 2
    except OrbitError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "IOError", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
