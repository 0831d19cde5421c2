"""Command-line front end.

Subcommands print headline constants (``design``) or write CSV tables for
the beta_hat(c) curve, the Omega(c) curve, the point densities and the
distortion-vs-ENR sweep.

Exit codes: 0 success, 2 usage error, 3 numerical failure,
4 configuration/budget error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import math
import sys

import numpy as np

from . import analysis
from .compander import density_second_moment, source_by_name
from .errors import ConfigurationError, DomainError, NumericalFailure, PreconditionError
from .simulator import DesignChoice, SimMode, SweepRecord, designs_for, sweep

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_CONFIG = 4

SWEEP_COLUMNS = [f.name for f in dataclasses.fields(SweepRecord)]

__all__ = ["main", "SweepRecord", "SWEEP_COLUMNS"]


class UsageError(Exception):
    pass


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.12g" % value


def _write_csv(out, header, rows):
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="", encoding="ascii") as fh:
            yield fh


def _c_grid(args, source):
    cmax = analysis.c_max(source)
    c_hi = cmax if args.c_max is None else args.c_max
    if not 0 < args.c_min < c_hi:
        raise UsageError(f"need 0 < c-min < c-max, got {args.c_min}, {c_hi}")
    if c_hi > cmax * (1 + 1e-12):
        raise UsageError(f"c-max = {c_hi} exceeds c_max = {cmax:.10g} for the {source.name} source")
    if args.c_points < 2:
        raise UsageError("c-points must be at least 2")
    grid = np.linspace(args.c_min, c_hi, args.c_points)
    if args.c_max is None:
        grid[-1] = cmax
    return grid


def cmd_design(args, out):
    source = source_by_name(args.source)
    design, _ = designs_for(source)
    report = analysis.naive_design_report(source, design)
    lines = [
        ("source", source.name),
        ("c0", analysis.c_max(source)),
        ("c_opt", report.c_opt),
        ("beta_hat_opt", report.beta_hat_opt),
        ("omega_opt", report.omega_opt),
        ("dispersion", report.dispersion_lower_bound),
        ("density_second_moment", design.second_moment_of_density),
        ("naive_c", report.naive_c),
        ("naive_omega", report.naive_omega),
        ("naive_dispersion", report.naive_dispersion),
        ("gap_db", report.gap_db),
    ]
    for key, value in lines:
        out.write(f"{key}={value if isinstance(value, str) else _fmt(value)}\n")


def cmd_beta_curve(args, out):
    source = source_by_name(args.source)
    grid = _c_grid(args, source)
    rows = [(c, analysis.solve_beta_hat(source, c)) for c in grid]
    _write_csv(out, ["c", "beta_hat"], rows)


def cmd_omega_curve(args, out):
    source = source_by_name(args.source)
    grid = _c_grid(args, source)
    rows = [(c, analysis.omega(source, c)) for c in grid]
    _write_csv(out, ["c", "omega"], rows)


_DEFAULT_X = {"gaussian": (-8.0, 8.0, 1601), "uniform": (-0.5, 0.5, 1001)}


def cmd_density(args, out):
    source = source_by_name(args.source)
    lo, hi, pts = _DEFAULT_X[source.name]
    lo = lo if args.x_min is None else args.x_min
    hi = hi if args.x_max is None else args.x_max
    pts = pts if args.x_points is None else args.x_points
    if not lo < hi or pts < 2:
        raise UsageError("need x-min < x-max and x-points >= 2")
    if lo < source.support.lower or hi > source.support.upper:
        raise UsageError(f"x grid leaves the {source.name} support")
    design, naive = designs_for(source)
    x = np.linspace(lo, hi, pts)
    opt_vals = design.density(x)
    naive_vals = naive.density(x)
    _write_csv(out, ["x", "lambda_optimized", "lambda_naive"], zip(x, opt_vals, naive_vals))


def _gamma_grid(args):
    if args.gamma_step <= 0 or args.gamma_min < 0 or args.gamma_max < args.gamma_min:
        raise UsageError("need 0 <= gamma-min <= gamma-max and gamma-step > 0")
    count = int(math.floor((args.gamma_max - args.gamma_min) / args.gamma_step + 1e-9)) + 1
    return [args.gamma_min + i * args.gamma_step for i in range(count)]


def cmd_sweep(args, out):
    source = source_by_name(args.source)
    if args.samples < 0:
        raise UsageError("samples must be nonnegative")
    records = sweep(source, DesignChoice(args.design), _gamma_grid(args), args.samples,
                    args.seed, SimMode(args.mode), workers=args.workers)
    rows = [[getattr(r, name) for name in SWEEP_COLUMNS] for r in records]
    _write_csv(out, SWEEP_COLUMNS, rows)


def _add_source(p):
    p.add_argument("--source", choices=["gaussian", "uniform"], default="gaussian")


def _add_out(p):
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def _add_c_grid(p):
    p.add_argument("--c-min", type=float, default=analysis.C_SEARCH_MIN)
    p.add_argument("--c-max", type=float, default=None, help="default: c_max of the source")
    p.add_argument("--c-points", type=int, default=64)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edcompander",
        description="Compander design and energy-distortion bounds for zero-delay "
                    "transmission over AWGN with orthogonal signalling.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="print optimal and naive design constants")
    _add_source(p)
    _add_out(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("beta-curve", help="CSV of beta_hat(c)")
    _add_source(p)
    _add_c_grid(p)
    _add_out(p)
    p.set_defaults(func=cmd_beta_curve)

    p = sub.add_parser("omega-curve", help="CSV of Omega(c)")
    _add_source(p)
    _add_c_grid(p)
    _add_out(p)
    p.set_defaults(func=cmd_omega_curve)

    p = sub.add_parser("density", help="CSV of optimized and naive point densities")
    _add_source(p)
    p.add_argument("--x-min", type=float, default=None)
    p.add_argument("--x-max", type=float, default=None)
    p.add_argument("--x-points", type=int, default=None)
    _add_out(p)
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("sweep", help="CSV of distortion bounds (and simulation) vs gamma")
    _add_source(p)
    p.add_argument("--design", choices=[d.value for d in DesignChoice], default="optimized")
    p.add_argument("--gamma-min", type=float, default=12.0)
    p.add_argument("--gamma-max", type=float, default=240.0)
    p.add_argument("--gamma-step", type=float, default=12.0)
    p.add_argument("--samples", type=int, default=0, help="Monte Carlo samples per row (0: analytic only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=[m.value for m in SimMode], default="analytic")
    p.add_argument("--workers", type=int, default=1)
    _add_out(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _output(args.out) as out:
            args.func(args, out)
    except (UsageError, DomainError) as exc:
        parser.print_usage(sys.stderr)
        print(f"edcompander: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigurationError as exc:
        print(f"edcompander: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, PreconditionError) as exc:
        print(f"edcompander: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
