"""Command-line interface.

Every command writes CSV (default) or a single JSON object carrying
``schema_version`` and an echo of its configuration.  Reals are written with
17 significant digits.  Exit codes: 0 success, 1 input error, 2 numerical
non-convergence, 3 unsupported configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import analytic, bench, quadrature, sampler
from .model import Knots, KnotsError, PairwiseConfig, Segment, read_knots_csv, segments
from .rng import RngHandle

SCHEMA_VERSION = 1
THREADS_ENV = "BBMIN_THREADS"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NONCONVERGED = 2
EXIT_UNSUPPORTED = 3


class InputError(Exception):
    pass


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        # repr of a Python float is already the shortest round-trip form
        return float(v)
    return v


class Output:
    """Collects named tables and writes them as CSV blocks or one JSON object."""

    def __init__(self, command: str, fmt_name: str, config: dict):
        self.command = command
        self.format = fmt_name
        self.config = config
        self.tables: dict[str, tuple[list[str], list[list]]] = {}
        self.extra: dict = {}

    def table(self, name: str, header: list[str], rows):
        self.tables[name] = (header, [list(r) for r in rows])

    def render(self) -> str:
        if self.format == "json":
            obj = {"schema_version": SCHEMA_VERSION, "command": self.command, "config": self.config}
            for name, (header, rows) in self.tables.items():
                obj[name] = [dict(zip(header, r)) for r in rows]
            obj.update(self.extra)
            return json.dumps(_jsonable(obj), indent=1, allow_nan=True) + "\n"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for n, (header, rows) in enumerate(self.tables.values()):
            if n:
                buf.write("\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt(v) for v in r])
        return buf.getvalue()

    def write(self, path: str | None):
        text = self.render()
        if path in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(path, "w", newline="") as fh:
                fh.write(text)


# -- argument helpers -------------------------------------------------------------

def _positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {v}")
    return v


def _int_list(s: str) -> list[int]:
    return [_positive_int(p) for p in s.replace(" ", "").split(",") if p]


def _kind_list(s: str) -> list[str]:
    kinds = [p for p in s.replace(" ", "").split(",") if p]
    bad = [k for k in kinds if k not in bench.KINDS]
    if bad or not kinds:
        raise argparse.ArgumentTypeError(f"strategies must be drawn from {','.join(bench.KINDS)}")
    return kinds


def _seed(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return v


def default_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _load_knots(path: str) -> Knots:
    try:
        return read_knots_csv(path)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    except KnotsError as e:
        raise InputError(f"{path}: {e}") from None


def _knots_echo(k: Knots) -> list[list[float]]:
    return [list(r) for r in k.rows]


# -- commands -----------------------------------------------------------------------

def cmd_interval_prob(args) -> int:
    k = _load_knots(args.knots)
    cfg = quadrature.QuadConfig(eps=args.eps, method=args.method, transform=not args.no_transform,
                                max_evals=args.max_evals)
    idx = range(k.n + 1) if args.index is None else [args.index]
    if args.index is not None and not 0 <= args.index <= k.n:
        raise InputError(f"--index {args.index} outside 0..{k.n}")
    rng = RngHandle(args.seed) if args.method == "riemann-random" else None
    rows = []
    for i in idx:
        r = quadrature.interval_prob(k, i, cfg, rng)
        rows.append([i, r.value, r.est_error, r.evals, r.converged,
                     r.rigorous_bound])
    out = Output("interval-prob", args.format,
                 {"knots": _knots_echo(k), "eps": args.eps, "method": args.method,
                  "transform": not args.no_transform, "max_evals": args.max_evals, "seed": args.seed})
    out.table("intervals", ["index", "prob", "est_error", "evals", "converged", "rigorous_bound"], rows)
    out.write(args.out)
    return EXIT_OK if all(r[4] for r in rows) else EXIT_NONCONVERGED


def cmd_pairwise(args) -> int:
    q = quadrature.QuadConfig(eps=args.eps)
    geometric = [args.l1, args.d1, args.l2, args.d2, args.xi]
    closed = None
    if args.closed_d2 is not None:
        if args.closed_d2 < 0:
            raise InputError("--closed-d2 must be nonnegative")
        closed = analytic.pairwise_prob_closed_d2(args.closed_d2)
        pc = PairwiseConfig(0.5, 0.0, 0.5, args.closed_d2, 0.0)
    elif args.closed_l2 is not None:
        if not 0 < args.closed_l2 <= 1:
            raise InputError("--closed-l2 must lie in (0, 1]")
        closed = analytic.pairwise_prob_closed_l2(args.closed_l2)
        pc = PairwiseConfig(0.5, 0.0, args.closed_l2, 0.0, 0.0)
    else:
        try:
            pc = PairwiseConfig(*geometric)
        except ValueError as e:
            raise InputError(str(e)) from None
    r = quadrature.pairwise_prob(pc, q)
    prob = closed if closed is not None else r.value
    row = [prob, r.value, r.est_error, closed,
           None if closed is None else abs(closed - r.value), r.converged]
    out = Output("pairwise", args.format,
                 {"l1": pc.l1, "d1": pc.d1, "l2": pc.l2, "d2": pc.d2, "xi": pc.xi, "eps": args.eps,
                  "closed": "d2" if args.closed_d2 is not None else "l2" if args.closed_l2 is not None else None})
    out.table("pairwise", ["prob", "quadrature", "est_error", "closed_form", "discrepancy", "converged"], [row])
    out.write(args.out)
    return EXIT_OK if r.converged else EXIT_NONCONVERGED


def cmd_simulate(args) -> int:
    k = _load_knots(args.knots)
    rng = RngHandle(args.seed)
    out = Output("simulate", args.format,
                 {"knots": _knots_echo(k), "seed": args.seed, "draws": args.draws,
                  "what": args.what, "bins": args.bins, "level": args.level})
    if args.what == "min":
        vals, idx = sampler.simulate_global_min(k, rng, args.draws)
        out.table("samples", ["value"], ([v] for v in vals))
        if args.bins:
            try:
                h = sampler.histogram_and_kde(vals, args.bins)
            except ValueError as e:
                raise InputError(str(e)) from None
            out.table("histogram", ["bin_center", "count", "kde"], h.rows())
            out.extra["bandwidth"] = h.bandwidth
    elif args.what == "argmin":
        draws = sampler.simulate_global_argmin(k, rng, args.draws, method=args.method)
        out.table("samples", ["segment", "value", "location"],
                  ([d.segment_index, d.min_value, d.location] for d in draws))
        if args.bins:
            try:
                h = sampler.histogram_and_kde([d.location for d in draws], args.bins)
            except ValueError as e:
                raise InputError(str(e)) from None
            out.table("histogram", ["bin_center", "count", "kde"], h.rows())
            out.extra["bandwidth"] = h.bandwidth
    else:
        if args.draws < 100:
            raise InputError("--what freq needs at least 100 draws")
        rep = sampler.freq_report(k, args.draws, args.level, rng)
        segs = segments(k)
        out.table("frequencies", ["interval", "t_lo", "t_hi", "count", "freq", "ci_lo", "ci_hi"],
                  ([i, s.t_lo, s.t_hi, int(c), float(f), float(lo), float(hi)]
                   for i, (s, c, f, (lo, hi)) in enumerate(zip(segs, rep.counts, rep.freqs, rep.intervals))))
    out.write(args.out)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    x0, x1 = args.bridge
    bridge = Segment(0.0, 1.0, x0, x1)
    workers = args.workers if args.workers else default_workers()
    rep_rows, sum_rows = [], []
    for n in args.n:
        cfg = bench.BenchConfig(bridge=bridge, n_points=n, replicates=args.replicates,
                                inner_min_samples=args.inner, level=args.level, seed=args.seed)
        try:
            reports = bench.run_benchmark(cfg, args.strategies, couple_eqp=args.couple_eqp, workers=workers)
        except bench.UnsupportedBridgeError as e:
            print(f"bbmin: unsupported: {e}", file=sys.stderr)
            return EXIT_UNSUPPORTED
        for rep in reports:
            kind = rep.strategy.kind
            rep_rows.extend([kind, n, r, e] for r, e in enumerate(rep.errors.tolist()))
            sum_rows.append([kind, n, rep.mean, rep.variance, rep.ci[0], rep.ci[1]])
    out = Output("benchmark", args.format,
                 {"bridge": [x0, x1], "n": args.n, "strategies": args.strategies,
                  "replicates": args.replicates, "inner": args.inner, "seed": args.seed,
                  "level": args.level, "couple_eqp": args.couple_eqp})
    out.table("summary", ["strategy", "n_points", "mean", "var", "ci_lo", "ci_hi"], sum_rows)
    if args.replicates_out:
        rep_out = Output("benchmark", args.format, out.config)
        rep_out.table("replicates", ["strategy", "n_points", "replicate", "error"], rep_rows)
        rep_out.write(args.replicates_out)
    elif not args.summary_only:
        out.table("replicates", ["strategy", "n_points", "replicate", "error"], rep_rows)
    out.write(args.out)
    return EXIT_OK


def cmd_eqp_knots(args) -> int:
    x0, x1 = args.bridge
    bridge = Segment(0.0, 1.0, x0, x1)
    try:
        pts = bench.eqp_points(bridge, args.n)
    except bench.UnsupportedBridgeError as e:
        print(f"bbmin: unsupported: {e}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    out = Output("eqp-knots", args.format, {"bridge": [x0, x1], "n": args.n})
    out.table("points", ["k", "t", "cdf"],
              ([i + 1, t, analytic.argmin_cdf(bridge, t)] for i, t in enumerate(pts)))
    out.write(args.out)
    return EXIT_OK


# -- parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bbmin", description=(
        "Law of the minimum of a Brownian path pinned at given points, its location, "
        "and a benchmark of non-adaptive sampling strategies."))
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default=None, help="output file (default: standard output)")

    s = sub.add_parser("interval-prob", parents=[common],
                       help="probability that the minimum falls in each knot interval")
    s.add_argument("knots", help="CSV with header t,x")
    s.add_argument("--eps", type=float, default=1e-9)
    s.add_argument("--method", choices=quadrature.METHODS, default="adaptive-gk")
    s.add_argument("--no-transform", action="store_true",
                   help="integrate over a truncated range instead of mapping onto (0, 1]")
    s.add_argument("--max-evals", type=int, default=quadrature.QuadConfig.max_evals,
                   help="integrand evaluation budget per interval")
    s.add_argument("--seed", type=_seed, default=0, help="used by riemann-random only")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--all", action="store_true", help="every interval (default)")
    g.add_argument("--index", type=int, default=None)
    s.set_defaults(func=cmd_interval_prob)

    s = sub.add_parser("pairwise", parents=[common],
                       help="probability that one bridge has a lower minimum than another")
    s.add_argument("--l1", type=float)
    s.add_argument("--d1", type=float)
    s.add_argument("--l2", type=float)
    s.add_argument("--d2", type=float)
    s.add_argument("--xi", type=float)
    s.add_argument("--closed-d2", type=float, default=None, metavar="D2")
    s.add_argument("--closed-l2", type=float, default=None, metavar="L2")
    s.add_argument("--eps", type=float, default=1e-10)
    s.set_defaults(func=cmd_pairwise)

    s = sub.add_parser("simulate", parents=[common], help="exact draws of the minimum or its location")
    s.add_argument("knots", help="CSV with header t,x")
    s.add_argument("--draws", type=_positive_int, default=10_000)
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--what", choices=("min", "argmin", "freq"), default="min")
    s.add_argument("--bins", type=_positive_int, default=None, help="also emit a histogram/KDE table")
    s.add_argument("--level", type=float, default=0.95, help="simultaneous CI level for freq")
    s.add_argument("--method", choices=("auto", "ar", "ig"), default="auto",
                   help="location sampler for argmin")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("benchmark", parents=[common], help="compare eqd, rnd and eqp strategies")
    s.add_argument("--bridge", nargs=2, type=float, metavar=("X0", "X1"), default=(0.0, 1.0))
    s.add_argument("--n", type=_int_list, default=[2], help="comma-separated numbers of points")
    s.add_argument("--strategies", type=_kind_list, default=list(bench.KINDS))
    s.add_argument("--replicates", type=int, default=1000)
    s.add_argument("--inner", type=_positive_int, default=1000, help="minimum draws per replicate")
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--level", type=float, default=0.95)
    s.add_argument("--couple-eqp", action="store_true", help="reveal eqp on the eqd/rnd path")
    s.add_argument("--workers", type=_positive_int, default=None,
                   help=f"worker processes (default: ${THREADS_ENV} or 1)")
    s.add_argument("--replicates-out", default=None, help="write per-replicate errors here")
    s.add_argument("--summary-only", action="store_true", help="omit per-replicate errors")
    s.set_defaults(func=cmd_benchmark)

    s = sub.add_parser("eqp-knots", parents=[common], help="equal-probability sampling times")
    s.add_argument("--bridge", nargs=2, type=float, metavar=("X0", "X1"), default=(0.0, 1.0))
    s.add_argument("--n", type=_positive_int, required=True)
    s.set_defaults(func=cmd_eqp_knots)
    return p


def _check_pairwise_flags(p: argparse.ArgumentParser, args):
    geometric = [args.l1, args.d1, args.l2, args.d2, args.xi]
    modes = sum([any(v is not None for v in geometric), args.closed_d2 is not None,
                 args.closed_l2 is not None])
    if modes != 1:
        p.error("pairwise: give exactly one of --l1/--d1/--l2/--d2/--xi, --closed-d2 or --closed-l2")
    if args.closed_d2 is None and args.closed_l2 is None and any(v is None for v in geometric):
        p.error("pairwise: --l1 --d1 --l2 --d2 --xi must all be given")


def main(argv=None) -> int:
    p = build_parser()
    args = p.parse_args(argv)
    if args.command == "pairwise":
        _check_pairwise_flags(p, args)
    if args.command == "benchmark" and args.replicates < 2:
        p.error("benchmark: --replicates must be at least 2")
    try:
        return args.func(args)
    except InputError as e:
        print(f"bbmin: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KnotsError) as e:
        print(f"bbmin: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"bbmin: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
