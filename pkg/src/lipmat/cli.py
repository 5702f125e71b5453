"""Command-line interface: ``lipmat <command> [options]``.

Exit codes: 0 success, 1 input or usage error, 2 solver soft failure with a
usable output written.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import SCHEMA_VERSION, __version__
from . import io as lio
from . import testfns
from .complexity import covering_upper_bound, growth_rate
from .design import ADAPTIVE, FIXED, sequential_design
from .geometry import Domain, corners, sample_uniform
from .lipschitz import LipschitzMatrix, check_feasibility, deflate_rank, estimate
from .reduction import active_subspace, avg_outer_product, shadow_data, subspace_angle
from .solvers.lp import OPTIMAL
from .uncertainty import MinimaxConfig, bounds, shadow_bounds

EXIT_OK, EXIT_INPUT, EXIT_SOFT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# -- shared helpers ------------------------------------------------------

def _common(p, output_default):
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for multistarts")
    p.add_argument("--config", help="JSON file of option values; flags override it")
    p.add_argument("-o", "--output", default=output_default, help=f"output path (default {output_default})")


def _minimax_flags(p):
    p.add_argument("--multistarts", type=int, default=30)
    p.add_argument("--boundary-candidates", type=int, default=30)
    p.add_argument("--max-outer-iter", type=int, default=100)


def _minimax_cfg(args, seed=None) -> MinimaxConfig:
    return MinimaxConfig(args.multistarts, args.boundary_candidates, args.max_outer_iter,
                         seed=args.seed if seed is None else seed, threads=args.threads)


def _data_flags(p):
    p.add_argument("--samples", help="CSV with columns x_1..x_m,f")
    p.add_argument("--gradients", help="CSV with columns x_1..x_m,g_1..g_m")


def _metric_flags(p):
    p.add_argument("--metric", help="LipschitzMatrix JSON (estimated from the data when omitted)")
    p.add_argument("--epsilon", type=float, default=0.0, help="noise level when estimating")


def _load_samples(args):
    if args.samples is None and args.gradients is None:
        return None
    return lio.read_samples(args.samples, args.gradients)


def _load_metric(args, s) -> LipschitzMatrix:
    if getattr(args, "metric", None):
        return lio.read_metric(args.metric)
    if getattr(args, "scalar", None) is not None:
        m = s.dim if s is not None else _dim_from(args)
        return LipschitzMatrix.from_scalar(args.scalar, m)
    if s is None:
        raise lio.InputError("need --metric or data to estimate one from")
    return estimate(s, epsilon=args.epsilon)


def _dim_from(args):
    if getattr(args, "domain", None):
        return lio.read_domain(args.domain).dim
    if getattr(args, "dim", None):
        return int(args.dim)
    raise lio.InputError("cannot infer the dimension; pass --domain or --dim")


def _load_domain(args, m) -> Domain:
    if getattr(args, "domain", None):
        d = lio.read_domain(args.domain)
        if d.dim != m:
            raise lio.InputError(f"{args.domain}: domain dimension {d.dim} differs from {m}")
        return d
    return Domain.box(m)


def _sidecar(path, suffix=".json"):
    p = Path(path)
    return str(p.with_suffix(suffix)) if p.suffix != suffix else str(p) + suffix


# -- commands ------------------------------------------------------------

def cmd_estimate(args) -> int:
    if args.samples is None and args.gradients is None:
        args._parser.error("give a samples file and/or --gradients")
    if args.epsilon > 0 and args.gradients:
        args._parser.error("--epsilon cannot be combined with a gradients file")
    s = lio.read_samples(args.samples, args.gradients)
    lm = estimate(s, epsilon=args.epsilon, prune=not args.no_prune)
    if args.deflate:
        lm = deflate_rank(lm, s, tol=args.deflate_tol)
    out = lm.to_dict()
    out["feasibility"] = check_feasibility(lm, s).to_dict()
    lio.write_json(args.output, out)
    if lm.report.status != OPTIMAL:
        print(f"warning: solver ended with status {lm.report.status}: {lm.report.message}", file=sys.stderr)
        return EXIT_SOFT
    return EXIT_OK


def cmd_uncertainty(args) -> int:
    s = lio.read_samples(args.samples, args.gradients)
    lm = _load_metric(args, s)
    if args.points:
        X = lio.read_points(args.points)
        if X.shape[1] != s.dim:
            raise lio.InputError(f"{args.points}: dimension {X.shape[1]} differs from samples dimension {s.dim}")
    else:
        X = sample_uniform(_load_domain(args, s.dim), args.count, args.seed)
    lo, up = bounds(X, s, lm)
    header = [f"x_{i + 1}" for i in range(s.dim)] + ["lower", "central", "upper", "gap"]
    lio.write_csv(args.output, header, np.column_stack([X, lo, 0.5 * (lo + up), up, up - lo]))
    return EXIT_OK


def _parse_u(text, m):
    try:
        u = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise lio.InputError(f"--u: cannot parse {text!r}") from None
    if u.size != m:
        raise lio.InputError(f"--u has {u.size} entries, expected {m}")
    n = np.linalg.norm(u)
    if n == 0:
        raise lio.InputError("--u must be nonzero")
    return u / n


def cmd_shadow(args) -> int:
    s = lio.read_samples(args.samples, args.gradients)
    lm = _load_metric(args, s)
    d = _load_domain(args, s.dim)
    u = _parse_u(args.u, s.dim) if args.u else active_subspace(lm.H, 1).U[:, 0]
    proj = corners(d.without_eq()) @ u if d.dim <= 20 else None
    lo = args.alpha_min if args.alpha_min is not None else float(proj.min())
    hi = args.alpha_max if args.alpha_max is not None else float(proj.max())
    alphas = np.linspace(lo, hi, args.alphas)
    entries = shadow_bounds(u, alphas, d, s, lm, _minimax_cfg(args))
    lio.write_csv(args.output, ["alpha", "lower", "upper"],
                  [(e.alpha, e.interval.lower, e.interval.upper) for e in entries])
    lio.write_json(args.sidecar or _sidecar(args.output), {
        "u": u, "metric": lm.to_dict(),
        "entries": [{"alpha": e.alpha, "empty": e.interval.empty, "trace": e.trace} for e in entries],
    })
    return EXIT_OK


def cmd_design(args) -> int:
    s = _load_samples(args)
    if args.mode == ADAPTIVE:
        if not args.function:
            raise lio.InputError("adaptive mode needs --function (see `lipmat bench --list`)")
        f = testfns.get(args.function)
        d = _load_domain(args, f.dim)
        source = lambda x: (f(x), f.gradient(x)) if args.use_gradients else f(x)  # noqa: E731
        design = sequential_design(d, args.count, ADAPTIVE, source, args.seed, _minimax_cfg(args),
                                   stride=args.stride, epsilon=args.epsilon, initial=s)
    else:
        lm = _load_metric(args, s)
        d = _load_domain(args, lm.m)
        design = sequential_design(d, args.count, FIXED, lm, args.seed, _minimax_cfg(args))
    lio.write_csv(args.output, [f"x_{i + 1}" for i in range(design.points.shape[1])], design.points)
    lio.write_json(args.trace_output or _sidecar(args.output), design.to_dict())
    if design.error:
        print(f"warning: {design.error}; partial design written", file=sys.stderr)
        return EXIT_SOFT
    return EXIT_OK


def cmd_cover(args) -> int:
    if args.metric:
        lm = lio.read_metric(args.metric)
        metric, m = lm, lm.m
    elif args.scalar is not None:
        m = _dim_from(args)
        metric = float(args.scalar)
    else:
        raise lio.InputError("need --metric or --scalar")
    d = _load_domain(args, m)
    eps = np.logspace(np.log10(args.eps_min), np.log10(args.eps_max), args.num)
    est = [covering_upper_bound(metric, d, e, args.subsample, args.seed) for e in eps]
    rates = growth_rate(est) if len(est) >= 2 else [(est[0].epsilon, np.nan, np.nan)]
    lio.write_csv(args.output, ["epsilon", "count", "exact", "slope", "smoothed_slope"],
                  [(c.epsilon, c.count, c.exact, r[1], r[2]) for c, r in zip(est, rates)])
    return EXIT_OK


def cmd_reduce(args) -> int:
    s = _load_samples(args)
    lm = _load_metric(args, s)
    sub = active_subspace(lm.H, args.n)
    out = {"u": sub.U, "eigenvalues": sub.eigenvalues, "angles_vs_opg": None}
    if s is not None and s.N > 0:
        C = avg_outer_product(s.grads)
        opg = active_subspace(C, args.n)
        out["angles_vs_opg"] = subspace_angle(sub.U, opg.U)
        out["opg_eigenvalues"] = opg.eigenvalues
    lio.write_json(args.output, out)
    if s is not None and s.M > 0:
        lio.write_csv(args.shadow_output or _sidecar(args.output, ".csv"), ["projection", "f"],
                      shadow_data(sub.U[:, 0], s))
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.list or not args.function:
        for f in testfns.catalog():
            print(f"{f.name}\t{f.dim}\t{f.description}")
        return EXIT_OK
    f = testfns.get(args.function)
    s = f.samples(args.count, args.seed, args.gradients if args.gradients > 0 else None)
    lio.write_samples(args.output, s)
    if args.gradients > 0:
        lio.write_gradients(args.gradients_output or _sidecar(args.output, ".grad.csv"), s)
    return EXIT_OK


# -- parser --------------------------------------------------------------

def build_parser():
    parser = _Parser(prog="lipmat", description="Lipschitz matrix estimation and analysis.")
    parser.add_argument("--version", action="version",
                        version=f"lipmat {__version__} (schema {SCHEMA_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}

    p = sub.add_parser("estimate", help="estimate a Lipschitz matrix from samples/gradients")
    p.add_argument("samples", nargs="?", help="CSV with columns x_1..x_m,f")
    p.add_argument("--gradients", help="CSV with columns x_1..x_m,g_1..g_m")
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--deflate", action="store_true", help="reduce the rank after solving")
    p.add_argument("--deflate-tol", type=float, default=1e-6)
    p.add_argument("--no-prune", action="store_true", help="keep dominated pair constraints")
    _common(p, "lipschitz.json")
    p.set_defaults(func=cmd_estimate)
    subs["estimate"] = p

    p = sub.add_parser("uncertainty", help="pointwise bounds at given or random points")
    _data_flags(p)
    _metric_flags(p)
    p.add_argument("--points", help="CSV with columns x_1..x_m")
    p.add_argument("--domain", help="Domain JSON for random points")
    p.add_argument("--count", type=int, default=1000, help="random points when --points is absent")
    _common(p, "uncertainty.csv")
    p.set_defaults(func=cmd_uncertainty)
    subs["uncertainty"] = p

    p = sub.add_parser("shadow", help="set bounds on slices u @ x = alpha")
    _data_flags(p)
    _metric_flags(p)
    p.add_argument("--domain", help="Domain JSON (default [-1, 1]^m)")
    p.add_argument("--u", help="comma-separated direction (default: dominant eigenvector)")
    p.add_argument("--alphas", type=int, default=101)
    p.add_argument("--alpha-min", type=float)
    p.add_argument("--alpha-max", type=float)
    p.add_argument("--sidecar", help="JSON with u and solver traces")
    _minimax_flags(p)
    _common(p, "shadow.csv")
    p.set_defaults(func=cmd_shadow)
    subs["shadow"] = p

    p = sub.add_parser("design", help="sequential maximin design")
    _data_flags(p)
    _metric_flags(p)
    p.add_argument("--scalar", type=float, help="use the scalar constant L as the metric")
    p.add_argument("--domain", help="Domain JSON (default [-1, 1]^m)")
    p.add_argument("--dim", type=int, help="dimension when no domain or data gives it")
    p.add_argument("--mode", choices=[FIXED, ADAPTIVE], default=FIXED)
    p.add_argument("--function", help="test function evaluated in adaptive mode")
    p.add_argument("--use-gradients", action="store_true", help="adaptive mode also records gradients")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--trace-output", help="JSON with fill_trace (default next to --output)")
    _minimax_flags(p)
    _common(p, "design.csv")
    p.set_defaults(func=cmd_design)
    subs["design"] = p

    p = sub.add_parser("cover", help="covering-number sweep")
    p.add_argument("--metric", help="LipschitzMatrix JSON")
    p.add_argument("--scalar", type=float, help="scalar Lipschitz constant")
    p.add_argument("--domain", help="box Domain JSON (default [-1, 1]^m)")
    p.add_argument("--dim", type=int, help="dimension for --scalar without --domain")
    p.add_argument("--eps-min", type=float, default=0.1)
    p.add_argument("--eps-max", type=float, default=1.0)
    p.add_argument("--num", type=int, default=20)
    p.add_argument("--subsample", type=int, default=100_000)
    _common(p, "cover.csv")
    p.set_defaults(func=cmd_cover)
    subs["cover"] = p

    p = sub.add_parser("reduce", help="active subspace and shadow data")
    _data_flags(p)
    _metric_flags(p)
    p.add_argument("--n", type=int, default=1, help="subspace dimension")
    p.add_argument("--shadow-output", help="shadow CSV (default next to --output)")
    _common(p, "reduce.json")
    p.set_defaults(func=cmd_reduce)
    subs["reduce"] = p

    p = sub.add_parser("bench", help="list test functions or sample one")
    p.add_argument("function", nargs="?")
    p.add_argument("--list", action="store_true")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--gradients", type=int, default=0, help="number of random gradients")
    p.add_argument("--gradients-output", help="gradient CSV (default next to --output)")
    _common(p, "samples.csv")
    p.set_defaults(func=cmd_bench)
    subs["bench"] = p
    return parser, subs


def _apply_config(args, parser, subs, argv):
    if not args.config:
        return args
    sp = subs[args.command]
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        sp.error(f"--config: {exc.strerror}")
    except json.JSONDecodeError as exc:
        sp.error(f"--config line {exc.lineno}: {exc.msg}")
    if not isinstance(cfg, dict):
        sp.error("--config must hold a JSON object")
    allowed = {a.dest for a in sp._actions} - {"help", "config", "func"}
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        sp.error(f"unknown config keys: {', '.join(unknown)}")
    sp.set_defaults(**cfg)
    return parser.parse_args(argv)


def main(argv: Optional[list] = None) -> int:
    parser, subs = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    args = _apply_config(args, parser, subs, argv)
    args._parser = subs[args.command]
    try:
        return args.func(args)
    except lio.InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
