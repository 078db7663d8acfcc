"""Command-line front end.

Exit codes: 0 success, 2 parse/usage error, 3 domain error, 4 battery failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import certify
from .config import DEFAULT_SEED, DEFAULT_TOL
from .errors import DivpropError
from .expr import ExpressionError
from .io import ParseError, dumps_canonical, load_json, load_transfer
from .models import BUILTIN_MODELS, builtin_model, model_from_json
from .operators import apply_map, map_dims, min_choi_eigenvalue, random_hermitian, svd, trace_norm
from .propagator import (
    RULES,
    cptp_search,
    inverse_by_rule,
    propagate,
    propagator_by_rule,
    propagator_family,
    tp_inverse_family,
)
from .reproduce import BATTERIES, reproduce

EXIT_OK, EXIT_PARSE, EXIT_DOMAIN, EXIT_BATTERY = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("DIVPROP_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"DIVPROP_SEED must be an integer, got {env!r}") from None


def _tol(args):
    over = {k: v for k, v in (("rank", args.tol_rank), ("psd", args.tol_psd), ("mono", args.tol_mono))
            if v is not None}
    try:
        return DEFAULT_TOL.with_(**over)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_model(spec: str):
    if spec in BUILTIN_MODELS:
        return builtin_model(spec)
    if not Path(spec).exists():
        raise UsageError(f"{spec!r} is neither a built-in model ({', '.join(sorted(BUILTIN_MODELS))}) "
                         "nor a JSON file")
    try:
        return model_from_json(load_json(spec))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed model JSON: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, DivpropError):
            raise
        raise ParseError(str(exc)) from exc


def _parse_grid(spec: str) -> np.ndarray:
    try:
        start, stop, steps = spec.split(":")
        grid = np.linspace(float(start), float(stop), int(steps))
    except ValueError:
        raise UsageError(f"grid must look like start:stop:steps, got {spec!r}") from None
    if grid.size < 1 or grid[0] < 0:
        raise UsageError("grid needs at least one point and nonnegative times")
    return grid


def _emit(text: str, args) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_only(args):
    if args.format not in (None, "json"):
        raise UsageError(f"{args.command} only emits JSON")


# -- commands -----------------------------------------------------------------

def cmd_analyze(args) -> int:
    _json_only(args)
    T = load_transfer(args.path)
    samples = 1000 if args.samples is None else args.samples
    cert = certify(T, _tol(args), samples=samples, seed=_seed(args))
    _emit(dumps_canonical(cert) + "\n", args)
    return EXIT_OK


def cmd_propagate(args) -> int:
    _json_only(args)
    tol = _tol(args)
    model = _load_model(args.model)
    if args.s > args.t:
        raise DivpropError(f"need s <= t, got s={args.s}, t={args.t}")
    Ts, Tt = model.transfer(args.s), model.transfer(args.t)
    G = inverse_by_rule(Ts, args.rule, tol)
    report = propagate(Ts, Tt, G, args.s, args.t, {"rule": args.rule}, tol)
    if args.search:
        fam = propagator_family(Tt, tp_inverse_family(Ts, tol), tol)
        res = cptp_search(fam, seed=_seed(args), tol=tol)
        report.search, report.uniqueness = res, res.verdict
    _emit(dumps_canonical(report) + "\n", args)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    _json_only(args)
    ids = sorted(BATTERIES) if args.example == "all" else [args.example]
    samples = 500 if args.samples is None else args.samples
    reports = [reproduce(e, _seed(args), samples, _tol(args)) for e in ids]
    payload = reports[0] if len(reports) == 1 else {"passed": all(r.passed for r in reports),
                                                     "reports": reports}
    _emit(dumps_canonical(payload) + "\n", args)
    if not args.quiet:
        for r in reports:
            print(r.summary(), file=sys.stderr)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_BATTERY


def _sweep_rows(args):
    tol = _tol(args)
    model = _load_model(args.model)
    grid = _parse_grid(args.grid)
    q = args.quantity
    if args.propagator:
        if q == "trace-norms":
            raise UsageError("trace-norms is evaluated on the maps, not on propagators")
        header = ["s", "t", q]
        rows = []
        for i, s in enumerate(grid):
            for t in grid[i + 1:]:
                V = propagator_by_rule(model.transfer, float(s), float(t), args.rule, tol)
                val = svd(V, tol.rank).rank if q == "rank" else min_choi_eigenvalue(V)
                rows.append([float(s), float(t), val])
        return header, rows
    if q == "trace-norms":
        n = 5 if args.samples is None else args.samples
        d = map_dims(model.transfer(float(grid[0])))[0]
        rng = np.random.default_rng(_seed(args))
        Xs = [random_hermitian(d, rng) for _ in range(n)]
        Xs = [X / trace_norm(X) for X in Xs]
        header = ["t"] + [f"norm_{k}" for k in range(n)]
        rows = [[float(t)] + [trace_norm(apply_map(model.transfer(float(t)), X)) for X in Xs]
                for t in grid]
        return header, rows
    header = ["t", q]
    rows = []
    for t in grid:
        T = model.transfer(float(t))
        rows.append([float(t), svd(T, tol.rank).rank if q == "rank" else min_choi_eigenvalue(T)])
    return header, rows


def cmd_sweep(args) -> int:
    header, rows = _sweep_rows(args)
    if args.format == "json":
        text = dumps_canonical({"columns": header, "rows": rows}) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, (int, np.integer)) else repr(float(v)) for v in r])
        text = buf.getvalue()
    _emit(text, args)
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-rank", type=float, help="singular-value cutoff for ranks")
    common.add_argument("--tol-psd", type=float, help="allowed negative Choi eigenvalue")
    common.add_argument("--tol-mono", type=float, help="allowed trace-norm increase")
    common.add_argument("--seed", type=int, help=f"RNG seed (default $DIVPROP_SEED or {DEFAULT_SEED})")
    common.add_argument("--samples", type=int, help="number of random samples")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), help="output format")

    p = argparse.ArgumentParser(prog="divprop", description="Propagators of divisible quantum dynamical maps.")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="certify a transfer matrix from JSON")
    a.add_argument("path")
    a.set_defaults(func=cmd_analyze)

    pr = sub.add_parser("propagate", parents=[common], help="build V_{t,s} for a model")
    pr.add_argument("model", help="built-in model name or model JSON file")
    pr.add_argument("--s", type=float, required=True)
    pr.add_argument("--t", type=float, required=True)
    pr.add_argument("--rule", default="tp", choices=sorted(RULES))
    pr.add_argument("--search", action="store_true", help="search the TP family for CPTP propagators")
    pr.set_defaults(func=cmd_propagate)

    r = sub.add_parser("reproduce", parents=[common], help="run a worked-example battery")
    r.add_argument("example", choices=sorted(BATTERIES) + ["all"])
    r.add_argument("--quiet", action="store_true", help="no human summary on stderr")
    r.set_defaults(func=cmd_reproduce)

    sw = sub.add_parser("sweep", parents=[common], help="tabulate a quantity over a time grid")
    sw.add_argument("model")
    sw.add_argument("--grid", required=True, help="start:stop:steps")
    sw.add_argument("--quantity", required=True, choices=("rank", "min-choi-eig", "trace-norms"))
    sw.add_argument("--propagator", action="store_true",
                    help="evaluate V_{t,s} over all grid pairs s < t instead of the maps")
    sw.add_argument("--rule", default="mp", choices=sorted(RULES))
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ExpressionError, UsageError) as exc:
        print(f"divprop: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DivpropError as exc:
        print(f"divprop: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValueError as exc:
        print(f"divprop: error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
