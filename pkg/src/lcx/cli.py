"""Command-line front end.

Structured results are printed as JSON; curves and traces go to CSV.
Exit status is 0 on success, 1 when a verification reports a violation and
2 when an input file is malformed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

from .convolve import ConvolutionClosure, fit_density
from .density import density_from_dict, save_density
from .discrete import pmf_from_dict
from .entropy import RenyiOrder, renyi
from .errors import InvalidDensity, InvalidParameter
from .rearrange import decreasing_rearrangement
from .search import CURVE_COLUMNS, SearchConfig, increment_curve, maximize_increment, write_csv
from .verify import THEOREMS, run_batch, run_random_batch

log = logging.getLogger("lcx")

EXIT_VIOLATION = 1
EXIT_MALFORMED = 2

DISCRETE = {"discrete-h2", "discrete-hinf", "discrete-sym"}
PAIRED = {"main", "rogozin"}


class MalformedInput(Exception):
    pass


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"{path}: {exc}") from exc


def _schema(discrete: bool) -> str:
    if discrete:
        return ('{"offset": int, "probs": [...], "family": "geometric"|"general", '
                '"lambda": number|null}')
    return ('{"knots": [...], "log_values": [...], "left_tail_slope": number|null, '
            '"right_tail_slope": number|null}')


def _load(path, discrete: bool = False):
    return _parse(_read_json(path), path, discrete)


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True, default=_jsonable)
    sys.stdout.write("\n")


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _finite_or_none(x: float):
    return x + 0.0 if math.isfinite(x) else None


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_entropy(args) -> int:
    d = _load(args.density)
    value, err = renyi(d, RenyiOrder.of(args.p), return_error=True)
    _emit({"order": str(RenyiOrder.of(args.p)), "value": _finite_or_none(value),
           "error_estimate": err})
    return 0


def cmd_rearrange(args) -> int:
    r = decreasing_rearrangement(_load(args.density))
    save_density(r, args.out)
    _emit({"out": args.out, "support": [_finite_or_none(x) for x in r.support]})
    return 0


def cmd_convolve(args) -> int:
    fit = fit_density(ConvolutionClosure(_load(args.a), _load(args.b)), args.fit_tol)
    save_density(fit.density, args.out)
    _emit({"out": args.out, "n_knots": fit.n_knots, "l1_error": fit.l1_error,
           "max_potential_error": fit.max_potential_error})
    return 0


def _parse(obj, where: str, discrete: bool):
    if not isinstance(obj, dict):
        raise MalformedInput(f"{where}: expected a JSON object")
    try:
        return pmf_from_dict(obj) if discrete else density_from_dict(obj)
    except (KeyError, TypeError, InvalidDensity, InvalidParameter) as exc:
        raise MalformedInput(f"{where}: {exc}; expected {_schema(discrete)}") from exc


def _instances(theorem: str, objs: list, names: list) -> list:
    if theorem in PAIRED:
        if len(objs) % 2:
            raise MalformedInput(f"--theorem {theorem} takes densities in pairs")
        return [((objs[i], objs[i + 1]), {"source": [names[i], names[i + 1]]})
                for i in range(0, len(objs), 2)]
    return [((o,), {"source": n}) for o, n in zip(objs, names)]


def cmd_verify(args) -> int:
    theorem = args.theorem
    discrete = theorem in DISCRETE
    if args.density:
        objs = [_load(p, discrete) for p in args.density]
        report = run_batch(theorem, _instances(theorem, objs, args.density))
    elif args.corpus:
        items = _read_json(args.corpus)
        if not isinstance(items, list):
            raise MalformedInput(f"{args.corpus}: expected a JSON list of specs")
        names = [f"{args.corpus}[{i}]" for i in range(len(items))]
        objs = [_parse(o, n, discrete) for o, n in zip(items, names)]
        report = run_batch(theorem, _instances(theorem, objs, names))
    else:
        report = run_random_batch(theorem, args.random, args.seed, args.jobs)
    out = report.to_dict(timing=not args.no_timing)
    _emit(out)
    log.info("%s: %d instances, verdict %s", theorem, len(report.instances), report.verdict)
    return EXIT_VIOLATION if report.violated else 0


def _config(args, p) -> SearchConfig:
    return SearchConfig(p=p, n_knots=args.knots, half_width=args.half_width,
                        restarts=args.restarts, max_iter=args.max_iter, seed=args.seed,
                        jobs=args.jobs)


def cmd_search(args) -> int:
    res = maximize_increment(_config(args, args.p))
    if args.out:
        rows = [{"restart": i, "iteration": k, "delta": v} for i, k, v in res.trace]
        write_csv(rows, args.out, ["restart", "iteration", "delta"])
    _emit(res.to_dict())
    return 0


def cmd_curve(args) -> int:
    grid = [RenyiOrder.of(p.strip()) for p in args.p_grid.split(",") if p.strip()]
    rows = increment_curve(grid, _config(args, math.inf))
    write_csv(rows, args.out, CURVE_COLUMNS)
    _emit({"out": args.out, "rows": rows})
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _search_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--knots", type=int, default=12)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--half-width", type=float, default=4.0)
    p.add_argument("--max-iter", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lcx", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", help="Rényi entropy of a density")
    p.add_argument("--density", required=True)
    p.add_argument("--p", default="1", help="order: 0, a positive number, 1 or inf")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("rearrange", help="decreasing rearrangement")
    p.add_argument("--density", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rearrange)

    p = sub.add_parser("convolve", help="fitted density of a sum")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--fit-tol", type=float, default=1e-6)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convolve)

    p = sub.add_parser("verify", help="check an increment bound")
    p.add_argument("--theorem", required=True, choices=sorted(THEOREMS))
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--density", nargs="+", metavar="FILE")
    src.add_argument("--corpus", metavar="FILE", help="JSON list of density or pmf specs")
    src.add_argument("--random", type=int, metavar="N")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-timing", action="store_true",
                   help="omit wall-clock time so reports are byte-reproducible")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("search", help="maximize the entropy increment")
    p.add_argument("--p", default="inf")
    p.add_argument("--out", help="CSV file for the iterate trace")
    _search_options(p)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("curve", help="increment table across orders")
    p.add_argument("--p-grid", required=True, help="comma-separated orders, e.g. 0.5,1,2,inf")
    p.add_argument("--out", required=True)
    _search_options(p)
    p.set_defaults(func=cmd_curve)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("LCX_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MalformedInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except BrokenPipeError:
        # reader went away (e.g. `| head`); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0


if __name__ == "__main__":
    sys.exit(main())
