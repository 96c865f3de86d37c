"""Command-line entry point: ``ppcf <subcommand> ...``.

Every subcommand that produces data prints JSON with a top-level
``"schema": 1``.  Exit status is 0 on success, 1 on a parse or typing error,
and 2 when a resource limit stops the computation.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import stdlib
from .denot import EvalConfig, evaluate_ground
from .fullabs import NotFound, enumerate_web, parse_point, separate
from .operational import ResourceLimit, explore, fmt_fraction, histogram
from .syntax import PPCFError, ParseError, parse, parse_type, pretty, to_term, typecheck

SCHEMA = 1


class _Fail(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _Fail(1, f"{path}: {exc.strerror}")
    try:
        term = parse(text)
        ty = typecheck((), term)
    except ParseError as exc:
        raise _Fail(1, f"{path}:{exc.line}:{exc.col}: parse error: {exc.msg}")
    except PPCFError as exc:
        raise _Fail(1, f"{path}: type error: {exc}")
    return term, ty


def _ground(path: str):
    term, ty = _load(path)
    if ty != parse_type("nat"):
        raise _Fail(1, f"{path}: expected a closed term of type nat, got {ty}")
    return term


def _cfg(args) -> EvalConfig:
    return EvalConfig(args.trunc, args.fix_iters, "float" if getattr(args, "float", False) else "exact")


def _emit(obj: dict, args) -> None:
    if getattr(args, "format", "json") == "table" and "distribution" in obj:
        for row in obj["distribution"]:
            print(f"{row['value']}\t{row['prob']}")
        print(f"residual\t{obj['residual']}")
        return
    print(json.dumps({"schema": SCHEMA, **obj}, indent=2))


def cmd_check(args) -> int:
    _, ty = _load(args.file)
    print(ty)
    return 0


def cmd_dist(args) -> int:
    term = _load(args.file)[0]
    floor = Fraction(args.mass_floor)
    d = explore(term, args.steps, args.max_states, floor)
    out = d.to_json()
    if floor:
        out["floored"] = fmt_fraction(d.floored)
    _emit(out, args)
    return 0


def cmd_denot(args) -> int:
    res = evaluate_ground(_ground(args.file), _cfg(args))
    _emit(res.to_json(), args)
    return 0


def cmd_adequacy(args) -> int:
    term = _ground(args.file)
    cfg = EvalConfig(args.trunc, args.fix_iters)
    op = explore(term, args.steps, args.max_states)
    den = evaluate_ground(term, cfg, probe=False)
    ops = op.numeral_masses()
    values = sorted(set(ops) | {n for n, p in enumerate(den.vec) if p})
    deltas = []
    for n in values:
        dn = den.vec[n] if n < cfg.trunc else 0
        deltas.append({"value": n, "delta": fmt_fraction(Fraction(dn - ops.get(n, 0)))})
    max_delta = max((abs(Fraction(r["delta"])) for r in deltas), default=Fraction(0))
    _emit(
        {
            "operational": op.to_json(),
            "denotational": den.to_json(),
            "deltas": deltas,
            "max_delta": fmt_fraction(max_delta),
            "equal": max_delta == 0,
        },
        args,
    )
    return 0


def cmd_run(args) -> int:
    term = _load(args.file)[0]
    h = histogram(term, args.seed, args.samples, args.max_steps)
    rows = []
    for v, c in sorted(h["counts"].items(), key=lambda kv: (kv[0].tag != "num", kv[0].a if kv[0].tag == "num" else 0)):
        rows.append({"value": v.a if v.tag == "num" else pretty(to_term(v)), "count": c})
    _emit({"samples": args.samples, "seed": args.seed, "histogram": rows, "timeouts": h["timeouts"]}, args)
    return 0


def cmd_separate(args) -> int:
    m1, t1 = _load(args.file1)
    m2, t2 = _load(args.file2)
    ty = parse_type(args.type) if args.type else t1
    if t1 != ty or t2 != ty:
        raise _Fail(1, f"both terms must have type {ty} (got {t1} and {t2})")
    cfg = EvalConfig(args.trunc, args.fix_iters)
    points = [parse_point(args.point)] if args.point else enumerate_web(ty, args.web_size)
    last = None
    for a in points:
        res = separate(m1, m2, a, ty, args.grid_denom, args.refinements, cfg, args.confirm_steps)
        if not isinstance(res, NotFound):
            _emit(res.to_json(), args)
            return 0
        last = res
    out = {"found": False, "points_tried": len(points)}
    if last is not None:
        out["grid_denoms"] = last.grid_denoms
    _emit(out, args)
    return 0


def cmd_stdlib(args) -> int:
    try:
        term = stdlib.build(args.name, *args.args)
    except (KeyError, ValueError, TypeError) as exc:
        raise _Fail(1, str(exc))
    print(pretty(term))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ppcf", description="Probabilistic PCF workbench")
    sub = p.add_subparsers(dest="cmd", required=True)

    def nonneg(s):
        v = int(s)
        if v < 0:
            raise argparse.ArgumentTypeError("must be nonnegative")
        return v

    def positive(s):
        v = int(s)
        if v < 1:
            raise argparse.ArgumentTypeError("must be positive")
        return v

    def evalopts(sp):
        sp.add_argument("--trunc", type=positive, default=32, help="numerals kept: 0..N-1")
        sp.add_argument("--fix-iters", type=nonneg, default=100, help="fixpoint iterations K")

    def fmt(sp):
        sp.add_argument("--format", choices=["json", "table"], default="json")

    sp = sub.add_parser("check", help="print the type of a program")
    sp.add_argument("file")
    sp.set_defaults(fn=cmd_check)

    sp = sub.add_parser("dist", help="exact distribution after k reduction steps")
    sp.add_argument("file")
    sp.add_argument("--steps", "-k", type=nonneg, default=500)
    sp.add_argument("--max-states", type=positive, default=None)
    sp.add_argument("--mass-floor", default="0", help="rational; lighter states move to the residual")
    fmt(sp)
    sp.set_defaults(fn=cmd_dist)

    sp = sub.add_parser("denot", help="truncated denotation of a ground program")
    sp.add_argument("file")
    evalopts(sp)
    sp.add_argument("--float", action="store_true", help="floating point instead of exact rationals")
    fmt(sp)
    sp.set_defaults(fn=cmd_denot)

    sp = sub.add_parser("adequacy", help="compare operational and denotational results")
    sp.add_argument("file")
    sp.add_argument("--steps", "-k", type=nonneg, default=500)
    sp.add_argument("--max-states", type=positive, default=None)
    evalopts(sp)
    sp.set_defaults(fn=cmd_adequacy)

    sp = sub.add_parser("run", help="Monte-Carlo histogram")
    sp.add_argument("file")
    sp.add_argument("--seed", type=nonneg, default=0)
    sp.add_argument("--samples", type=nonneg, default=1000)
    sp.add_argument("--max-steps", type=nonneg, default=10000)
    sp.set_defaults(fn=cmd_run)

    sp = sub.add_parser("separate", help="find a context telling two programs apart")
    sp.add_argument("file1")
    sp.add_argument("file2")
    sp.add_argument("--type", default=None, help="common type (defaults to the inferred one)")
    sp.add_argument("--point", default=None, help="web point, e.g. '([0],0)'; default: search the web")
    sp.add_argument("--web-size", type=nonneg, default=2)
    sp.add_argument("--grid-denom", type=positive, default=4)
    sp.add_argument("--refinements", type=nonneg, default=2)
    sp.add_argument("--confirm-steps", type=nonneg, default=None)
    evalopts(sp)
    sp.set_defaults(fn=cmd_separate)

    sp = sub.add_parser("stdlib", help="print a library program")
    sp.add_argument("name", choices=sorted(stdlib.REGISTRY))
    sp.add_argument("args", nargs="*")
    sp.set_defaults(fn=cmd_stdlib)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except _Fail as exc:
        print(f"ppcf: {exc}", file=sys.stderr)
        return exc.code
    except ResourceLimit as exc:
        print(f"ppcf: resource limit: {exc}", file=sys.stderr)
        return 2
    except PPCFError as exc:
        print(f"ppcf: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
