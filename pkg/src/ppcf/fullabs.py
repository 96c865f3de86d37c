"""Testing terms for web points, coefficient recovery, and separation.

For a point ``a`` of the web of a type ``s`` we build two closed terms:
``ptest(a, s) : nat -> s`` and ``ntest(a, s) : nat -> s -> nat``.  Their
first argument is a random integer whose distribution ``u`` acts as a
vector of parameters.  The observable map
``phi_w(u) = [[ntest a]](u)(w)_0`` is a power series in ``u`` in which the
coefficient of ``u_0 u_1 ... u_{n-1}`` (with ``n = nlen(a)``) isolates the
coefficient ``w_a`` of ``w``, up to a combinatorial factor :func:`kappa_n`
that counts repeated elements of multisets inside ``a``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement, product
from typing import Iterator, Optional, Sequence, Union

from .denot import EvalConfig, Evaluator, FuncValue, GroundDist, eval_term
from .interpolate import interpolate_checked
from .operational import explore, fmt_fraction
from .syntax import (
    NAT,
    Abs,
    App,
    Arrow,
    Hole,
    If,
    Num,
    PPCFError,
    Term,
    Type,
    Var,
    app,
    canonical,
    fill,
    pretty,
    typecheck,
)
from . import stdlib


# ---------------------------------------------------------------------------
# web elements


@dataclass(frozen=True)
class NatPoint:
    n: int

    def sort_key(self):
        return (0, self.n)

    def __str__(self) -> str:
        return str(self.n)


@dataclass(frozen=True)
class ArrowPoint:
    """``(multiset of argument points, result point)``; args are kept sorted."""

    args: tuple
    result: "WebElem"

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(sorted(self.args, key=lambda b: b.sort_key())))

    def sort_key(self):
        return (1, len(self.args), tuple(b.sort_key() for b in self.args), self.result.sort_key())

    def __str__(self) -> str:
        return "([" + ",".join(str(b) for b in self.args) + "]," + str(self.result) + ")"


WebElem = Union[NatPoint, ArrowPoint]


def point(x) -> WebElem:
    """Coerce ints and ``(list, result)`` pairs into web elements."""
    if isinstance(x, (NatPoint, ArrowPoint)):
        return x
    if isinstance(x, int):
        return NatPoint(x)
    args, res = x
    return ArrowPoint(tuple(point(b) for b in args), point(res))


def parse_point(text: str) -> WebElem:
    """Read the notation produced by ``str``: ``3`` or ``([b1,b2],c)``."""
    s = text.replace(" ", "")
    pos = 0

    def expect(ch):
        nonlocal pos
        if pos >= len(s) or s[pos] != ch:
            raise ValueError(f"bad web point {text!r} at offset {pos}: expected {ch!r}")
        pos += 1

    def go() -> WebElem:
        nonlocal pos
        if pos < len(s) and s[pos].isdigit():
            start = pos
            while pos < len(s) and s[pos].isdigit():
                pos += 1
            return NatPoint(int(s[start:pos]))
        expect("(")
        expect("[")
        args = []
        if s[pos:pos + 1] != "]":
            args.append(go())
            while s[pos:pos + 1] == ",":
                pos += 1
                args.append(go())
        expect("]")
        expect(",")
        res = go()
        expect(")")
        return ArrowPoint(tuple(args), res)

    out = go()
    if pos != len(s):
        raise ValueError(f"trailing input in web point {text!r}")
    return out


def in_web(a: WebElem, ty: Type) -> bool:
    if isinstance(a, NatPoint):
        return ty == NAT and a.n >= 0
    return isinstance(ty, Arrow) and all(in_web(b, ty.dom) for b in a.args) and in_web(a.result, ty.cod)


def _check(a: WebElem, ty: Type):
    if not in_web(a, ty):
        raise PPCFError(f"{a} is not in the web of {ty}")


def web_size(a: WebElem) -> int:
    """Number of multiset elements, counted through the whole tree."""
    if isinstance(a, NatPoint):
        return 0
    return len(a.args) + sum(web_size(b) for b in a.args) + web_size(a.result)


def max_numeral(a: WebElem) -> int:
    if isinstance(a, NatPoint):
        return a.n
    return max([max_numeral(a.result)] + [max_numeral(b) for b in a.args])


def enumerate_web(ty: Type, size: int) -> list[WebElem]:
    """Points of ``ty`` with :func:`web_size` and every numeral at most ``size``."""
    return sorted((a for a, _ in _web_upto(ty, size, size)), key=lambda a: a.sort_key())


def _web_upto(ty: Type, budget: int, maxn: int) -> list[tuple[WebElem, int]]:
    if ty == NAT:
        return [(NatPoint(n), 0) for n in range(maxn + 1)]
    out = []
    for c, cc in _web_upto(ty.cod, budget, maxn):
        room = budget - cc
        cands = [(b, 1 + cb) for b, cb in _web_upto(ty.dom, room - 1, maxn)] if room > 0 else []
        for args, cost in _multisets_within(cands, room):
            out.append((ArrowPoint(args, c), cc + cost))
    return out


def _multisets_within(cands, budget) -> Iterator[tuple[tuple, int]]:
    def go(start, acc, cost):
        yield tuple(acc), cost
        for i in range(start, len(cands)):
            b, cb = cands[i]
            if cost + cb <= budget:
                acc.append(b)
                yield from go(i, acc, cost + cb)
                acc.pop()

    yield from go(0, [], 0)


# ---------------------------------------------------------------------------
# arities and testing terms


@dataclass(frozen=True)
class TestArity:
    plen: int
    nlen: int


@lru_cache(maxsize=None)
def arity(a: WebElem) -> TestArity:
    if isinstance(a, NatPoint):
        return TestArity(0, 0)
    c = arity(a.result)
    bs = [arity(b) for b in a.args]
    return TestArity(c.plen + sum(b.nlen for b in bs), c.nlen + len(bs) + sum(b.plen for b in bs))


def plen(a: WebElem) -> int:
    return arity(a).plen


def nlen(a: WebElem) -> int:
    return arity(a).nlen


def _mult_factorial(args: tuple) -> int:
    out = 1
    for n in Counter(args).values():
        out *= math.factorial(n)
    return out


@lru_cache(maxsize=None)
def kappa_p(a: WebElem) -> int:
    if isinstance(a, NatPoint):
        return 1
    out = kappa_p(a.result)
    for b in a.args:
        out *= kappa_n(b)
    return out


@lru_cache(maxsize=None)
def kappa_n(a: WebElem) -> int:
    """Factor relating the isolated coefficient of ``phi_w`` to ``w_a``.

    It is 1 unless ``a`` contains a multiset with repeated elements; e.g.
    ``kappa_n(([0,0],0)) = 2``.
    """
    if isinstance(a, NatPoint):
        return 1
    out = kappa_n(a.result) * _mult_factorial(a.args)
    for b in a.args:
        out *= kappa_p(b)
    return out


SHIFTS = ("down", "add")


def _sh(k: int, xi: Term, shift: str) -> Term:
    if k == 0:
        return xi
    if shift == "down":
        return App(stdlib.drop(k), xi)
    if shift == "add":
        return App(stdlib.shift(k), xi)
    raise ValueError(f"shift must be one of {SHIFTS}")


@lru_cache(maxsize=None)
def ptest(a: WebElem, ty: Type, shift: str = "down") -> Term:
    """Closed term of type ``nat -> ty`` whose ``u^[0..plen)`` coefficient is the point ``a``.

    ``shift`` picks how the parameter is re-indexed between sub-tests:
    ``"down"`` (default) moves index ``i + k`` to ``i``; ``"add"`` uses
    addition of ``k``, which is only equivalent when no sub-test reads its
    parameter.
    """
    _check(a, ty)
    xi = Var("xi")
    if isinstance(a, NatPoint):
        return Abs("xi", NAT, Num(a.n))
    phi, psi = ty.dom, ty.cod
    x = Var("x")
    tests, off = [], 0
    for b in a.args:
        tests.append(app(ntest(b, phi, shift), _sh(off, xi, shift), x))
        off += nlen(b)
    cond = app(stdlib.pprod(len(a.args)), *tests)
    then = App(ptest(a.result, psi, shift), _sh(off, xi, shift))
    return Abs("xi", NAT, Abs("x", phi, If(cond, then, "z", stdlib.omega(psi))))


@lru_cache(maxsize=None)
def ntest(a: WebElem, ty: Type, shift: str = "down") -> Term:
    """Closed term of type ``nat -> ty -> nat`` probing the coefficient at ``a``."""
    _check(a, ty)
    xi = Var("xi")
    if isinstance(a, NatPoint):
        return Abs("xi", NAT, stdlib.probe(a.n))
    phi, psi = ty.dom, ty.cod
    k = len(a.args)
    choices, off = [], k
    for b in a.args:
        choices.append(App(ptest(b, phi, shift), _sh(off, xi, shift)))
        off += plen(b)
    arg = app(stdlib.pchoose(k, phi), xi, *choices)
    body = app(ntest(a.result, psi, shift), _sh(off, xi, shift), App(Var("f"), arg))
    return Abs("xi", NAT, Abs("f", ty, body))


# ---------------------------------------------------------------------------
# phi and coefficients


class Workbench:
    """Shares one evaluator (and its memo tables) across many phi evaluations."""

    def __init__(self, cfg: EvalConfig = EvalConfig(), shift: str = "down"):
        self.cfg = cfg
        self.ev = Evaluator(cfg)
        self.shift = shift
        self._values: dict = {}

    def value(self, m: Term) -> FuncValue:
        node = canonical(m)
        v = self._values.get(node)
        if v is None:
            typecheck((), m)
            v = self._values[node] = eval_term(node, None, self.cfg, self.ev)
        return v

    def phi(self, a: WebElem, ty: Type, m: Term, u) -> Fraction:
        nt = self.value(ntest(a, ty, self.shift))
        w = self.value(m)
        return nt.apply(self.ev.ground(_as_map(u))).apply(w).vec[0]


def _as_map(u) -> dict:
    if isinstance(u, dict):
        return u
    return {i: x for i, x in enumerate(u) if x}


def phi(a: WebElem, ty: Type, m: Term, u, cfg: EvalConfig = EvalConfig(), shift: str = "down") -> Fraction:
    """``[[ntest a]](u)([[m]])_0``."""
    return Workbench(cfg, shift).phi(point(a), ty, m, u)


def _grid_axis(d: int, share: int) -> list[Fraction]:
    return [Fraction(j, (d + 2) * share) for j in range(1, d + 2)]


def _check_points(nvars: int, shares: Sequence[int], d: int) -> list[tuple]:
    lo = [Fraction(1, 2 * (d + 2) * s) for s in shares]
    hi = [Fraction(2 * d + 3, 2 * (d + 2) * s) for s in shares]
    mixed = [lo[i] if i % 2 else hi[i] for i in range(nvars)]
    return [tuple(lo), tuple(hi), tuple(mixed)]


def first_order_args(ty: Type) -> int:
    """``k`` when ``ty = nat -> ... -> nat`` with ``k`` arrows, else raise."""
    k = 0
    while isinstance(ty, Arrow):
        if ty.dom != NAT:
            raise PPCFError(f"coefficient extraction needs a first-order type, got {ty}")
        ty, k = ty.cod, k + 1
    return k


def extract_coefficient(
    m: Term,
    a: WebElem,
    ty: Optional[Type] = None,
    cfg: EvalConfig = EvalConfig(),
    degree: int = 4,
    bench: Optional[Workbench] = None,
) -> Fraction:
    """Coefficient ``w_a`` of ``w = [[m]]`` for a first-order type.

    Inputs are restricted to the atoms occurring in ``a``; the resulting
    polynomial is interpolated exactly on a tensor grid with ``degree + 1``
    nodes per variable and checked at extra points.
    """
    a = point(a)
    ty = ty or typecheck((), m)
    k = first_order_args(ty)
    _check(a, ty)
    bench = bench or Workbench(cfg)
    ev = bench.ev
    argsets, cur = [], a
    for _ in range(k):
        argsets.append(Counter(b.n for b in cur.args))
        cur = cur.result
    out_index = cur.n
    if out_index >= cfg.trunc:
        raise PPCFError(f"output {out_index} lies outside the truncation {cfg.trunc}")
    variables = [(i, n) for i, cnt in enumerate(argsets) for n in sorted(cnt)]
    if any(n >= cfg.trunc for _, n in variables):
        raise PPCFError("web point uses a numeral outside the truncation")
    if any(c > degree for cnt in argsets for c in cnt.values()):
        raise PPCFError("multiplicity exceeds the interpolation degree")
    shares = [len(argsets[i]) for i, _ in variables]
    w = bench.value(m)

    def f(xs):
        v = w
        for i in range(k):
            vec = {n: x for (j, n), x in zip(variables, xs) if j == i}
            v = v.apply(ev.ground(vec))
        return v.vec[out_index]

    axes = [_grid_axis(degree, s) for s in shares]
    coeffs = interpolate_checked(f, axes, _check_points(len(variables), shares, degree) if variables else [])
    target = tuple(argsets[i][n] for i, n in variables)
    return coeffs.get(target, Fraction(0))


@dataclass
class OneCoefReport:
    point: WebElem
    nlen: int
    coefficient: Fraction
    w_a: Fraction
    kappa: int

    @property
    def holds(self) -> bool:
        """The coefficient equals ``w_a`` on the nose."""
        return self.coefficient == self.w_a

    @property
    def holds_corrected(self) -> bool:
        """The coefficient equals ``kappa * w_a``."""
        return self.coefficient == self.kappa * self.w_a


def phi_coefficients(
    a: WebElem, ty: Type, m: Term, cfg: EvalConfig = EvalConfig(), degree: int = 3, bench: Optional[Workbench] = None
) -> dict:
    """Interpolated power series of ``phi`` in ``u_0 .. u_{nlen-1}``."""
    a = point(a)
    bench = bench or Workbench(cfg)
    n = nlen(a)
    axes = [_grid_axis(degree, n) for _ in range(n)]
    checks = _check_points(n, [n] * n, degree) if n else []
    return interpolate_checked(lambda xs: bench.phi(a, ty, m, list(xs)), axes, checks)


def check_one_coef(
    a: WebElem,
    m: Term,
    ty: Optional[Type] = None,
    cfg: EvalConfig = EvalConfig(),
    degree: int = 3,
    bench: Optional[Workbench] = None,
    w_a: Optional[Fraction] = None,
) -> OneCoefReport:
    """Compare the ``u_0 ... u_{nlen-1}`` coefficient of ``phi`` with ``w_a``.

    ``w_a`` defaults to :func:`extract_coefficient`, so ``ty`` must then be
    first order.
    """
    a = point(a)
    ty = ty or typecheck((), m)
    bench = bench or Workbench(cfg)
    coeffs = phi_coefficients(a, ty, m, cfg, degree, bench)
    n = nlen(a)
    coef = coeffs.get((1,) * n, Fraction(0))
    if w_a is None:
        w_a = extract_coefficient(m, a, ty, cfg, max(degree, 2), bench)
    return OneCoefReport(a, n, coef, Fraction(w_a), kappa_n(a))


# ---------------------------------------------------------------------------
# separation


@dataclass
class SeparationResult:
    point: WebElem
    probs: list
    denot_diff: tuple
    context: Term
    grid_denom: int
    operational: Optional[tuple] = None

    def to_json(self) -> dict:
        out = {
            "found": True,
            "point": str(self.point),
            "probs": [fmt_fraction(q) for q in self.probs],
            "denot": [fmt_fraction(x) for x in self.denot_diff],
            "context": pretty(self.context),
            "grid_denom": self.grid_denom,
        }
        if self.operational is not None:
            out["operational"] = [fmt_fraction(x) for x in self.operational]
        return out


@dataclass
class NotFound:
    point: WebElem
    grid_denoms: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"found": False, "point": str(self.point), "grid_denoms": self.grid_denoms}


def grid(n: int, d: int) -> Iterator[tuple]:
    """Points of ``{0, 1/d, ..., 1}^n`` with sum at most 1, in lexicographic order."""
    for js in product(range(d + 1), repeat=n):
        if sum(js) <= d:
            yield tuple(Fraction(j, d) for j in js)


def separation_context(a: WebElem, ty: Type, q: Sequence[Fraction], shift: str = "down") -> Term:
    """``ntest(a) (ran q) []`` with a hole of type ``ty``."""
    return app(ntest(a, ty, shift), stdlib.ran(list(q)), Hole((), ty))


def separate(
    m: Term,
    m2: Term,
    a: WebElem,
    ty: Optional[Type] = None,
    grid_denom: int = 4,
    refinements: int = 2,
    cfg: EvalConfig = EvalConfig(),
    confirm_steps: Optional[int] = None,
    shift: str = "down",
) -> Union[SeparationResult, NotFound]:
    """Search a rational grid for parameters on which the tests at ``a`` tell ``m`` and ``m2`` apart.

    The grid denominator is doubled ``refinements`` times before giving up.
    """
    a = point(a)
    ty = ty or typecheck((), m)
    if typecheck((), m2) != ty:
        raise PPCFError("terms must have the same type")
    _check(a, ty)
    bench = Workbench(cfg, shift)
    n = nlen(a)
    tried = []
    d = grid_denom
    for _ in range(refinements + 1):
        tried.append(d)
        for q in grid(n, d):
            x, y = bench.phi(a, ty, m, list(q)), bench.phi(a, ty, m2, list(q))
            if x != y:
                ctx = separation_context(a, ty, q, shift)
                res = SeparationResult(a, list(q), (x, y), ctx, d)
                if confirm_steps is not None:
                    res.operational = obs_distinguish(m, m2, ctx, confirm_steps)
                return res
        d *= 2
    return NotFound(a, tried)


def obs_distinguish(m: Term, m2: Term, ctx: Term, k: int) -> tuple[Fraction, Fraction]:
    """Probabilities of reaching 0 within ``k`` steps in ``ctx[m]`` and ``ctx[m2]``."""
    return explore(fill(ctx, m), k).get(0), explore(fill(ctx, m2), k).get(0)
