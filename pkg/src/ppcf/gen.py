"""Random well-typed terms for property checks.

The generator draws from a ``source`` with ``randint(lo, hi)`` and
``choice(seq)`` methods, so a seeded :class:`random.Random` works directly
and test code can plug in a hypothesis-backed source to get shrinking.

Recursion is only introduced through a few terminating shapes (library
arithmetic, recursion on a numeral argument, the diverging loop), so every
generated ground term has a finite-depth fixpoint structure.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Optional

from . import stdlib
from .syntax import NAT, Abs, App, Arrow, Coin, Fix, If, Num, Succ, Term, Type, Var, app, fresh

COIN_BIASES = [Fraction(0), Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(2, 3), Fraction(3, 4), Fraction(1)]
NN = Arrow(NAT, NAT)


class TermGen:
    def __init__(self, source, max_num: int = 7, allow_fix: bool = True):
        self.src = source
        self.max_num = max_num
        self.allow_fix = allow_fix

    def type_(self, depth: int = 2) -> Type:
        if depth <= 0 or self.src.randint(0, 2) == 0:
            return NAT
        return Arrow(self.type_(depth - 1), self.type_(depth - 1))

    def term(self, ty: Type, depth: int, ctx: tuple = ()) -> Term:
        if ty == NAT:
            return self._nat(depth, ctx)
        return self._arrow(ty, depth, ctx)

    def _vars(self, ctx, ty):
        # innermost binding of each name wins
        seen, out = set(), []
        for x, t in reversed(ctx):
            if x not in seen:
                seen.add(x)
                if t == ty:
                    out.append(x)
        return out

    def _fresh(self, ctx, base):
        return fresh(base, {x for x, _ in ctx})

    def _nat(self, depth: int, ctx: tuple) -> Term:
        src = self.src
        vs = self._vars(ctx, NAT)
        if depth <= 0:
            kind = src.choice(["num", "coin"] + (["var"] * 2 if vs else []))
        else:
            kind = src.choice(
                ["num", "coin", "succ", "if", "if", "app", "app", "let"]
                + (["var", "var"] if vs else [])
                + (["lib", "rec", "omega"] if self.allow_fix else [])
            )
        if kind == "num":
            return Num(src.randint(0, self.max_num))
        if kind == "coin":
            return Coin(src.choice(COIN_BIASES))
        if kind == "var":
            return Var(src.choice(vs))
        if kind == "succ":
            return Succ(self._nat(depth - 1, ctx))
        if kind == "if":
            z = self._fresh(ctx, "z")
            return If(self._nat(depth - 1, ctx), self._nat(depth - 1, ctx), z, self._nat(depth - 1, ctx + ((z, NAT),)))
        if kind == "let":
            x = self._fresh(ctx, "y")
            return stdlib.let_(x, self._nat(depth - 1, ctx), self._nat(depth - 1, ctx + ((x, NAT),)))
        if kind == "app":
            dom = src.choice([NAT, NAT, NN])
            return App(self.term(Arrow(dom, NAT), depth - 1, ctx), self.term(dom, depth - 1, ctx))
        if kind == "omega":
            return stdlib.omega(NAT)
        if kind == "lib":
            which = src.choice(["pred", "add", "cmp", "probe"])
            small = lambda: self._small(depth - 1, ctx)  # noqa: E731
            if which == "pred":
                return App(stdlib.pred(), small())
            if which == "add":
                return app(stdlib.add(), small(), small())
            if which == "cmp":
                return app(stdlib.cmp(), small(), small())
            return App(stdlib.probe(src.randint(0, 2)), small())
        if kind == "rec":
            # fix(\f. \n. if n then B else [m] S[f m]) applied to a small numeral
            # f is kept out of reach of B and S so recursion is structural
            f = self._fresh(ctx, "f")
            n = self._fresh(ctx + ((f, NN),), "n")
            m = self._fresh(ctx + ((f, NN), (n, NAT)), "m")
            inner = ctx + ((n, NAT),)
            base = self._nat(max(depth - 2, 0), inner)
            step = self._nat(max(depth - 2, 0), inner + ((m, NAT),))
            rec = If(App(Var(f), Var(m)), step, "w", Succ(Var("w")))
            body = If(Var(n), base, m, rec)
            return App(Fix(Abs(f, NN, Abs(n, NAT, body))), self._small(depth - 1, ctx))
        raise AssertionError(kind)

    def _small(self, depth: int, ctx: tuple) -> Term:
        if self.src.randint(0, 1):
            return Num(self.src.randint(0, 3))
        return self._nat(min(depth, 1), ctx)

    def _arrow(self, ty: Arrow, depth: int, ctx: tuple) -> Term:
        src = self.src
        vs = self._vars(ctx, ty)
        kinds = ["abs", "abs", "abs"]
        if vs:
            kinds += ["var"]
        if depth > 0:
            kinds += ["if"]
        kind = src.choice(kinds)
        if kind == "var":
            return Var(src.choice(vs))
        if kind == "if":
            z = self._fresh(ctx, "z")
            return If(self._nat(depth - 1, ctx), self.term(ty, depth - 1, ctx), z, self.term(ty, depth - 1, ctx + ((z, NAT),)))
        x = self._fresh(ctx, "x")
        return Abs(x, ty.dom, self.term(ty.cod, max(depth - 1, 0), ctx + ((x, ty.dom),)))


def random_term(seed: int, ty: Type = NAT, depth: int = 4, max_num: int = 7, allow_fix: bool = True) -> Term:
    return TermGen(random.Random(seed), max_num, allow_fix).term(ty, depth)


def random_terms(seed: int, count: int, depth: int = 4, **kw) -> list[Term]:
    rng = random.Random(seed)
    gen = TermGen(rng, **kw)
    return [gen.term(NAT, depth) for _ in range(count)]


def random_typed(seed: int, depth: int = 3, ctx: tuple = (), ty: Optional[Type] = None) -> tuple[Term, Type]:
    rng = random.Random(seed)
    gen = TermGen(rng)
    ty = ty or gen.type_(2)
    return gen.term(ty, depth, ctx), ty
