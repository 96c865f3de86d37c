"""Example programs, built as closed terms.

Every constructor returns a fresh :class:`~ppcf.syntax.Term`.  The
definitions follow the textbook encodings literally (no optimisation), so
step counts match hand traces.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Sequence

from .syntax import (
    NAT,
    Abs,
    App,
    Arrow,
    Coin,
    Fix,
    If,
    Num,
    Succ,
    Term,
    Type,
    Var,
    app,
    lam,
    let_in,
    nat_power,
    parse_type,
)

NN = Arrow(NAT, NAT)


def omega(sigma: Type = NAT) -> Term:
    """The ever-looping term ``fix(\\x:sigma. x)``."""
    return Fix(Abs("x", sigma, Var("x")))


def pred() -> Term:
    return Abs("x", NAT, If(Var("x"), Num(0), "z", Var("z")))


def add() -> Term:
    # \x. fix(\a. \y. if y then x else [z] succ (a z))
    body = Abs("y", NAT, If(Var("y"), Var("x"), "z", Succ(App(Var("a"), Var("z")))))
    return Abs("x", NAT, Fix(Abs("a", NN, body)))


def shift(k: int) -> Term:
    """``add k``: moves a numeral up by ``k``."""
    return App(add(), Num(k))


def drop(k: int) -> Term:
    """Moves a numeral down by ``k``, diverging below ``k``.

    Denotation: ``u |-> sum_n u_{n+k} e_n``.  This is the shift the testing
    terms need to re-index their random parameter.
    """
    t: Term = Abs("x", NAT, Var("x"))
    for _ in range(k):
        t = Abs("x", NAT, If(Var("x"), omega(NAT), "z", App(t, Var("z"))))
    return t


def exp_() -> Term:
    e_z = App(Var("e"), Var("z"))
    body = Abs("x", NAT, If(Var("x"), Num(1), "z", app(add(), e_z, e_z)))
    return Fix(Abs("e", NN, body))


def cmp() -> Term:
    inner = If(Var("y"), Num(1), "z'", app(Var("c"), Var("z"), Var("z'")))
    body = lam([("x", NAT), ("y", NAT)], If(Var("x"), Num(0), "z", inner))
    return Fix(Abs("c", nat_power(2), body))


def probe(k: int) -> Term:
    """Converges to 0 with the probability that its argument yields ``k``."""
    t = Abs("x", NAT, If(Var("x"), Num(0), "z", omega(NAT)))
    for _ in range(k):
        t = Abs("x", NAT, If(Var("x"), omega(NAT), "z", App(t, Var("z"))))
    return t


def pprod(k: int) -> Term:
    """``pprod(k) M1 ... Mk`` yields 0 with the product of the ``Mi = 0`` probabilities."""
    t: Term = Num(0)
    for i in range(k):
        t = Abs("x", NAT, If(Var("x"), t, "z", omega(nat_power(i))))
    return t


def pchoose(k: int, sigma: Type) -> Term:
    """``pchoose(k, s) xi N1 ... Nk`` behaves as ``N(i+1)`` when ``xi`` yields ``i``."""
    t: Term = Abs("xi", NAT, omega(sigma))
    for i in range(1, k + 1):
        xs = [f"x{j}" for j in range(1, i + 1)]
        rest = app(t, Var("zeta"), *[Var(x) for x in xs[1:]])
        body = If(Var("xi"), Var(xs[0]), "zeta", rest)
        t = lam([("xi", NAT)] + [(x, sigma) for x in xs], body)
    return t


def let_(x: str, m: Term, n: Term) -> Term:
    return let_in(x, m, n)


def unift() -> Term:
    """Uniform on ``0 .. 2^n - 1``."""
    u_z = App(Var("u"), Var("z"))
    tail = app(add(), App(exp_(), Var("z")), u_z)
    body = Abs("x", NAT, If(Var("x"), Num(0), "z", If(Coin(Fraction(1, 2)), u_z, "z'", tail)))
    return Fix(Abs("u", NN, body))


def unif() -> Term:
    """Uniform on ``0 .. n`` by rejection from :func:`unift`."""
    retry = If(app(cmp(), Var("z"), Var("y")), Var("z"), "w", Var("u"))
    loop = Fix(Abs("u", NAT, let_in("z", App(unift(), Var("y")), retry)))
    return Abs("x", NAT, let_in("y", Var("x"), loop))


def ran(ps: Sequence) -> Term:
    """Yields ``i`` with probability ``ps[i]``; an empty list diverges."""
    ps = [Fraction(p) for p in ps]
    if any(p < 0 for p in ps) or sum(ps) > 1:
        raise ValueError("ran expects nonnegative probabilities summing to at most 1")
    if not ps:
        return omega(NAT)
    p0 = ps[0]
    if p0 == 1:
        return Num(0)
    if len(ps) == 1:
        return If(Coin(p0), Num(0), "z", omega(NAT))
    rest = [p / (1 - p0) for p in ps[1:]]
    return If(Coin(p0), Num(0), "z", Succ(ran(rest)))


def las_vegas() -> Term:
    """``\\f. \\x.`` retries ``unif x`` until ``f`` maps the draw to 0."""
    body = let_in("y", App(unif(), Var("x")), If(App(Var("f"), Var("y")), Var("y"), "z", Var("r")))
    return lam([("f", NN), ("x", NAT)], Fix(Abs("r", NAT, body)))


def numeral(n: int) -> Term:
    return Num(n)


def _rational_list(args: Sequence[str]) -> list[Fraction]:
    return [Fraction(a) for a in args]


# CLI names; builders take their parameters as strings
REGISTRY: dict[str, Callable[..., Term]] = {
    "omega": lambda *a: omega(_type_arg(a)),
    "pred": pred,
    "add": add,
    "shift": lambda k: shift(int(k)),
    "drop": lambda k: drop(int(k)),
    "exp": exp_,
    "cmp": cmp,
    "probe": lambda k: probe(int(k)),
    "pprod": lambda k: pprod(int(k)),
    "pchoose": lambda k, *a: pchoose(int(k), _type_arg(a)),
    "unift": unift,
    "unif": unif,
    "ran": lambda *ps: ran(_rational_list(ps)),
    "las_vegas": las_vegas,
}


def _type_arg(a: Sequence[str]) -> Type:
    return parse_type(" ".join(a)) if a else NAT


def build(name: str, *args: str) -> Term:
    """Construct a library term from its name and string arguments."""
    try:
        fn = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown library term {name!r}; known: {', '.join(sorted(REGISTRY))}")
    return fn(*args)
