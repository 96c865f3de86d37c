"""Weak-head reduction as an absorbing Markov chain.

States are interned nameless nodes (see :mod:`ppcf.syntax`), so terms that
differ only by bound names are the same state.  All probabilities are
exact :class:`fractions.Fraction` values.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Union

from .syntax import (
    Node,
    PPCFError,
    Term,
    canonical,
    n_app,
    n_fix,
    n_if,
    n_lam,
    n_num,
    n_succ,
    pretty,
    to_term,
    typecheck,
)

ONE = Fraction(1)
ZERO = Fraction(0)


class ResourceLimit(Exception):
    """Raised when exploration exceeds a configured state budget."""


@dataclass(frozen=True)
class Branch:
    prob: Fraction
    target: Node

    @property
    def term(self) -> Term:
        return to_term(self.target)


def as_node(m: Union[Term, Node]) -> Node:
    """Canonical node of a closed well-typed term (nodes are passed through)."""
    if isinstance(m, Node):
        if m.fv:
            raise PPCFError("term is not closed")
        return m
    typecheck((), m)
    return canonical(m)


def _instantiate(t: Node, val: Node, depth: int = 0) -> Node:
    """Replace index ``depth`` by the closed node ``val``.

    ``t`` sits under exactly one binder being eliminated, so no index above
    ``depth`` is loose and no shifting is needed.
    """
    if t.fv <= depth:
        return t
    tag = t.tag
    if tag == "var":
        return val  # fv > depth forces t.a == depth
    if tag == "succ":
        return n_succ(_instantiate(t.a, val, depth))
    if tag == "app":
        return n_app(_instantiate(t.a, val, depth), _instantiate(t.b, val, depth))
    if tag == "fix":
        return n_fix(_instantiate(t.a, val, depth))
    if tag == "lam":
        return n_lam(t.a, _instantiate(t.b, val, depth + 1), t.hint)
    if tag == "if":
        return n_if(
            _instantiate(t.a, val, depth),
            _instantiate(t.b, val, depth),
            _instantiate(t.c, val, depth + 1),
            t.hint,
        )
    raise AssertionError(tag)


def _coin_branches(p: Fraction) -> tuple[Branch, ...]:
    # zero-probability branches are omitted so every branch has prob in (0,1]
    if p == 1:
        return (Branch(ONE, n_num(0)),)
    if p == 0:
        return (Branch(ONE, n_num(1)),)
    return (Branch(p, n_num(0)), Branch(1 - p, n_num(1)))


def _step(t: Node) -> tuple[Branch, ...]:
    cached = t._step
    if cached is not None:
        return cached
    tag = t.tag
    if tag in ("num", "lam"):
        out: tuple[Branch, ...] = ()
    elif tag == "coin":
        out = _coin_branches(t.a)
    elif tag == "fix":
        out = (Branch(ONE, n_app(t.a, t)),)
    elif tag == "app":
        f = t.a
        if f.tag == "lam":
            out = (Branch(ONE, _instantiate(f.b, t.b)),)
        else:
            inner = _step(f)
            if not inner:
                raise PPCFError("stuck application; term is ill-typed")
            out = tuple(Branch(b.prob, n_app(b.target, t.b)) for b in inner)
    elif tag == "succ":
        a = t.a
        if a.tag == "num":
            out = (Branch(ONE, n_num(a.a + 1)),)
        else:
            inner = _step(a)
            if not inner:
                raise PPCFError("stuck succ; term is ill-typed")
            out = tuple(Branch(b.prob, n_succ(b.target)) for b in inner)
    elif tag == "if":
        s = t.a
        if s.tag == "num":
            if s.a == 0:
                out = (Branch(ONE, t.b),)
            else:
                out = (Branch(ONE, _instantiate(t.c, n_num(s.a - 1))),)
        else:
            inner = _step(s)
            if not inner:
                raise PPCFError("stuck conditional; term is ill-typed")
            out = tuple(Branch(b.prob, n_if(b.target, t.b, t.c, t.hint)) for b in inner)
    elif tag == "var":
        raise PPCFError("cannot reduce an open term")
    elif tag == "fvar":
        raise PPCFError(f"cannot reduce an open term (free {t.a})")
    else:
        raise AssertionError(tag)
    t._step = out
    return out


def step(m: Union[Term, Node]) -> list[Branch]:
    """One-step reduction; empty iff ``m`` is weak-normal."""
    return list(_step(as_node(m)))


def is_weak_normal(m: Union[Term, Node]) -> bool:
    return not _step(as_node(m))


# ---------------------------------------------------------------------------
# exploration


@dataclass
class Distribution:
    """Mass absorbed in weak-normal states after ``steps`` steps.

    ``residual`` is everything else, including ``floored`` mass discarded by
    a mass floor; ``mass`` plus ``residual`` is always exactly 1.
    """

    mass: dict
    residual: Fraction
    steps: int
    exhausted: bool = False
    floored: Fraction = ZERO
    frontier_size: int = 0

    def get(self, v: Union[Term, Node, int]) -> Fraction:
        if isinstance(v, int):
            v = n_num(v)
        elif not isinstance(v, Node):
            v = canonical(v)
        return self.mass.get(v, ZERO)

    def numeral_masses(self) -> dict[int, Fraction]:
        return {k.a: p for k, p in self.mass.items() if k.tag == "num"}

    def total(self) -> Fraction:
        return sum(self.mass.values(), ZERO)

    def to_json(self) -> dict:
        entries = []
        for v, p in sorted(self.mass.items(), key=lambda kv: _value_key(kv[0])):
            value = v.a if v.tag == "num" else pretty(to_term(v))
            entries.append({"value": value, "prob": fmt_fraction(p)})
        return {
            "distribution": entries,
            "residual": fmt_fraction(self.residual),
            "steps": self.steps,
        }


def _value_key(v: Node):
    return (0, v.a, "") if v.tag == "num" else (1, 0, pretty(to_term(v)))


def fmt_fraction(p: Fraction) -> str:
    return f"{p.numerator}/{p.denominator}"


def iter_explore(
    m: Union[Term, Node],
    max_states: Optional[int] = None,
    mass_floor: Fraction = ZERO,
) -> Iterator[Distribution]:
    """Yield the distribution after 0, 1, 2, ... steps (forever)."""
    start = as_node(m)
    frontier: dict[Node, Fraction] = {}
    absorbed: dict[Node, Fraction] = {}
    if _step(start):
        frontier[start] = ONE
    else:
        absorbed[start] = ONE
    floored = ZERO
    k = 0
    while True:
        total = sum(absorbed.values(), ZERO)
        yield Distribution(
            dict(absorbed), 1 - total, k, not frontier, floored, len(frontier)
        )
        if not frontier:
            # absorbing from here on; keep yielding the same masses
            while True:
                k += 1
                yield Distribution(dict(absorbed), 1 - total, k, True, floored, 0)
        nxt: dict[Node, Fraction] = {}
        for state, w in frontier.items():
            for br in _step(state):
                q = w if br.prob == 1 else w * br.prob
                tgt = br.target
                if _step(tgt):
                    nxt[tgt] = nxt.get(tgt, ZERO) + q
                else:
                    absorbed[tgt] = absorbed.get(tgt, ZERO) + q
        if mass_floor > 0:
            for state in [s for s, w in nxt.items() if w < mass_floor]:
                floored += nxt.pop(state)
        if max_states is not None and len(nxt) > max_states:
            raise ResourceLimit(f"frontier exceeded {max_states} states at step {k + 1}")
        frontier = nxt
        k += 1


def explore(
    m: Union[Term, Node],
    k: int,
    max_states: Optional[int] = None,
    mass_floor: Fraction = ZERO,
) -> Distribution:
    """Exact ``Red^k`` masses from ``m`` into weak-normal states."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    for d in iter_explore(m, max_states, mass_floor):
        if d.steps == k:
            return d
        if d.exhausted:
            d.steps = k
            return d
    raise AssertionError("unreachable")


def reduce_prob(m: Union[Term, Node], v: Union[Term, Node, int], k: int) -> Fraction:
    return explore(m, k).get(v)


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class Value:
    node: Node

    @property
    def term(self) -> Term:
        return to_term(self.node)


@dataclass(frozen=True)
class Timeout:
    steps: int


_DENOM = 1 << 64


def sample(m: Union[Term, Node], seed: int, max_steps: int) -> Union[Value, Timeout]:
    """Follow one trajectory; a coin with bias p picks 0 iff a uniform draw is below p."""
    rng = random.Random(seed)
    t = as_node(m)
    for _ in range(max_steps + 1):
        branches = _step(t)
        if not branches:
            return Value(t)
        if len(branches) == 1:
            t = branches[0].target
        else:
            u = Fraction(rng.getrandbits(64), _DENOM)
            t = branches[0].target if u < branches[0].prob else branches[1].target
    return Timeout(max_steps)


def histogram(m: Union[Term, Node], seed: int, samples: int, max_steps: int) -> dict:
    """Empirical outcome counts over ``samples`` trajectories with derived seeds."""
    t = as_node(m)
    counts: dict = {}
    timeouts = 0
    master = random.Random(seed)
    for _ in range(samples):
        out = sample(t, master.getrandbits(64), max_steps)
        if isinstance(out, Timeout):
            timeouts += 1
        else:
            counts[out.node] = counts.get(out.node, 0) + 1
    return {"counts": counts, "timeouts": timeouts}
