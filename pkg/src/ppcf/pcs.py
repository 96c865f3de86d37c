"""Finite-web probabilistic coherence space algebra.

Vectors are sparse dicts ``atom -> Fraction`` and matrices are sparse dicts
``(row_atom, col_atom) -> Fraction``.  Missing keys are zero.  Webs are
infinite in the semantics, so everything involving the exponential takes an
explicit degree bound ``d``; truncation only ever drops nonnegative terms.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Hashable, Iterable, Iterator, Mapping, Sequence

Vec = dict
Mat = dict
ZERO = Fraction(0)


def atom_key(a):
    """Total order on the atoms we use (ints, strings, tuples, multisets)."""
    if isinstance(a, bool):
        return (0, int(a))
    if isinstance(a, int):
        return (0, a)
    if isinstance(a, str):
        return (1, a)
    if isinstance(a, Multiset):
        return (3, a.degree, tuple((atom_key(x), n) for x, n in a.items))
    if isinstance(a, tuple):
        return (2, tuple(atom_key(x) for x in a))
    if hasattr(a, "sort_key"):
        return (4, a.sort_key())
    return (5, repr(a))


class Multiset:
    """Finite multiset, stored as a sorted tuple of ``(atom, count)`` pairs."""

    __slots__ = ("items", "_hash")

    def __init__(self, elems: Iterable = ()):
        if isinstance(elems, Mapping):
            counts = {a: n for a, n in elems.items() if n}
        else:
            counts = Counter(elems)
        if any(n < 0 for n in counts.values()):
            raise ValueError("negative multiplicity")
        self.items = tuple(sorted(counts.items(), key=lambda kv: atom_key(kv[0])))
        self._hash = hash(self.items)

    @classmethod
    def of(cls, *elems) -> "Multiset":
        return cls(elems)

    @property
    def degree(self) -> int:
        return sum(n for _, n in self.items)

    def __len__(self) -> int:
        return self.degree

    def __iter__(self) -> Iterator:
        for a, n in self.items:
            for _ in range(n):
                yield a

    def count(self, a) -> int:
        for x, n in self.items:
            if x == a:
                return n
        return 0

    def support(self) -> list:
        return [a for a, _ in self.items]

    def __add__(self, other: "Multiset") -> "Multiset":
        c = Counter(dict(self.items))
        c.update(dict(other.items))
        return Multiset(c)

    def factorial(self) -> int:
        """``mu! = prod mu(a)!``."""
        out = 1
        for _, n in self.items:
            out *= math.factorial(n)
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Multiset) and self.items == other.items

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Multiset") -> bool:
        return atom_key(self) < atom_key(other)

    def __repr__(self) -> str:
        return "[" + ", ".join(repr(a) for a in self) + "]"


EMPTY = Multiset()


# ---------------------------------------------------------------------------
# vectors and linear maps


def pair(u: Vec, v: Vec) -> Fraction:
    """``<u, v> = sum_i u_i v_i``."""
    if len(v) < len(u):
        u, v = v, u
    return sum((x * v[a] for a, x in u.items() if a in v), ZERO)


def in_pcoh_nat(u: Vec) -> bool:
    return all(x >= 0 for x in u.values()) and sum(u.values(), ZERO) <= 1


def norm(u: Vec, space: str = "nat") -> Fraction:
    """Norm on the spaces where it has a closed form.

    On ``nat`` (and finite sums of ``1``) it is the total mass; on ``1`` it is
    the single coordinate.  The general dual supremum is not implemented.
    """
    if space in ("nat", "simplex"):
        return sum(u.values(), ZERO)
    if space == "one":
        if set(u) - {0}:
            raise ValueError("the web of 1 is a singleton {0}")
        return u.get(0, ZERO)
    raise NotImplementedError(f"norm on {space!r} is not supported")


def mat_apply(t: Mat, u: Vec) -> Vec:
    """``(t u)_b = sum_a t_{a,b} u_a``."""
    out: Vec = {}
    for (a, b), c in t.items():
        x = u.get(a)
        if x:
            out[b] = out.get(b, ZERO) + c * x
    return {b: x for b, x in out.items() if x}


def identity(web: Iterable) -> Mat:
    return {(a, a): Fraction(1) for a in web}


def successor_matrix(n: int) -> Mat:
    """The successor on ``{0..n-1}``; mass leaving the web is lost."""
    return {(i, i + 1): Fraction(1) for i in range(n - 1)}


def lincomb(pairs: Iterable[tuple[Fraction, Vec]]) -> Vec:
    out: Vec = {}
    for c, u in pairs:
        for a, x in u.items():
            out[a] = out.get(a, ZERO) + c * x
    return {a: x for a, x in out.items() if x}


# ---------------------------------------------------------------------------
# multisets and the exponential


def multisets(web: Sequence, d: int) -> Iterator[Multiset]:
    """All multisets over ``web`` of degree at most ``d``, by degree then order."""
    web = sorted(web, key=atom_key)
    for k in range(d + 1):
        for combo in combinations_with_replacement(web, k):
            yield Multiset(combo)


def monomial(u: Vec, mu: Multiset) -> Fraction:
    """``u^mu = prod_a u_a^{mu(a)}``."""
    out = Fraction(1)
    for a, n in mu.items:
        x = u.get(a, ZERO)
        if not x:
            return ZERO
        out *= x**n
    return out


def prom(u: Vec, d: int) -> Vec:
    """``!u`` restricted to multisets of degree at most ``d`` (zeros omitted)."""
    supp = [a for a, x in u.items() if x]
    return {mu: monomial(u, mu) for mu in multisets(supp, d)}


def multinomial(mu: Multiset) -> int:
    """``m!(mu) = (#mu)! / mu!``."""
    return math.factorial(mu.degree) // mu.factorial()


def _compositions(n: int, cols: Sequence) -> Iterator[dict]:
    """Ways to write ``n`` as an ordered sum over ``cols`` (nonnegative parts)."""
    if not cols:
        if n == 0:
            yield {}
        return
    if len(cols) == 1:
        yield {cols[0]: n}
        return
    for i in range(n, -1, -1):
        for rest in _compositions(n - i, cols[1:]):
            out = {cols[0]: i} if i else {}
            out.update(rest)
            yield out


def excl(t: Mat, d: int, web: Iterable | None = None) -> dict:
    """``!t`` on multisets of degree at most ``d``.

    ``(!t)_{mu,nu} = sum over tables rho with margins (mu, nu) of
    nu!/rho! * t^rho``.  Tables are enumerated row by row, each row only
    spreading over the columns where ``t`` is nonzero.  Cost grows
    exponentially with ``d``; this is meant for small webs.
    """
    rows: dict = {}
    for (a, b), c in t.items():
        if c:
            rows.setdefault(a, []).append(b)
    for cols in rows.values():
        cols.sort(key=atom_key)
    in_web = sorted(set(web) if web is not None else set(rows), key=atom_key)
    out: dict = {}
    for mu in multisets(in_web, d):
        if any(a not in rows for a in mu.support()):
            continue
        for rho in _tables(mu, rows):
            nu_counts: Counter = Counter()
            weight = Fraction(1)
            rho_fact = 1
            for (a, b), n in rho.items():
                nu_counts[b] += n
                weight *= t[(a, b)] ** n
                rho_fact *= math.factorial(n)
            nu = Multiset(nu_counts)
            coef = Fraction(nu.factorial(), rho_fact) * weight
            out[(mu, nu)] = out.get((mu, nu), ZERO) + coef
    return out


def _tables(mu: Multiset, rows: dict) -> Iterator[dict]:
    items = mu.items

    def go(i: int, acc: dict):
        if i == len(items):
            yield dict(acc)
            return
        a, n = items[i]
        for comp in _compositions(n, rows[a]):
            for b, k in comp.items():
                acc[(a, b)] = k
            yield from go(i + 1, acc)
            for b in comp:
                del acc[(a, b)]

    yield from go(0, {})


def der(web: Iterable) -> Mat:
    """Dereliction: ``Der_{mu,a} = 1`` iff ``mu = [a]``."""
    return {(Multiset.of(a), a): Fraction(1) for a in web}


def digg(web: Iterable, d: int) -> Mat:
    """Digging restricted to ``#mu <= d`` and outer multisets of size ``<= d``.

    ``Digg_{mu,[mu1..mun]} = 1`` iff ``mu1 + ... + mun = mu``.  Parts may be
    empty, which is why the outer size needs its own bound.
    """
    web = list(web)
    out: Mat = {}
    for mu in multisets(web, d):
        parts = [p for p in multisets(mu.support(), mu.degree) if _sub(p, mu)]
        for n in range(d + 1):
            for combo in combinations_with_replacement(range(len(parts)), n):
                total = EMPTY
                for i in combo:
                    total = total + parts[i]
                if total == mu:
                    out[(mu, Multiset(parts[i] for i in combo))] = Fraction(1)
    return out


def _sub(p: Multiset, mu: Multiset) -> bool:
    return all(mu.count(a) >= n for a, n in p.items)


# ---------------------------------------------------------------------------
# Kleisli morphisms


@dataclass
class KleisliMat:
    """Sparse ``(multiset over input web, output atom) -> coefficient``."""

    coeffs: dict = field(default_factory=dict)
    degree_bound: int = 0

    def __post_init__(self):
        for (mu, _), c in self.coeffs.items():
            if mu.degree > self.degree_bound:
                raise ValueError(f"key {mu} exceeds degree bound {self.degree_bound}")
            if c < 0:
                raise ValueError("coefficients must be nonnegative")

    def __call__(self, u: Vec) -> Vec:
        return kleisli_apply(self, u)


def kleisli_apply(s: KleisliMat, u: Vec) -> Vec:
    """``Fun s(u)_b = sum_mu s_{mu,b} u^mu``."""
    out: Vec = {}
    for (mu, b), c in s.coeffs.items():
        m = monomial(u, mu)
        if m:
            out[b] = out.get(b, ZERO) + c * m
    return {b: x for b, x in out.items() if x}


Poly = dict  # Multiset -> coefficient, a power series in the input atoms


def poly_mul(p: Poly, q: Poly, d: int) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            if m1.degree + m2.degree <= d:
                m = m1 + m2
                out[m] = out.get(m, ZERO) + c1 * c2
    return {m: c for m, c in out.items() if c}


def _components(f: KleisliMat) -> dict:
    comps: dict = {}
    for (mu, b), c in f.coeffs.items():
        if c:
            comps.setdefault(b, {})[mu] = c
    return comps


def promotion(f: KleisliMat, nus: Iterable[Multiset], d: int) -> dict:
    """Columns ``nu`` of ``f^!``: the coefficient of ``u^mu`` in ``prod_b Fun f(u)_b^{nu(b)}``.

    Returns ``{(mu, nu): coef}`` for ``#mu <= d``.
    """
    comps = _components(f)
    out: dict = {}
    powers: dict = {}
    for nu in nus:
        acc: Poly = {EMPTY: Fraction(1)}
        for b, n in nu.items:
            key = (b, n)
            if key not in powers:
                base = comps.get(b, {})
                pw: Poly = {EMPTY: Fraction(1)}
                for _ in range(n):
                    pw = poly_mul(pw, base, d)
                powers[key] = pw
            acc = poly_mul(acc, powers[key], d)
        for mu, c in acc.items():
            out[(mu, nu)] = c
    return out


def kleisli_compose(f: KleisliMat, g: KleisliMat, d: int) -> KleisliMat:
    """``g o f = g . f^!``, keeping input multisets of degree at most ``d``."""
    nus = {nu for nu, _ in g.coeffs}
    fp = promotion(f, nus, d)
    by_nu: dict = {}
    for (mu, nu), c in fp.items():
        by_nu.setdefault(nu, []).append((mu, c))
    out: dict = {}
    for (nu, z), gc in g.coeffs.items():
        for mu, c in by_nu.get(nu, ()):
            out[(mu, z)] = out.get((mu, z), ZERO) + gc * c
    return KleisliMat({k: v for k, v in out.items() if v}, d)


def der_kleisli(web: Iterable) -> KleisliMat:
    return KleisliMat(der(web), 1)


def nat_coalgebra(n: int, d: int) -> Mat:
    """``h_{k, mu} = 1`` iff ``mu = j[k]`` for some ``j <= d``, on the web ``{0..n-1}``."""
    return {(k, Multiset({k: j})): Fraction(1) for k in range(n) for j in range(d + 1)}


def basis(a: Hashable) -> Vec:
    return {a: Fraction(1)}
