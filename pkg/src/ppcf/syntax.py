"""Terms, types and contexts of probabilistic PCF.

Named terms are the user-facing representation (parser, pretty-printer,
typing, substitution).  :func:`canonical` maps a term to an interned
nameless form in which alpha-equivalent terms are the *same object*; the
operational machinery works exclusively on that form.
"""

from __future__ import annotations

import re
import weakref
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence, Union


class PPCFError(Exception):
    """Base class for domain errors (bad syntax, ill-typed terms)."""


class ParseError(PPCFError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.msg = msg
        self.line = line
        self.col = col


class TypingError(PPCFError):
    pass


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class Nat:
    def __str__(self) -> str:
        return "nat"


@dataclass(frozen=True)
class Arrow:
    dom: "Type"
    cod: "Type"

    def __str__(self) -> str:
        left = f"({self.dom})" if isinstance(self.dom, Arrow) else str(self.dom)
        return f"{left} -> {self.cod}"


Type = Union[Nat, Arrow]
NAT = Nat()


def arrows(*tys: Type) -> Type:
    """``arrows(a, b, c)`` is ``a -> b -> c``."""
    out = tys[-1]
    for t in reversed(tys[:-1]):
        out = Arrow(t, out)
    return out


def nat_power(k: int, result: Type = NAT) -> Type:
    """The type ``nat -> ... -> nat -> result`` with ``k`` arguments."""
    return arrows(*([NAT] * k), result)


def arg_types(ty: Type) -> list[Type]:
    out = []
    while isinstance(ty, Arrow):
        out.append(ty.dom)
        ty = ty.cod
    return out


# ---------------------------------------------------------------------------
# terms


@dataclass(frozen=True)
class Num:
    n: int

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("numerals are natural numbers")


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Succ:
    arg: "Term"


@dataclass(frozen=True)
class If:
    cond: "Term"
    zero: "Term"
    var: str
    succ: "Term"


@dataclass(frozen=True)
class Abs:
    var: str
    annot: Type
    body: "Term"


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Coin:
    p: Fraction

    def __post_init__(self):
        p = Fraction(self.p)
        if not 0 <= p <= 1:
            raise ValueError(f"coin probability {p} outside [0,1]")
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class Fix:
    body: "Term"


@dataclass(frozen=True)
class Hole:
    """Hole of an observation context, filled by terms typed ``ctx |- ty``."""

    ctx: tuple[tuple[str, Type], ...]
    ty: Type


Term = Union[Num, Var, Succ, If, Abs, App, Coin, Fix, Hole]


def app(f: Term, *args: Term) -> Term:
    for a in args:
        f = App(f, a)
    return f


def lam(params: Sequence[tuple[str, Type]], body: Term) -> Term:
    for x, ty in reversed(params):
        body = Abs(x, ty, body)
    return body


def subterms(t: Term) -> Iterator[Term]:
    yield t
    for c in children(t):
        yield from subterms(c)


def children(t: Term) -> tuple[Term, ...]:
    if isinstance(t, Succ):
        return (t.arg,)
    if isinstance(t, If):
        return (t.cond, t.zero, t.succ)
    if isinstance(t, Abs):
        return (t.body,)
    if isinstance(t, App):
        return (t.fun, t.arg)
    if isinstance(t, Fix):
        return (t.body,)
    return ()


def free_vars(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, Abs):
        return free_vars(t.body) - {t.var}
    if isinstance(t, If):
        return free_vars(t.cond) | free_vars(t.zero) | (free_vars(t.succ) - {t.var})
    if isinstance(t, Hole):
        return frozenset(x for x, _ in t.ctx)
    out: frozenset[str] = frozenset()
    for c in children(t):
        out |= free_vars(c)
    return out


def _all_names(t: Term) -> set[str]:
    names = set()
    for s in subterms(t):
        if isinstance(s, Var):
            names.add(s.name)
        elif isinstance(s, Abs):
            names.add(s.var)
        elif isinstance(s, If):
            names.add(s.var)
    return names


def fresh(base: str, avoid) -> str:
    name = base
    while name in avoid:
        name += "'"
    return name


def subst(m: Term, n: Term, x: str) -> Term:
    """Capture-avoiding substitution ``m[n/x]``."""
    fv_n = free_vars(n)

    def go(t: Term) -> Term:
        if isinstance(t, Var):
            return n if t.name == x else t
        if isinstance(t, (Num, Coin)):
            return t
        if isinstance(t, Succ):
            return Succ(go(t.arg))
        if isinstance(t, App):
            return App(go(t.fun), go(t.arg))
        if isinstance(t, Fix):
            return Fix(go(t.body))
        if isinstance(t, Abs):
            y, body = _binder(t.var, t.body)
            return t if y is None else Abs(y, t.annot, body)
        if isinstance(t, If):
            z, succ = _binder(t.var, t.succ)
            if z is None:
                z, succ = t.var, t.succ
            return If(go(t.cond), go(t.zero), z, succ)
        if isinstance(t, Hole):
            raise PPCFError("cannot substitute into an observation context")
        raise TypeError(t)

    def _binder(y: str, body: Term):
        # returns (None, None) when the binder shadows x
        if y == x:
            return None, None
        if y in fv_n and x in free_vars(body):
            y2 = fresh(y, fv_n | free_vars(body) | {x})
            body = subst(body, Var(y2), y)
            y = y2
        return y, go(body)

    return go(m)


# ---------------------------------------------------------------------------
# typing

Context = Sequence[tuple[str, Type]]


def _lookup(ctx: Context, x: str) -> Optional[Type]:
    for name, ty in reversed(ctx):
        if name == x:
            return ty
    return None


def typecheck(ctx: Context, m: Term, _fix_types: Optional[dict] = None) -> Type:
    """Return the unique type of ``m`` under ``ctx`` or raise TypingError.

    Holes are rejected here; see :func:`typecheck_context`.
    """
    return _Checker(_fix_types).check(list(ctx), m)


class _Checker:
    def __init__(self, fix_types=None, hole=None):
        self.fix_types = fix_types
        self.hole = hole  # (Delta, tau) signature, or None for plain terms

    def check(self, ctx: list, m: Term) -> Type:
        if isinstance(m, Num):
            return NAT
        if isinstance(m, Coin):
            return NAT
        if isinstance(m, Var):
            ty = _lookup(ctx, m.name)
            if ty is None:
                raise TypingError(f"unbound variable {m.name}")
            return ty
        if isinstance(m, Succ):
            self._expect_nat(ctx, m.arg, "argument of succ")
            return NAT
        if isinstance(m, If):
            self._expect_nat(ctx, m.cond, "scrutinee of if")
            t0 = self.check(ctx, m.zero)
            t1 = self.check(ctx + [(m.var, NAT)], m.succ)
            if t0 != t1:
                raise TypingError(f"branches of if have types {t0} and {t1}")
            return t0
        if isinstance(m, Abs):
            return Arrow(m.annot, self.check(ctx + [(m.var, m.annot)], m.body))
        if isinstance(m, App):
            tf = self.check(ctx, m.fun)
            if not isinstance(tf, Arrow):
                raise TypingError(f"applying a term of non-arrow type {tf}")
            ta = self.check(ctx, m.arg)
            if ta != tf.dom:
                raise TypingError(f"argument has type {ta}, expected {tf.dom}")
            return tf.cod
        if isinstance(m, Fix):
            tf = self.check(ctx, m.body)
            if not isinstance(tf, Arrow) or tf.dom != tf.cod:
                raise TypingError(f"fix expects a term of type s -> s, got {tf}")
            if self.fix_types is not None:
                self.fix_types[id(m)] = tf.dom
            return tf.dom
        if isinstance(m, Hole):
            if self.hole is None:
                raise TypingError("hole outside an observation context")
            delta = list(m.ctx)
            if self.hole[0] is not None and (tuple(delta), m.ty) != self.hole[0]:
                raise TypingError("holes of a context must share one signature")
            if len(delta) > len(ctx) or list(ctx[len(ctx) - len(delta):]) != delta:
                raise TypingError("hole context is not a suffix of the enclosing context")
            self.hole[0] = (tuple(delta), m.ty)
            return m.ty
        raise TypeError(m)

    def _expect_nat(self, ctx, m, what):
        ty = self.check(ctx, m)
        if ty != NAT:
            raise TypingError(f"{what} has type {ty}, expected nat")


def typecheck_context(ctx: Context, c: Term) -> tuple[Optional[tuple], Type]:
    """Type an observation context.

    Returns ``(signature, type)`` where ``signature`` is ``(Delta, tau)`` for
    the holes of ``c`` (``None`` when ``c`` has no hole).
    """
    box = [None]
    ty = _Checker(hole=box).check(list(ctx), c)
    return box[0], ty


def fill(c: Term, m: Term) -> Term:
    """Replace every hole of ``c`` by ``m``; free variables of ``m`` may be captured."""
    sig, _ = typecheck_context((), c)
    if sig is not None:
        delta, tau = sig
        got = typecheck(delta, m)
        if got != tau:
            raise TypingError(f"hole expects type {tau}, term has type {got}")

    def go(t: Term) -> Term:
        if isinstance(t, Hole):
            return m
        if isinstance(t, Succ):
            return Succ(go(t.arg))
        if isinstance(t, If):
            return If(go(t.cond), go(t.zero), t.var, go(t.succ))
        if isinstance(t, Abs):
            return Abs(t.var, t.annot, go(t.body))
        if isinstance(t, App):
            return App(go(t.fun), go(t.arg))
        if isinstance(t, Fix):
            return Fix(go(t.body))
        return t

    return go(c)


# ---------------------------------------------------------------------------
# canonical nameless form


class Node:
    """Interned de Bruijn term.  Structural equality coincides with identity.

    ``fv`` is one more than the largest loose bound index (0 when the node
    has no loose indices); it lets substitution skip closed subtrees.
    """

    __slots__ = ("tag", "a", "b", "c", "hint", "fv", "size", "_step", "__weakref__")

    def __repr__(self) -> str:
        return f"<{pretty(to_term(self)) if self.fv == 0 else self.tag}>"


_interned: "weakref.WeakValueDictionary[tuple, Node]" = weakref.WeakValueDictionary()


def _node(tag: str, a=None, b=None, c=None, hint: str = "") -> Node:
    key = (tag, a, b, c)
    found = _interned.get(key)
    if found is not None:
        return found
    nd = Node()
    nd.tag, nd.a, nd.b, nd.c, nd.hint = tag, a, b, c, hint
    nd._step = None
    if tag == "var":
        nd.fv, nd.size = a + 1, 1
    elif tag in ("num", "coin", "fvar"):
        nd.fv, nd.size = 0, 1
    elif tag in ("succ", "fix"):
        nd.fv, nd.size = a.fv, a.size + 1
    elif tag == "app":
        nd.fv, nd.size = max(a.fv, b.fv), a.size + b.size + 1
    elif tag == "lam":
        nd.fv, nd.size = max(b.fv - 1, 0), b.size + 1
    elif tag == "if":
        nd.fv = max(a.fv, b.fv, c.fv - 1, 0)
        nd.size = a.size + b.size + c.size + 1
    else:
        raise ValueError(tag)
    _interned[key] = nd
    return nd


def n_num(n: int) -> Node:
    return _node("num", n)


def n_var(i: int) -> Node:
    return _node("var", i)


def n_succ(t: Node) -> Node:
    return _node("succ", t)


def n_app(f: Node, x: Node) -> Node:
    return _node("app", f, x)


def n_fix(t: Node) -> Node:
    return _node("fix", t)


def n_lam(ty: Type, body: Node, hint: str = "x") -> Node:
    return _node("lam", ty, body, hint=hint)


def n_if(s: Node, z: Node, r: Node, hint: str = "z") -> Node:
    return _node("if", s, z, r, hint=hint)


def n_coin(p: Fraction) -> Node:
    return _node("coin", Fraction(p))


def canonical(m: Term, names: Sequence[str] = ()) -> Node:
    """Nameless form of ``m``; ``names`` lists the enclosing binders, innermost last."""
    scope = list(names)

    def go(t: Term) -> Node:
        if isinstance(t, Num):
            return n_num(t.n)
        if isinstance(t, Coin):
            return n_coin(t.p)
        if isinstance(t, Var):
            for i in range(len(scope) - 1, -1, -1):
                if scope[i] == t.name:
                    return n_var(len(scope) - 1 - i)
            return _node("fvar", t.name)
        if isinstance(t, Succ):
            return n_succ(go(t.arg))
        if isinstance(t, App):
            return n_app(go(t.fun), go(t.arg))
        if isinstance(t, Fix):
            return n_fix(go(t.body))
        if isinstance(t, Abs):
            scope.append(t.var)
            body = go(t.body)
            scope.pop()
            return n_lam(t.annot, body, t.var)
        if isinstance(t, If):
            s, z = go(t.cond), go(t.zero)
            scope.append(t.var)
            r = go(t.succ)
            scope.pop()
            return n_if(s, z, r, t.var)
        raise PPCFError(f"cannot canonicalize {type(t).__name__}")

    return go(m)


def to_term(nd: Node) -> Term:
    """Named term for a nameless node, reusing binder hints where possible."""
    scope: list[str] = []

    def go(t: Node) -> Term:
        tag = t.tag
        if tag == "num":
            return Num(t.a)
        if tag == "coin":
            return Coin(t.a)
        if tag == "var":
            return Var(scope[len(scope) - 1 - t.a])
        if tag == "fvar":
            return Var(t.a)
        if tag == "succ":
            return Succ(go(t.a))
        if tag == "app":
            return App(go(t.a), go(t.b))
        if tag == "fix":
            return Fix(go(t.a))
        if tag == "lam":
            x = fresh(t.hint or "x", scope)
            scope.append(x)
            body = go(t.b)
            scope.pop()
            return Abs(x, t.a, body)
        if tag == "if":
            s, z = go(t.a), go(t.b)
            v = fresh(t.hint or "z", scope)
            scope.append(v)
            r = go(t.c)
            scope.pop()
            return If(s, z, v, r)
        raise ValueError(tag)

    return go(nd)


def alpha_eq(m: Term, n: Term) -> bool:
    return canonical(m) is canonical(n)


# ---------------------------------------------------------------------------
# concrete syntax

KEYWORDS = {"fix", "if", "then", "else", "let", "in", "succ", "coin", "nat"}

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>[0-9]+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<arrow>->|→)
  | (?P<sym>[\\λ:.()\[\]=/])
    """,
    re.VERBOSE,
)


@dataclass
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind, s = m.lastgroup, m.group()
        if kind != "ws":
            if kind == "ident" and s in KEYWORDS:
                kind = "kw"
            elif kind == "sym" and s == "λ":
                s = "\\"
            toks.append(_Tok(kind, s, line, col))
        for ch in s:
            if ch == "\n":
                line, col = line + 1, 1
            else:
                col += 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, col))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: Optional[_Tok] = None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind in ("kw", "sym", "arrow"):
            self.i += 1
            return True
        return False

    def expect(self, text: str):
        if not self.accept(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")

    def ident(self) -> str:
        if self.tok.kind != "ident":
            self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        s = self.tok.text
        self.i += 1
        return s

    def number(self) -> int:
        if self.tok.kind != "num":
            self.error("expected a natural number")
        n = int(self.tok.text)
        self.i += 1
        return n

    # type := atype ("->" type)?
    def type_(self) -> Type:
        if self.accept("("):
            left = self.type_()
            self.expect(")")
        elif self.accept("nat"):
            left = NAT
        else:
            self.error("expected a type")
        if self.accept("->") or self.accept("→"):
            return Arrow(left, self.type_())
        return left

    def term(self) -> Term:
        if self.accept("\\"):
            x = self.ident()
            self.expect(":")
            ty = self.type_()
            self.expect(".")
            return Abs(x, ty, self.term())
        if self.accept("fix"):
            return Fix(self.term())
        if self.accept("if"):
            c = self.term()
            self.expect("then")
            z = self.term()
            self.expect("else")
            self.expect("[")
            v = self.ident()
            self.expect("]")
            return If(c, z, v, self.term())
        if self.accept("let"):
            x = self.ident()
            self.expect("=")
            m = self.term()
            self.expect("in")
            return let_in(x, m, self.term())
        return self.application()

    def _starts_atom(self) -> bool:
        t = self.tok
        return t.kind in ("num", "ident") or (t.kind == "kw" and t.text in ("succ", "coin")) or (
            t.kind == "sym" and t.text == "("
        )

    def application(self) -> Term:
        if not self._starts_atom():
            self.error(f"expected a term, found {self.tok.text or 'end of input'!r}")
        f = self.atom()
        while self._starts_atom():
            f = App(f, self.atom())
        return f

    def atom(self) -> Term:
        t = self.tok
        if t.kind == "num":
            return Num(self.number())
        if t.kind == "ident":
            return Var(self.ident())
        if self.accept("succ"):
            if not self._starts_atom():
                self.error("succ expects an argument")
            return Succ(self.atom())
        if self.accept("coin"):
            self.expect("(")
            start = self.tok
            p = self.rational()
            if not 0 <= p <= 1:
                self.error(f"probability {p} outside [0,1]", start)
            self.expect(")")
            return Coin(p)
        if self.accept("("):
            m = self.term()
            self.expect(")")
            return m
        self.error("expected an atom")

    def rational(self) -> Fraction:
        start = self.tok
        num = self.number()
        if self.accept("/"):
            den = self.number()
            if den == 0:
                self.error("zero denominator", start)
            return Fraction(num, den)
        return Fraction(num)


def parse(text: str) -> Term:
    p = _Parser(text)
    m = p.term()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return m


def parse_type(text: str) -> Type:
    p = _Parser(text)
    ty = p.type_()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return ty


def let_in(x: str, m: Term, n: Term) -> Term:
    """CBV let on integers: ``if(m, n[0/x], z. n[succ z/x])``."""
    z = fresh("z", free_vars(n) | {x})
    return If(m, subst(n, Num(0), x), z, subst(n, Succ(Var(z)), x))


def _fmt_rational(p: Fraction) -> str:
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


def pretty(m: Term) -> str:
    """Concrete syntax accepted by :func:`parse`."""
    if isinstance(m, Abs):
        return f"\\{m.var}:{m.annot}. {pretty(m.body)}"
    if isinstance(m, Fix):
        return f"fix {pretty(m.body)}"
    if isinstance(m, If):
        return f"if {pretty(m.cond)} then {pretty(m.zero)} else [{m.var}] {pretty(m.succ)}"
    return _pretty_app(m)


def _pretty_app(m: Term) -> str:
    if isinstance(m, App):
        return f"{_pretty_app(m.fun)} {_pretty_atom(m.arg)}"
    return _pretty_atom(m)


def _pretty_atom(m: Term) -> str:
    if isinstance(m, Num):
        return str(m.n)
    if isinstance(m, Var):
        return m.name
    if isinstance(m, Coin):
        return f"coin({_fmt_rational(m.p)})"
    if isinstance(m, Succ):
        return f"succ {_pretty_atom(m.arg)}"
    if isinstance(m, Hole):
        return "[]"
    return f"({pretty(m)})"
