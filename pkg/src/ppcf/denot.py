"""Denotational evaluator over truncated probabilistic coherence spaces.

A ground value is a sub-probability vector over ``{0 .. N-1}``; a value of
arrow type is a host function (memoized, since the semantics is
deterministic).  Least fixpoints are reached by iterating from bottom ``K``
times.  At ground type, when the body is affine in the recursion variable
(the shape of every rejection loop), the fixpoint is instead solved exactly
as a linear system, which recovers the infinite sum the iteration only
approaches.

Terms are compiled once into closures over environments (tuples, innermost
binder last) using the interned nameless form, so closed subterms such as
library functions are evaluated once per evaluator and their memo tables
are shared.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Optional, Sequence, Union

from .interpolate import SingularSystem, solve
from .operational import _step, as_node, fmt_fraction
from .syntax import NAT, Arrow, Node, PPCFError, Term, Type, canonical, typecheck


@dataclass(frozen=True)
class EvalConfig:
    trunc: int = 32
    fix_iters: int = 100
    mode: str = "exact"
    exact_ground_fix: bool = True

    def __post_init__(self):
        if self.trunc < 1:
            raise ValueError("trunc must be at least 1")
        if self.fix_iters < 0:
            raise ValueError("fix_iters must be nonnegative")
        if self.mode not in ("exact", "float"):
            raise ValueError("mode is 'exact' or 'float'")


class GroundDist:
    """Sub-probability vector of fixed length ``N``."""

    __slots__ = ("vec",)
    ty = NAT

    def __init__(self, vec: Sequence):
        self.vec = tuple(vec)

    def __getitem__(self, n: int):
        return self.vec[n] if 0 <= n < len(self.vec) else 0

    def __eq__(self, other) -> bool:
        return isinstance(other, GroundDist) and self.vec == other.vec

    def __hash__(self) -> int:
        return hash(self.vec)

    def total(self):
        return sum(self.vec)

    def __repr__(self) -> str:
        nz = {i: x for i, x in enumerate(self.vec) if x}
        return f"GroundDist({nz})"


class FuncValue:
    """Value of arrow type.  ``apply`` is memoized per argument."""

    __slots__ = ("ty", "fn", "ev", "memo", "source")

    def __init__(self, ty: Arrow, fn: Callable, ev: "Evaluator", source=None):
        self.ty = ty
        self.fn = fn
        self.ev = ev
        self.memo: dict = {}
        self.source = source

    def apply(self, arg: "SemValue") -> "SemValue":
        key = arg.vec if isinstance(arg, GroundDist) else id(arg)
        hit = self.memo.get(key)
        ev = self.ev
        if hit is not None:
            ev.dropped += hit[1]
            return hit[0]
        before = ev.dropped
        res = self.fn(arg)
        # the argument is kept alive so that id-based keys stay valid
        self.memo[key] = (res, ev.dropped - before, arg)
        return res

    __call__ = apply

    def __repr__(self) -> str:
        return f"<FuncValue : {self.ty}>"


SemValue = Union[GroundDist, FuncValue]


@lru_cache(maxsize=1 << 16)
def _mentions(t: Node, d: int) -> bool:
    """Does loose index ``d`` occur in ``t``?"""
    if t.fv <= d:
        return False
    tag = t.tag
    if tag == "var":
        return t.a == d
    if tag in ("succ", "fix"):
        return _mentions(t.a, d)
    if tag == "app":
        return _mentions(t.a, d) or _mentions(t.b, d)
    if tag == "lam":
        return _mentions(t.b, d + 1)
    if tag == "if":
        return _mentions(t.a, d) or _mentions(t.b, d) or _mentions(t.c, d + 1)
    return False


@lru_cache(maxsize=1 << 16)
def affine_in(t: Node, d: int) -> bool:
    """Syntactic check that ``t`` denotes an affine function of index ``d``."""
    if not _mentions(t, d):
        return True
    tag = t.tag
    if tag == "var":
        return True
    if tag == "succ":
        return affine_in(t.a, d)
    if tag == "if":
        return not _mentions(t.a, d) and affine_in(t.b, d) and affine_in(t.c, d + 1)
    return False


class Evaluator:
    """Holds the configuration, compiled code, caches and drop accounting.

    ``dropped`` adds up every mass cut off at the truncation boundary,
    counting a cut once per use of the value it came from.  It is therefore a
    conservative slack and may exceed 1.
    """

    def __init__(self, cfg: EvalConfig = EvalConfig()):
        self.cfg = cfg
        self.N = cfg.trunc
        if cfg.mode == "exact":
            self.zero, self.one, self.num = Fraction(0), Fraction(1), Fraction
        else:
            self.zero, self.one, self.num = 0.0, 1.0, float
        self.dropped = self.zero
        self.fix_delta = self.zero
        self._zero_vec = GroundDist([self.zero] * self.N)
        self._units = [GroundDist([self.one if i == n else self.zero for i in range(self.N)]) for n in range(self.N)]
        self._compiled: dict = {}
        self._closed: dict = {}
        self._bottoms: dict = {}

    # -- values -------------------------------------------------------------

    def unit(self, n: int) -> GroundDist:
        if n < self.N:
            return self._units[n]
        self.dropped += self.one
        return self._zero_vec

    def ground(self, vec: Union[Sequence, Mapping]) -> GroundDist:
        """GroundDist from a sequence or a sparse ``{n: p}`` map (truncating)."""
        out = [self.zero] * self.N
        items = vec.items() if isinstance(vec, Mapping) else enumerate(vec)
        for n, x in items:
            if n < self.N:
                out[n] = self.num(x)
            elif x:
                self.dropped += self.num(x)
        return GroundDist(out)

    def bottom(self, ty: Type) -> SemValue:
        if ty == NAT:
            return self._zero_vec
        b = self._bottoms.get(ty)
        if b is None:
            res = self.bottom(ty.cod)
            b = FuncValue(ty, lambda _arg: res, self, "bottom")
            self._bottoms[ty] = b
        return b

    def lincomb(self, pairs: Sequence[tuple], ty: Type) -> SemValue:
        pairs = [(c, v) for c, v in pairs if c]
        if not pairs:
            return self.bottom(ty)
        if ty == NAT:
            if len(pairs) == 1 and pairs[0][0] == 1:
                return pairs[0][1]
            out = [self.zero] * self.N
            for c, v in pairs:
                for i, x in enumerate(v.vec):
                    if x:
                        out[i] += c * x
            return GroundDist(out)
        if len(pairs) == 1 and pairs[0][0] == 1:
            return pairs[0][1]
        cod = ty.cod
        return FuncValue(ty, lambda arg: self.lincomb([(c, f.apply(arg)) for c, f in pairs], cod), self, "lincomb")

    def succ(self, v: GroundDist) -> GroundDist:
        vec = v.vec
        if vec[-1]:
            self.dropped += vec[-1]
        return GroundDist((self.zero,) + vec[:-1])

    # -- compilation ----------------------------------------------------------

    def compile(self, t: Node, ctx: tuple = ()) -> tuple[Callable, Type]:
        key = (t, ctx)
        hit = self._compiled.get(key)
        if hit is None:
            hit = self._compile(t, ctx)
            self._compiled[key] = hit
        return hit

    def _compile(self, t: Node, ctx: tuple) -> tuple[Callable, Type]:
        if t.fv == 0 and ctx:
            # closed subterm: compile without the context and share its value
            return self.compile(t, ())
        tag = t.tag
        if tag == "var":
            i = -1 - t.a
            return (lambda env: env[i]), ctx[i]
        if tag == "fvar":
            raise PPCFError(f"no value for free variable {t.a}")
        if tag == "num":
            n = t.a
            fn, ty = (lambda env: self.unit(n)), NAT
        elif tag == "coin":
            p = self.num(t.a)
            masses = {0: p, 1: self.one - p}
            fn, ty = (lambda env: self.ground(masses)), NAT
        elif tag == "succ":
            fa, _ = self.compile(t.a, ctx)
            fn, ty = (lambda env: self.succ(fa(env))), NAT
        elif tag == "if":
            fn, ty = self._compile_if(t, ctx)
        elif tag == "app":
            ff, tf = self.compile(t.a, ctx)
            fa, _ = self.compile(t.b, ctx)
            fn, ty = (lambda env: ff(env).apply(fa(env))), tf.cod
        elif tag == "lam":
            inner = ctx + (t.a,)
            fb, tb = self.compile(t.b, inner)
            ty = Arrow(t.a, tb)
            fn = lambda env: FuncValue(ty, lambda v: fb(env + (v,)), self, t)  # noqa: E731
        elif tag == "fix":
            fn, ty = self._compile_fix(t, ctx)
        else:
            raise AssertionError(tag)
        if t.fv == 0:
            fn = self._share(t, fn)
        return fn, ty

    def _share(self, t: Node, fn: Callable) -> Callable:
        def shared(env):
            hit = self._closed.get(t)
            if hit is not None:
                self.dropped += hit[1]
                return hit[0]
            before = self.dropped
            v = fn(())
            self._closed[t] = (v, self.dropped - before)
            return v

        return shared

    def _compile_if(self, t: Node, ctx: tuple):
        fs, _ = self.compile(t.a, ctx)
        fz, ty = self.compile(t.b, ctx)
        fr, _ = self.compile(t.c, ctx + (NAT,))
        units = self._units
        last = self.N - 1

        def fn(env):
            p = fs(env).vec
            pairs = []
            if p[0]:
                pairs.append((p[0], fz(env)))
            for n in range(last):
                c = p[n + 1]
                if c:
                    pairs.append((c, fr(env + (units[n],))))
            return self.lincomb(pairs, ty)

        return fn, ty

    def _compile_fix(self, t: Node, ctx: tuple):
        fb, tb = self.compile(t.a, ctx)
        if not isinstance(tb, Arrow) or tb.dom != tb.cod:
            raise PPCFError("fix expects a term of type s -> s")
        ty = tb.dom
        K = self.cfg.fix_iters
        if ty != NAT:
            def fn(env):
                f = fb(env)
                it = self.bottom(ty)
                for _ in range(K):
                    nxt = f.apply(it)
                    if nxt is it:
                        break
                    it = nxt
                return it

            return fn, ty
        solvable = (
            self.cfg.mode == "exact"
            and self.cfg.exact_ground_fix
            and t.a.tag == "lam"
            and affine_in(t.a.b, 0)
        )

        def fn(env):
            f = fb(env)
            if solvable:
                v = self._solve_affine(f)
                if v is not None:
                    return v
            return self._iterate(f, K)

        return fn, ty

    def _iterate(self, f: FuncValue, K: int) -> GroundDist:
        x = self._zero_vec
        for i in range(K):
            nx = f.apply(x)
            if nx.vec == x.vec:
                return x
            if i == K - 1:
                d = max(abs(a - b) for a, b in zip(nx.vec, x.vec))
                self.fix_delta = max(self.fix_delta, d)
            x = nx
        return x

    def _solve_affine(self, f: FuncValue) -> Optional[GroundDist]:
        """Least fixpoint of an affine ``f(x) = c + B x`` by exact elimination."""
        saved = self.dropped
        c = f.apply(self._zero_vec).vec
        cols = []
        for e in self._units:
            fe = f.apply(e).vec
            cols.append([a - b for a, b in zip(fe, c)])
        self.dropped = saved  # probes are not part of the computation proper
        # states reachable from the constant part; mass elsewhere stays 0
        reach, todo = set(), [i for i, x in enumerate(c) if x]
        while todo:
            i = todo.pop()
            if i in reach:
                continue
            reach.add(i)
            todo.extend(j for j, x in enumerate(cols[i]) if x and j not in reach)
        if not reach:
            return self._zero_vec
        idx = sorted(reach)
        a = [[(1 if r == s else 0) - cols[s][r] for s in idx] for r in idx]
        try:
            sol = solve(a, [c[r] for r in idx])
        except SingularSystem:
            return None
        out = [self.zero] * self.N
        for r, x in zip(idx, sol):
            out[r] = x
        if any(x < 0 for x in out):
            return None
        v = GroundDist(out)
        if f.apply(v).vec != v.vec:
            return None
        return v


# ---------------------------------------------------------------------------
# public API


def bottom(ty: Type, cfg: EvalConfig = EvalConfig()) -> SemValue:
    return Evaluator(cfg).bottom(ty)


def lincomb(pairs: Sequence[tuple], ty: Type = NAT, cfg: EvalConfig = EvalConfig(), ev: Optional[Evaluator] = None) -> SemValue:
    ev = ev or Evaluator(cfg)
    return ev.lincomb([(ev.num(c), v) for c, v in pairs], ty)


def _value_type(v: SemValue) -> Type:
    return v.ty


def eval_term(
    m: Union[Term, Node],
    env: Optional[Mapping[str, SemValue]] = None,
    cfg: EvalConfig = EvalConfig(),
    ev: Optional[Evaluator] = None,
) -> SemValue:
    """``[[m]]`` at the point ``env`` (a map from free variables to values)."""
    ev = ev or Evaluator(cfg)
    env = dict(env or {})
    names = list(env)
    tys = tuple(_value_type(v) for v in env.values())
    if isinstance(m, Node):
        node = m
    else:
        typecheck(list(zip(names, tys)), m)
        node = canonical(m, names)
    fn, _ = ev.compile(node, tys)
    return fn(tuple(env.values()))


eval = eval_term  # noqa: A001  (the name used throughout the docs)


def ground_dist(m: Union[Term, Node], cfg: EvalConfig = EvalConfig(), ev: Optional[Evaluator] = None) -> tuple:
    """The truncated ground denotation of a closed term of type nat."""
    v = eval_term(as_node(m), None, cfg, ev)
    if not isinstance(v, GroundDist):
        raise PPCFError("ground_dist expects a term of type nat")
    return v.vec


@dataclass
class DenotResult:
    vec: tuple
    dropped_mass: object
    last_fix_delta: object
    cfg: EvalConfig

    def to_json(self) -> dict:
        fmt = fmt_fraction if self.cfg.mode == "exact" else float
        total = sum(self.vec)
        return {
            "distribution": [{"value": n, "prob": fmt(p)} for n, p in enumerate(self.vec) if p],
            "residual": fmt(1 - total),
            "steps": self.cfg.fix_iters,
            "trunc": self.cfg.trunc,
            "dropped_mass": fmt(self.dropped_mass),
            "last_fix_delta": fmt(self.last_fix_delta),
        }


def evaluate_ground(m: Union[Term, Node], cfg: EvalConfig = EvalConfig(), probe: bool = True) -> DenotResult:
    """Ground denotation with diagnostics.

    ``last_fix_delta`` is the largest change of any coordinate between
    ``K - 1`` and ``K`` fixpoint iterations (0 when ``K`` is not binding).
    """
    node = as_node(m)
    ev = Evaluator(cfg)
    vec = ground_dist(node, cfg, ev)
    dropped = ev.dropped
    delta = ev.zero
    if probe and cfg.fix_iters > 0:
        prev = ground_dist(node, EvalConfig(cfg.trunc, cfg.fix_iters - 1, cfg.mode, cfg.exact_ground_fix))
        delta = max(abs(a - b) for a, b in zip(vec, prev))
    return DenotResult(vec, dropped, delta, cfg)


@dataclass
class InvarianceReport:
    lhs: tuple
    rhs: tuple
    discrepancy: object
    branches: int
    dropped_mass: object = 0

    @property
    def ok(self) -> bool:
        return self.discrepancy == 0


def check_invariance(m: Union[Term, Node], cfg: EvalConfig = EvalConfig(), ev: Optional[Evaluator] = None) -> InvarianceReport:
    """Compare ``[[m]]`` with ``sum_{m'} Red(m, m') [[m']]``."""
    node = as_node(m)
    ev = ev or Evaluator(cfg)
    ev.dropped = ev.zero
    lhs = ground_dist(node, cfg, ev)
    branches = _step(node)
    if not branches:
        rhs = lhs
    else:
        acc = [ev.zero] * cfg.trunc
        for br in branches:
            v = ground_dist(br.target, cfg, ev)
            p = ev.num(br.prob)
            for i, x in enumerate(v):
                acc[i] += p * x
        rhs = tuple(acc)
    disc = max(abs(a - b) for a, b in zip(lhs, rhs))
    return InvarianceReport(lhs, rhs, disc, len(branches), ev.dropped)


# ---------------------------------------------------------------------------
# closed forms of library functions


def _vec(u, n):
    u = list(u)[:n]
    return [Fraction(x) for x in u] + [Fraction(0)] * (n - len(u))


def closed_form(name: str, args: Sequence, n: int) -> tuple:
    """The textbook formula for a library function, restricted to ``{0..n-1}``.

    ``name`` is ``pred``, ``add``, ``exp``, ``cmp``, ``unif``, ``ran`` or one of
    the indexed families ``shift_k``, ``probe_k``, ``pprod_k``, ``pchoose_k``.
    """
    out = [Fraction(0)] * n
    base, _, k = name.partition("_")
    k = int(k) if k else None
    vs = [_vec(a, n) for a in args] if base != "ran" else []
    if base == "pred":
        (u,) = vs
        out[0] = u[0] + (u[1] if n > 1 else 0)
        for i in range(1, n - 1):
            out[i] = u[i + 1]
    elif base == "add":
        u, v = vs
        for m in range(n):
            out[m] = sum((u[i] * v[m - i] for i in range(m + 1)), Fraction(0))
    elif base == "exp":
        (u,) = vs
        for i in range(n):
            if 2**i < n:
                out[2**i] += u[i]
    elif base == "shift":
        (u,) = vs
        for i in range(n - k):
            out[k + i] = u[i]
    elif base == "cmp":
        u, v = vs
        le = sum((u[i] * v[j] for i in range(n) for j in range(n) if i <= j), Fraction(0))
        gt = sum((u[i] * v[j] for i in range(n) for j in range(n) if i > j), Fraction(0))
        out[0] = le
        if n > 1:
            out[1] = gt
    elif base == "probe":
        (u,) = vs
        out[0] = u[k] if k < n else Fraction(0)
    elif base == "pprod":
        prod = Fraction(1)
        for u in vs:
            prod *= u[0]
        out[0] = prod
    elif base == "pchoose":
        u, ws = vs[0], vs[1:]
        for i in range(k):
            for j in range(n):
                out[j] += u[i] * ws[i][j]
    elif base == "unif":
        (u,) = vs
        for m in range(n):
            for i in range(min(m + 1, n)):
                out[i] += u[m] / (m + 1)
    elif base == "ran":
        for i, p in enumerate(args[:n]):
            out[i] = Fraction(p)
    else:
        raise KeyError(f"no closed form for {name!r}")
    return tuple(out)


def library_term(name: str) -> Term:
    from . import stdlib

    base, _, k = name.partition("_")
    if base == "pchoose":
        return stdlib.pchoose(int(k), NAT)
    if base in ("shift", "probe", "pprod"):
        return getattr(stdlib, base)(int(k))
    if base == "exp":
        return stdlib.exp_()
    return getattr(stdlib, base)()


@dataclass
class ClosedFormReport:
    name: str
    rows: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r["equal"] for r in self.rows)


def closed_form_check(name: str, samples: Sequence, cfg: EvalConfig = EvalConfig()) -> ClosedFormReport:
    """Evaluate a library function on sample inputs and compare with its formula.

    Each sample is a tuple of argument vectors (a bare vector for one-argument
    functions).  For ``ran`` a sample is the probability list itself.
    """
    ev = Evaluator(cfg)
    rep = ClosedFormReport(name)
    for s in samples:
        if name == "ran":
            from .stdlib import ran

            got = ground_dist(ran(s), cfg, ev)
            args = list(s)
        else:
            args = list(s) if s and isinstance(s[0], (list, tuple, dict)) else [s]
            f = eval_term(library_term(name), None, cfg, ev)
            v = f
            for a in args:
                v = v.apply(ev.ground(a if isinstance(a, Mapping) else list(a)))
            got = v.vec
            args = [[a.get(i, 0) for i in range(cfg.trunc)] if isinstance(a, Mapping) else a for a in args]
        exp = closed_form(name, args, cfg.trunc)
        rep.rows.append({"sample": s, "got": got, "expected": exp, "equal": tuple(got) == exp})
    return rep
