"""Exact polynomial interpolation over rational tensor grids."""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from typing import Callable, Sequence


class SingularSystem(ArithmeticError):
    pass


class DegreeBoundExceeded(ArithmeticError):
    pass


def solve(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> list[Fraction]:
    """Solve the square system ``a x = b`` exactly by Gauss-Jordan elimination."""
    n = len(a)
    m = [list(map(Fraction, row)) + [Fraction(v)] for row, v in zip(a, b)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            raise SingularSystem(f"no pivot in column {col}")
        m[col], m[pivot] = m[pivot], m[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n] for row in m]


def vandermonde_solve(xs: Sequence[Fraction], ys: Sequence[Fraction]) -> list[Fraction]:
    """Coefficients ``c`` (lowest degree first) with ``sum_j c_j x^j = y`` at each node."""
    if len(set(xs)) != len(xs):
        raise SingularSystem("interpolation nodes must be distinct")
    return solve([[x**j for j in range(len(xs))] for x in xs], ys)


def interpolate_grid(
    f: Callable[[tuple], Fraction], axes: Sequence[Sequence[Fraction]]
) -> dict[tuple, Fraction]:
    """Coefficients of the polynomial of degree ``< len(axis)`` in each variable
    that agrees with ``f`` on the tensor grid ``axes[0] x axes[1] x ...``.

    Returns ``{exponent tuple: coefficient}`` without zero entries.  The
    solve is done one axis at a time, so only 1-D Vandermonde systems occur.
    """
    if not axes:
        return {(): Fraction(f(()))}
    shape = [len(ax) for ax in axes]
    values = {idx: Fraction(f(tuple(axes[i][j] for i, j in enumerate(idx)))) for idx in product(*map(range, shape))}
    for dim, ax in enumerate(axes):
        # precompute the inverse action once per axis by solving unit systems
        inv = [vandermonde_solve(ax, [Fraction(int(i == k)) for i in range(len(ax))]) for k in range(len(ax))]
        nxt = {}
        others = [range(s) for s in shape[:dim]] + [range(1)] + [range(s) for s in shape[dim + 1:]]
        for base in product(*others):
            line = [values[base[:dim] + (j,) + base[dim + 1:]] for j in range(len(ax))]
            for e in range(len(ax)):
                nxt[base[:dim] + (e,) + base[dim + 1:]] = sum(
                    (inv[k][e] * line[k] for k in range(len(ax))), Fraction(0)
                )
        values = nxt
    return {k: v for k, v in values.items() if v}


def evaluate_poly(coeffs: dict[tuple, Fraction], point: Sequence[Fraction]) -> Fraction:
    out = Fraction(0)
    for exps, c in coeffs.items():
        term = c
        for x, e in zip(point, exps):
            term *= x**e
        out += term
    return out


def interpolate_checked(
    f: Callable[[tuple], Fraction],
    axes: Sequence[Sequence[Fraction]],
    checks: Sequence[Sequence[Fraction]],
) -> dict[tuple, Fraction]:
    """:func:`interpolate_grid` plus a residual test at ``checks``.

    Raises :class:`DegreeBoundExceeded` when ``f`` disagrees with the
    interpolant at a check point, i.e. ``f`` has higher degree than the grid
    can represent.
    """
    coeffs = interpolate_grid(f, axes)
    for pt in checks:
        pt = tuple(Fraction(x) for x in pt)
        if evaluate_poly(coeffs, pt) != Fraction(f(pt)):
            raise DegreeBoundExceeded(f"residual at {pt}; raise the degree bound")
    return coeffs
