"""Shared test terms."""

from fractions import Fraction

from ppcf import NAT, parse
from ppcf import stdlib as lib
from ppcf.syntax import Arrow, App, Coin, app

NN = Arrow(NAT, NAT)
HALF = Fraction(1, 2)

M1 = parse(r"\x:nat. if x then 0 else [z] fix (\y:nat. y)")
M2 = parse(r"\x:nat. if x then (if x then 0 else [z'] fix (\y:nat. y)) else [z] fix (\y:nat. y)")

# f(y) = 0 iff y = 2
LV_TEST = parse(r"\y:nat. if y then 1 else [a] if a then 1 else [b] if b then 0 else [c] 1")


def n(k):
    return lib.numeral(k)


def coin(p):
    return Coin(Fraction(p))


def terminating_corpus():
    """(name, closed ground term) pairs whose reduction always terminates."""
    out = [(f"pred {k}", App(lib.pred(), n(k))) for k in range(6)]
    out += [
        ("add 2 3", app(lib.add(), n(2), n(3))),
        ("exp 3", App(lib.exp_(), n(3))),
        ("cmp 2 5", app(lib.cmp(), n(2), n(5))),
        ("cmp 5 2", app(lib.cmp(), n(5), n(2))),
        ("cmp 2 2", app(lib.cmp(), n(2), n(2))),
        ("ran 1/2 1/4 1/4", lib.ran([HALF, Fraction(1, 4), Fraction(1, 4)])),
        ("pchoose 2 coin", app(lib.pchoose(2, NAT), coin(HALF), n(5), n(7))),
        ("pprod 2 coins", app(lib.pprod(2), coin(HALF), coin(Fraction(1, 3)))),
        ("probe 1 coin", App(lib.probe(1), coin(Fraction(1, 3)))),
        ("unift 2", App(lib.unift(), n(2))),
    ]
    return out


def las_vegas_term(bound=3):
    return app(lib.las_vegas(), LV_TEST, n(bound))


def full_corpus():
    """Terminating corpus plus programs that loop with positive probability."""
    return terminating_corpus() + [
        ("unif 3", App(lib.unif(), n(3))),
        ("las vegas", las_vegas_term()),
        ("omega", lib.omega(NAT)),
        ("ran 1/3", lib.ran([Fraction(1, 3)])),
        ("probe 2 on 1", App(lib.probe(2), n(1))),
        ("M1 coin", App(M1, coin(HALF))),
        ("M2 coin", App(M2, coin(HALF))),
    ]


class DrawSource:
    """Feed TermGen from hypothesis draws so failures shrink."""

    def __init__(self, data):
        from hypothesis import strategies as st

        self._st = st
        self.data = data

    def randint(self, lo, hi):
        return self.data.draw(self._st.integers(lo, hi))

    def choice(self, seq):
        return self.data.draw(self._st.sampled_from(list(seq)))
