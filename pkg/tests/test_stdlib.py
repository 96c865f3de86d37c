from fractions import Fraction as Q

import pytest

from helpers import NN, coin, las_vegas_term, n

from ppcf import NAT, Abs, App, Num, parse, pretty, typecheck
from ppcf import stdlib as lib
from ppcf.operational import explore
from ppcf.syntax import app, arrows, canonical, nat_power


def dist(t, k=500):
    d = explore(t, k)
    return d.numeral_masses(), d.residual


@pytest.mark.parametrize(
    "term, ty",
    [
        (lib.omega(NN), NN),
        (lib.pred(), NN),
        (lib.add(), nat_power(2)),
        (lib.shift(3), NN),
        (lib.drop(2), NN),
        (lib.exp_(), NN),
        (lib.cmp(), nat_power(2)),
        (lib.probe(2), NN),
        (lib.pprod(3), nat_power(3)),
        (lib.pchoose(2, NN), arrows(NAT, NN, NN, NN)),
        (lib.unift(), NN),
        (lib.unif(), NN),
        (lib.ran([Q(1, 2)]), NAT),
        (lib.las_vegas(), arrows(NN, NAT, NAT)),
    ],
)
def test_library_types(term, ty):
    assert typecheck((), term) == ty


def test_omega():
    assert dist(lib.omega(NAT), 100) == ({}, 1)


@pytest.mark.parametrize("k, want", [(0, 0), (1, 0), (3, 2), (5, 4)])
def test_pred(k, want):
    assert dist(App(lib.pred(), n(k))) == ({want: 1}, 0)


@pytest.mark.parametrize("a, b", [(2, 3), (0, 0), (4, 1)])
def test_add(a, b):
    assert dist(app(lib.add(), n(a), n(b))) == ({a + b: 1}, 0)


def test_shift():
    assert dist(App(lib.shift(2), n(3))) == ({5: 1}, 0)
    assert dist(App(lib.shift(0), n(3))) == ({3: 1}, 0)


def test_drop_lowers_and_kills_small_values():
    assert dist(App(lib.drop(2), n(5))) == ({3: 1}, 0)
    assert dist(App(lib.drop(2), n(1)), 200) == ({}, 1)
    assert dist(App(lib.drop(0), n(1))) == ({1: 1}, 0)


@pytest.mark.parametrize("k", [0, 1, 3, 4])
def test_exp(k):
    assert dist(App(lib.exp_(), n(k))) == ({2**k: 1}, 0)


@pytest.mark.parametrize("a, b, want", [(2, 5, 0), (5, 2, 1), (2, 2, 0), (0, 0, 0), (1, 0, 1)])
def test_cmp(a, b, want):
    assert dist(app(lib.cmp(), n(a), n(b))) == ({want: 1}, 0)


def test_probe():
    assert dist(App(lib.probe(1), coin(Q(1, 3)))) == ({0: Q(2, 3)}, Q(1, 3))
    assert dist(App(lib.probe(0), n(0))) == ({0: 1}, 0)
    assert dist(App(lib.probe(2), n(1)), 200) == ({}, 1)


def test_pprod():
    assert dist(app(lib.pprod(2), coin(Q(1, 2)), coin(Q(1, 2)))) == ({0: Q(1, 4)}, Q(3, 4))
    assert lib.pprod(0) == Num(0)
    assert dist(App(lib.pprod(1), n(0))) == ({0: 1}, 0)


def test_pchoose():
    assert dist(app(lib.pchoose(2, NAT), n(0), n(5), n(7))) == ({5: 1}, 0)
    assert dist(app(lib.pchoose(2, NAT), n(1), n(5), n(7))) == ({7: 1}, 0)
    assert dist(app(lib.pchoose(2, NAT), n(2), n(5), n(7)), 200) == ({}, 1)
    assert dist(App(lib.pchoose(0, NAT), n(0)), 200) == ({}, 1)


def test_let_shares_the_draw():
    t = lib.let_("x", coin(Q(1, 2)), app(lib.add(), parse("x"), parse("x")))
    assert dist(t) == ({0: Q(1, 2), 2: Q(1, 2)}, 0)
    beta = App(Abs("x", NAT, app(lib.add(), parse("x"), parse("x"))), coin(Q(1, 2)))
    assert dist(beta) == ({0: Q(1, 4), 1: Q(1, 2), 2: Q(1, 4)}, 0)
    assert dist(lib.let_("x", n(3), parse("x"))) == ({3: 1}, 0)


def test_unift():
    assert dist(App(lib.unift(), n(2))) == ({i: Q(1, 4) for i in range(4)}, 0)
    assert dist(App(lib.unift(), n(0))) == ({0: 1}, 0)
    # the argument is evaluated once
    assert dist(App(lib.unift(), coin(Q(1, 2)))) == ({0: Q(3, 4), 1: Q(1, 4)}, 0)


def test_unif():
    assert dist(App(lib.unif(), n(0))) == ({0: 1}, 0)
    masses, _ = dist(App(lib.unif(), n(2)))
    assert all(masses[i] >= Q(1, 3) - Q(1, 1000) for i in range(3))
    assert set(masses) == {0, 1, 2}


def test_ran():
    assert dist(lib.ran([Q(1, 2), Q(1, 4), Q(1, 4)])) == ({0: Q(1, 2), 1: Q(1, 4), 2: Q(1, 4)}, 0)
    assert lib.ran([1]) == Num(0)
    assert dist(lib.ran([Q(1, 3)]), 100) == ({0: Q(1, 3)}, Q(2, 3))
    assert dist(lib.ran([]), 100) == ({}, 1)
    assert dist(lib.ran([0, 0, 1]), 100) == ({2: 1}, 0)


def test_ran_rejects_overfull_lists():
    with pytest.raises(ValueError):
        lib.ran([Q(2, 3), Q(2, 3)])


def test_las_vegas_typechecks_and_runs():
    masses, residual = dist(las_vegas_term(), 500)
    assert set(masses) == {2} and 0 < masses[2] < 1


def test_build_from_cli_arguments():
    assert lib.build("shift", "2") == lib.shift(2)
    assert lib.build("ran", "1/2", "1/4") == lib.ran([Q(1, 2), Q(1, 4)])
    assert lib.build("pchoose", "2", "nat -> nat") == lib.pchoose(2, NN)
    with pytest.raises(KeyError):
        lib.build("nope")


@pytest.mark.parametrize("name", sorted(lib.REGISTRY))
def test_printed_library_terms_reparse(name):
    args = {"shift": ["1"], "drop": ["1"], "probe": ["1"], "pprod": ["2"], "pchoose": ["2", "nat"], "ran": ["1/2"], "omega": []}
    t = lib.build(name, *args.get(name, []))
    assert canonical(parse(pretty(t))) is canonical(t)
