import random
from fractions import Fraction as Q

import pytest

from helpers import M1, M2, NN, coin

from ppcf import NAT, Abs, App, Hole, Num, PPCFError, parse, typecheck
from ppcf import stdlib as lib
from ppcf.denot import EvalConfig
from ppcf.fullabs import (
    ArrowPoint,
    NatPoint,
    NotFound,
    SeparationResult,
    Workbench,
    arity,
    check_one_coef,
    enumerate_web,
    extract_coefficient,
    grid,
    in_web,
    kappa_n,
    nlen,
    ntest,
    obs_distinguish,
    parse_point,
    phi,
    plen,
    point,
    ptest,
    separate,
    separation_context,
    web_size,
)
from ppcf.syntax import Arrow, app, arrows

CFG = EvalConfig(16, 50)
NN_N = Arrow(NN, NAT)
A0 = point(((0,), 0))


# --- web points --------------------------------------------------------------


def test_point_syntax_round_trip():
    a = parse_point("([([0],0), 1], 2)")
    assert a == ArrowPoint((NatPoint(1), A0), NatPoint(2))
    assert str(a) == "([1,([0],0)],2)"
    assert parse_point(str(a)) == a
    assert str(point(((0, 0), 1))) == "([0,0],1)"


def test_multiset_arguments_are_unordered():
    assert point(((1, 0), 2)) == point(((0, 1), 2))


def test_web_membership():
    assert in_web(A0, NN)
    assert not in_web(A0, NAT)
    assert not in_web(NatPoint(0), NN)
    with pytest.raises(PPCFError):
        ptest(A0, NAT)


def test_enumerate_web():
    assert enumerate_web(NAT, 2) == [NatPoint(0), NatPoint(1), NatPoint(2)]
    pts = enumerate_web(NN, 1)
    assert point(((), 0)) in pts and A0 in pts
    sizes = [len(enumerate_web(NN, s)) for s in range(4)]
    assert sizes == sorted(sizes) and sizes[-1] > sizes[0]
    assert enumerate_web(NN, 2) == enumerate_web(NN, 2)
    assert all(web_size(a) <= 2 for a in enumerate_web(NN_N, 2))


# --- arities and testing terms --------------------------------------------------


def test_arity_examples():
    assert (arity(NatPoint(7)).plen, arity(NatPoint(7)).nlen) == (0, 0)
    assert (plen(A0), nlen(A0)) == (0, 1)
    b = A0
    a = ArrowPoint((b,), NatPoint(1))
    assert (plen(a), nlen(a)) == (1, 1)


def test_kappa():
    assert kappa_n(A0) == 1
    assert kappa_n(point(((0, 0), 0))) == 2
    assert kappa_n(point(((0, 0, 1, 1, 1), 0))) == 12


def test_base_cases():
    assert ptest(NatPoint(3), NAT) == parse("\\xi:nat. 3")
    assert ntest(NatPoint(2), NAT) == Abs("xi", NAT, lib.probe(2))


@pytest.mark.parametrize("ty", [NAT, NN, NN_N, arrows(NAT, NAT, NAT)])
def test_testing_terms_are_well_typed(ty):
    for a in enumerate_web(ty, 2):
        assert typecheck((), ptest(a, ty)) == Arrow(NAT, ty)
        assert typecheck((), ntest(a, ty)) == arrows(NAT, ty, NAT)
        assert typecheck((), ptest(a, ty, "add")) == Arrow(NAT, ty)


def test_phi_examples():
    for q in (Q(0), Q(1, 3), Q(1)):
        assert phi(A0, NN, M1, {0: q}, CFG) == q
        assert phi(A0, NN, M2, {0: q}, CFG) == q**2


@pytest.mark.parametrize("ty, m", [(NN, lib.pred()), (NN, M2), (NN_N, parse("\\F:nat -> nat. F (F 0)"))])
def test_phi_ignores_parameters_beyond_nlen(ty, m):
    bench = Workbench(CFG)
    rng = random.Random(11)
    for a in enumerate_web(ty, 2):
        k = nlen(a)
        low = [Q(rng.randint(0, 3), 12) for _ in range(k)]
        rest = 1 - sum(low)
        base = bench.phi(a, ty, m, low)
        for _ in range(3):
            hi = {k + j: rest * Q(rng.randint(0, 4), 16) for j in range(3)}
            u = dict(enumerate(low)) | hi
            assert bench.phi(a, ty, m, u) == base


# --- coefficients -----------------------------------------------------------------


def test_extract_coefficient_examples():
    b = Workbench(CFG)
    assert extract_coefficient(M1, A0, NN, CFG, bench=b) == 1
    assert extract_coefficient(M2, A0, NN, CFG, bench=b) == 0
    assert extract_coefficient(M2, point(((0, 0), 0)), NN, CFG, bench=b) == 1
    assert extract_coefficient(lib.pred(), point(((1,), 0)), NN, CFG, bench=b) == 1
    assert extract_coefficient(lib.pred(), point(((2,), 1)), NN, CFG, bench=b) == 1
    assert extract_coefficient(lib.add(), point(((1,), ((2,), 3))), arrows(NAT, NAT, NAT), CFG, bench=b) == 1
    assert extract_coefficient(coin(Q(1, 3)), NatPoint(1), NAT, CFG) == Q(2, 3)


def test_extract_rejects_higher_order():
    with pytest.raises(PPCFError):
        extract_coefficient(parse("\\F:nat -> nat. F 0"), point(((((0,), 0),), 0)), NN_N, CFG)


def test_one_coefficient_examples():
    assert check_one_coef(A0, M1, NN, CFG).holds
    rep = check_one_coef(A0, M2, NN, CFG)
    assert rep.coefficient == rep.w_a == 0
    rep = check_one_coef(NatPoint(1), coin(Q(1, 3)), NAT, CFG)
    assert rep.coefficient == rep.w_a == Q(2, 3)


def test_repeated_arguments_scale_the_coefficient():
    rep = check_one_coef(point(((0, 0), 0)), M2, NN, CFG)
    assert (rep.coefficient, rep.w_a, rep.kappa) == (2, 1, 2)
    assert rep.holds_corrected and not rep.holds


@pytest.mark.parametrize("m", [M1, M2, lib.pred(), lib.probe(1), parse("\\x:nat. if coin(1/2) then x else [z] z")])
def test_corrected_identity_on_first_order_points(m):
    bench = Workbench(CFG)
    for a in enumerate_web(NN, 2):
        assert check_one_coef(a, m, NN, CFG, bench=bench).holds_corrected


def test_higher_order_coefficient_needs_down_shift():
    # a = ([([([0],0)],0)],0) at ((nat -> nat) -> nat) -> nat, with w_a = 1 for M = \F. F (\x. x)
    ty = Arrow(NN_N, NAT)
    a = parse_point("([([([0],0)],0)],0)")
    m = parse("\\F:(nat -> nat) -> nat. F (\\x:nat. x)")
    assert (plen(a), nlen(a)) == (1, 2)
    down = check_one_coef(a, m, ty, CFG, w_a=1)
    add = check_one_coef(a, m, ty, CFG, bench=Workbench(CFG, "add"), w_a=1)
    assert down.coefficient == 1
    assert add.coefficient == 0


# --- separation ---------------------------------------------------------------------


def test_grid():
    pts = list(grid(2, 2))
    assert pts[0] == (0, 0) and len(pts) == 6
    assert all(sum(p) <= 1 for p in pts)


def test_separate_m1_m2():
    res = separate(M1, M2, A0, NN, grid_denom=2, refinements=0, cfg=CFG)
    assert isinstance(res, SeparationResult)
    assert res.probs == [Q(1, 2)] and res.denot_diff == (Q(1, 2), Q(1, 4))
    assert obs_distinguish(M1, M2, res.context, 500) == (Q(1, 2), Q(1, 4))
    out = res.to_json()
    assert out["found"] and out["point"] == "([0],0)" and out["probs"] == ["1/2"]


def test_separate_same_term_is_not_found():
    res = separate(M1, M1, A0, NN, grid_denom=2, refinements=1, cfg=CFG)
    assert isinstance(res, NotFound) and res.grid_denoms == [2, 4]


def test_separate_coins_at_a_numeral():
    res = separate(coin(Q(1, 3)), coin(Q(1, 2)), NatPoint(0), NAT, cfg=CFG)
    assert res.probs == [] and res.denot_diff == (Q(1, 3), Q(1, 2))


def test_context_without_hole_gives_equal_observations():
    ctx = app(lib.pchoose(1, NAT), Num(0), Num(0))
    assert obs_distinguish(M1, M2, ctx, 50) == (1, 1)


def test_context_shape():
    ctx = separation_context(A0, NN, [Q(1, 2)])
    assert isinstance(ctx.arg, Hole) and ctx.arg.ty == NN


PAIRS = [
    (M1, M2, NN),
    (lib.pred(), parse("\\x:nat. if x then 0 else [z] if z then 1 else [w] w"), NN),
    (parse("\\x:nat. coin(1/2)"), parse("\\x:nat. if x then coin(1/2) else [z] coin(1/3)"), NN),
    (parse("\\F:nat -> nat. F 0"), parse("\\F:nat -> nat. F (F 0)"), NN_N),
]


@pytest.mark.parametrize("m, m2, ty", PAIRS)
def test_separation_soundness(m, m2, ty):
    for a in enumerate_web(ty, 2):
        res = separate(m, m2, a, ty, grid_denom=2, refinements=0, cfg=CFG)
        if isinstance(res, SeparationResult):
            x, y = obs_distinguish(m, m2, res.context, 600)
            assert x != y
            assert (x, y) == res.denot_diff
            return
    pytest.fail("no separating point found")


EQUAL_PAIRS = [
    (lib.pred(), parse("\\x:nat. if x then 0 else [z] z"), NN),
    (App(lib.add(), Num(1)), parse("\\x:nat. succ x"), NN),
    (parse("\\F:nat -> nat. F 0"), parse("\\G:nat -> nat. (\\y:nat. G y) 0"), NN_N),
]


@pytest.mark.parametrize("m, m2, ty", EQUAL_PAIRS)
def test_equal_denotations_are_never_separated(m, m2, ty):
    for a in enumerate_web(ty, 2):
        assert isinstance(separate(m, m2, a, ty, grid_denom=3, refinements=0, cfg=CFG), NotFound)
