import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from motivic.errors import NotSummable
from motivic.lefring import parse_element
from motivic.presburger import (
    Affine, ExponentialSum, PiecewiseAffineMap, PresburgerSet, decompose, feasible, guard_holds,
    ineq, make_guard, parse_set, parse_sum, vg_quantifier_eliminate,
)


def box(n, r):
    return itertools.product(range(-r, r + 1), repeat=n)


# ---------------------------------------------------------------- QE

def test_qe_examples():
    S = parse_set("exists vg m: i = 2*m")
    assert str(S) == "vg i; i == 0 mod 2"
    S = parse_set("exists vg m: (i = 3*m & m >= 1)")
    assert all(S.contains((i,)) == (i >= 3 and i % 3 == 0) for i in range(-20, 21))
    S = parse_set("forall vg m: (!(m >= 0) | i <= m)")
    assert str(S) == "vg i; -i >= 0"


def test_qe_forall_against_brute_force():
    # witness range [0, 10] suffices: the condition is monotone in m
    S = parse_set("forall vg m: (!(m >= 0) | i <= m)")
    for i in range(-10, 11):
        assert S.contains((i,)) == all(i <= m for m in range(0, 11))


@pytest.mark.parametrize("text,pred", [
    ("exists vg m: (i = 2*m + j & m <= 3)", lambda i, j: (i - j) % 2 == 0 and (i - j) // 2 <= 3),
    ("exists vg m: (2*m <= i & i <= 2*m + 1 & m == 1 mod 3)", lambda i, j: (i // 2) % 3 == 1),
    ("forall vg m: (!(0 <= m & m <= j) | i + m >= 2)", lambda i, j: j < 0 or i >= 2),
    ("exists vg m: (3*m >= i & 3*m <= j)", lambda i, j: any(i <= 3 * m <= j for m in range(-10, 11))),
])
def test_qe_pointwise(text, pred):
    S = parse_set(f"vg i, j; {text}")
    for i, j in box(2, 8):
        assert S.contains((i, j)) == pred(i, j), (i, j)


def test_complement_and_disjoint():
    S = parse_set("vg i, j; (i >= 0 & j >= i) | (i == 1 mod 3 & j <= 2) | i + j = 4")
    C = S.complement()
    D = S.disjoint()
    for p in box(2, 9):
        assert C.contains(p) != S.contains(p)
        hits = sum(guard_holds(g, dict(zip(S.vars, p))) for g in D.guards)
        assert hits == (1 if S.contains(p) else 0)


def test_feasibility():
    i, j = Affine.var("i"), Affine.var("j")
    assert not feasible(make_guard([ineq(i.scale(2) - 1), ineq(-i.scale(2) + 1)]))
    g = make_guard([ineq(i.scale(3) - j.scale(2)), ineq(j.scale(2) - i.scale(3)), ineq(i - 1), ineq(3 - i)])
    assert feasible(g)  # i = 2, j = 3
    assert PresburgerSet.empty(("i",)).is_empty()


# ------------------------------------------------------------ summation

L = parse_element("L")


@pytest.mark.parametrize("text,expected", [
    ("L^-i on i>=0", "1/(1-L^-1)"),
    ("L^-i on i>=0 & i == 0 mod 2", "1/(1-L^-2)"),
    ("i*L^-i on i>=0", "L^-1/((1-L^-1)(1-L^-1))"),
    ("L^-i on i>=0; L^i on i<0", "2/(1-L^-1)-1"),
    ("(L-1)*L^(-a-1) on a>=0", "1"),
    ("L^(-a-1) on a>=0", "L^-1/(1-L^-1)"),
])
def test_sum_examples(text, expected):
    assert parse_sum(text).sum() == parse_element(expected)


def test_cli_example_text():
    assert str(parse_sum("L^-i on i>=0").sum()) == "1/(1-L^-1)"


def test_summability_examples():
    assert parse_sum("L^-i on i>=0").is_summable()
    assert not parse_sum("L^i on i>=0").is_summable()
    assert parse_sum("i^3*L^(-2*i) on i>=0").is_summable()
    assert not parse_sum("1 on i>=0").is_summable()
    assert parse_sum("i^2 on 0<=i & i<=9").is_summable()
    with pytest.raises(NotSummable):
        parse_sum("L^(i-j) on i>=0 & j>=0").sum()


def test_finite_sums_are_faulhaber():
    assert parse_sum("i^2 on 1<=i & i<=10").sum() == 385
    assert parse_sum("i^3 on -3<=i & i<=4").sum() == sum(i ** 3 for i in range(-3, 5))
    s = parse_sum("L^i on 0<=i & i<=3").sum()
    assert s == parse_element("1+L+L^2+L^3")


FIXTURES = [
    "L^-i on i>=0",
    "i*L^-i on i>=0",
    "i^3*L^(-2*i) on i>=0",
    "L^(-2*i+j) on i>=0 & 0<=j & j<=i",
    "i*j*L^(-i-2*j) on i>=1 & j>=i-3 & j>=0",
    "L^(-i-j) on i>=0 & j>=0 & i+j == 1 mod 3",
    "j^2*L^(-3*i) on i>=0 & 2*j<=i & j>=0",
    "L^(-i/2) on i>=0 & i == 0 mod 2",
]


@pytest.mark.parametrize("text", FIXTURES)
def test_numerical_consistency(text):
    f = parse_sum(text)
    closed = f.sum()
    assert closed == f.sum(order=tuple(reversed(f.vars)))
    for q in (2, 3):
        diff = abs(float(closed.theta(q) - f.partial_sum(q, 60)))
        assert diff <= f.tail_bound(q, 60)


def test_piecewise_exponent():
    dom = PresburgerSet.universe(("i",))
    i = Affine.var("i")
    phi = PiecewiseAffineMap(dom, ((make_guard([ineq(i)]), -i), (make_guard([ineq(-i - 1)]), i)))
    f = ExponentialSum.build(dom, [(1, {(): 1}, phi)])
    assert f.sum() == parse_element("2/(1-L^-1)-1")
    assert f.sum().theta(3) == Fraction(2)
    assert phi.evaluate((-4,)) == -4
    with pytest.raises(ValueError):
        PiecewiseAffineMap(dom, ((make_guard([ineq(i)]), -i), (frozenset(), i)))


def test_degree_cap():
    with pytest.raises(ValueError):
        parse_sum("i^5*L^-i on i>=0")


@st.composite
def orthant_sums(draw, n):
    names = ["i", "j"][:n]
    lows = [draw(st.integers(-2, 2)) for _ in names]
    dom = " & ".join(f"{v} >= {lo}" for v, lo in zip(names, lows))
    if n == 2 and draw(st.booleans()):
        dom += f" & i + j == {draw(st.integers(0, 2))} mod {draw(st.integers(2, 3))}"
    terms = []
    for _ in range(draw(st.integers(1, 2))):
        c = draw(st.integers(-3, 3))
        mono = "*".join(f"{v}^{draw(st.integers(0, 2))}" for v in names)
        ex = " ".join(f"- {draw(st.integers(1, 3))}*{v}" for v in names)
        terms.append(f"{c}*{mono}*L^({draw(st.integers(-1, 1))} {ex})")
    return " + ".join(terms), dom


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 2).flatmap(lambda n: st.tuples(orthant_sums(n), orthant_sums(n))))
def test_linearity_and_additivity(pair):
    a, b = pair
    fa, fb = parse_sum(f"{a[0]} on {a[1]}"), parse_sum(f"{b[0]} on {b[1]}")
    assert (fa + fb).sum() == fa.sum() + fb.sum()
    # split a domain in two disjoint halves
    left = parse_sum(f"{a[0]} on {a[1]} & i <= 1")
    right = parse_sum(f"{a[0]} on {a[1]} & i >= 2")
    assert left.sum() + right.sum() == fa.sum()


# ------------------------------------------------------------ decompose

def test_decompose_examples():
    R = decompose(parse_set("i >= 0"))
    assert len(R) == 1 and R[0].base == (0,) and R[0].gens == ((1,),) and R[0].ranges == (None,)
    R = decompose(parse_set("i >= 1 & i == 0 mod 2"))
    assert len(R) == 1 and R[0].base == (2,) and R[0].gens == ((2,),)


@pytest.mark.parametrize("text", [
    "0 <= i & i <= j",
    "0 <= i & i <= j & j <= 5",
    "i != 3",
    "i + j == 0 mod 2 & i >= -2",
    "0 <= i & i <= 2*j & j <= 3*i + 1",
    "(i >= 0 & j >= i) | (i == 1 mod 3 & j <= 2)",
    "vg i, j, k; i >= 0 & j >= 0 & k >= 0 & i + j <= k",
    "vg i, j, k; 0 <= i & i <= j & j <= k & k <= 2*i + 3",
])
def test_decompose_partition(text):
    S = parse_set(text)
    regions = decompose(S)
    r = 15 if S.dimension < 3 else 7
    for p in box(S.dimension, r):
        assert sum(R.contains(p) for R in regions) == (1 if S.contains(p) else 0), p
