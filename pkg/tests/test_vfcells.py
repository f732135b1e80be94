import random
from fractions import Fraction

import pytest

from motivic import presburger as pb
from motivic.constructible import ConstructibleFunction as CF
from motivic.errors import NotPrepared, TruncationTooShallow
from motivic.lefring import L, parse_element
from motivic.localoracle import LocalField, center_value, volume
from motivic.resfield import FiniteField
from motivic.vfcells import (
    Cell, Center, change_of_variables, check_fubini, integrate, integrate_cell, integrate_graph,
    linear_cell_decompose, parse_cells, value_of,
)
from motivic import formula as fm
from vf_fixtures import FIXTURES, TWO_VARIABLE


def cell(cond, center="0"):
    return Cell(Center.parse(center), fm.parse(f"rf eta; vg a; {cond}").body)


# ------------------------------------------------------------ centers

def test_center_arithmetic():
    c = Center.parse("3 + t^2")
    assert c.ord() == 0 and c.ac() == 3 and str(c) == "3 + t^2"
    inv = Center.from_ratio({0: 1}, {0: 1, 1: 1}, level=6)  # 1/(1+t)
    assert inv.terms == {k: (-1) ** k for k in range(6)}
    assert str(inv).endswith("O(t^6)")
    assert Center.from_ratio({0: 1}, {1: 2}).terms == {-1: Fraction(1, 2)}
    with pytest.raises(TruncationTooShallow):
        (inv - Center.from_ratio({0: 1, 7: 1}, {0: 1, 1: 1}, level=6)).ord()


# ------------------------------------------------------- integrate_cell

def test_integrate_cell_examples():
    for alpha in range(4):
        out = integrate_cell(cell(f"a = {alpha} & eta = 1"))
        assert out.to_lefschetz() == L ** (-alpha - 1)
    assert integrate_cell(cell("a >= 0 & eta != 0")).to_lefschetz() == 1
    weight = CF.exponential(-pb.Affine.var("a"), rf=("eta",), vg=("a",))
    out = integrate_cell(cell("a >= 0 & eta != 0"), weight)
    assert out.to_lefschetz() == parse_element("(1-L^-1)/(1-L^-2)")


def test_ball_additivity():
    # the q - 1 balls of a fixed radius fill the annulus
    for alpha in range(3):
        annulus = integrate_cell(cell(f"a = {alpha} & eta != 0")).to_lefschetz()
        assert annulus == (L - 1) * L ** (-alpha - 1)


def test_integrate_graph():
    assert integrate_graph("0").to_lefschetz() == 1
    assert integrate_graph("t^2", "ord(z)").to_lefschetz() == L ** -2
    assert integrate_graph("t", "ord(z)", "vf z; ord(z) >= 2").to_lefschetz() == 0


# ------------------------------------------------------- decomposition

def test_decompose_single_center():
    D = linear_cell_decompose(["0"], "vf x; ord(x) >= 0")
    assert len(D.cells) == 1
    assert fm.pretty_node(D.cells[0].cond) == "!(eta = 0) & a >= 0"


def test_decompose_text_roundtrip():
    D = linear_cell_decompose(["0", "1", "t"])
    again = parse_cells(D.text())
    assert [str(c.center) for c in again.cells] == ["0", "1", "t"]
    assert [c.cond for c in again.cells] == [c.cond for c in D.cells]


def _cells_hit(D, K, x, n):
    F = K.residue
    R = K.ring(n)
    hits = 0
    for c in D.cells:
        oa = R.ord_ac(R.sub(x, center_value(K, c.center.terms, n)))
        if oa is None:
            return None  # too close to a center to decide at this precision
        hits += c.holds(F, oa[1], oa[0])
    return hits


@pytest.mark.parametrize("centers", [["0"], ["0", "1"], ["0", "t"], ["0", "1", "t", "1 + t^2", "2"],
                                     ["1 + t", "t^3"]])
def test_decomposition_soundness(centers):
    D = linear_cell_decompose(centers)
    rng = random.Random(1)
    for p in (3, 5, 7):
        K = LocalField.qp(p)
        n = 6
        checked = 0
        while checked < 500:
            x = rng.randrange(p ** n)
            hits = _cells_hit(D, K, x, n)
            if hits is None:
                continue
            assert hits == 1, (p, x)
            checked += 1


def test_closest_center_identity():
    # for t in the cell of 0: ord(t - 1) = min(ord t, 0)
    D = linear_cell_decompose(["0", "1"])
    assert D.gaps[(0, 1)] == 0
    K, rng = LocalField.qp(5), random.Random(2)
    R = K.ring(6)
    for _ in range(200):
        x = rng.randrange(5 ** 6)
        o0, o1 = R.ord_ac(x), R.ord_ac(R.sub(x, 1))
        if o0 is None or o1 is None:
            continue
        if D.cells[0].holds(K.residue, o0[1], o0[0]):
            assert o1[0] == min(o0[0], 0)


def test_decomposition_in_laurent_field():
    D = linear_cell_decompose(["0", "t"])
    assert D.gaps[(0, 1)] == 1
    K = LocalField.laurent(3)
    rng = random.Random(3)
    checked = 0
    while checked < 200:
        x = tuple(rng.randrange(3) for _ in range(5))
        hits = _cells_hit(D, K, x, 5)
        if hits is not None:
            assert hits == 1
            checked += 1


# ------------------------------------------------------------ integrate

def test_integrate_examples():
    assert value_of(integrate("vf x, y; ord(x) >= 0 & ord(y) >= 0")) == 1
    phi = integrate("vg n; vf x; ord(x) >= n")
    K = LocalField.qp(5)
    for n in range(5):
        assert phi.value(FiniteField(5), (), (n,)) == Fraction(1, 5 ** n)
        assert volume(f"vf x; ord(x) >= {n}", K, n + 1).value == Fraction(1, 5 ** n)
    squares = integrate("vf x; ord(x) >= 0 & (exists rf w: w^2 = ac(x)) & ord(x) == 0 mod 2")
    assert squares.to_lefschetz() is None  # (q - 1)/2 is not a class polynomial
    assert squares.value(FiniteField(3)) == Fraction(3, 8)
    assert squares.value(FiniteField(5)) == Fraction(5, 12)


def test_integrate_weight():
    phi = integrate("vf x; ord(x) >= 0", "ord(x)")
    assert value_of(phi) == parse_element("(1-L^-1)/(1-L^-2)")


def test_not_prepared():
    with pytest.raises(NotPrepared):
        integrate("vf x; ord(x^2 - t) >= 1")
    with pytest.raises(NotPrepared):
        integrate("vf x, y; ord(x - y) >= 1")


@pytest.mark.parametrize("f,w", FIXTURES)
def test_specialization_matches_oracle(f, w):
    phi = integrate(f, w)
    for p in (3, 5, 7):
        res = volume(f, LocalField.qp(p), 3, w)
        assert res.status in ("exact", "tail-exact")
        assert phi.value(FiniteField(p)) == res.value


@pytest.mark.parametrize("f,w", TWO_VARIABLE)
def test_fubini(f, w):
    ok, (a, b) = check_fubini(f, w)
    assert ok
    assert value_of(a) is not None and value_of(a) == value_of(b)


# ----------------------------------------------------- change of variables

def test_change_of_variables():
    # the unit ball scaled by t is the ball of radius 1/q
    assert value_of(change_of_variables("t", "0", "vf s; ord(s) >= 1")) == L ** -1
    assert value_of(integrate("vf s; ord(s) >= 1")) == L ** -1
    # translation invariance
    assert value_of(change_of_variables("1", "1", "vf s; ord(s - 1) >= 2")) == L ** -2
    with_weight = change_of_variables("t", "0", "vf s; ord(s) >= 1", "ord(s)")
    assert value_of(with_weight) == value_of(integrate("vf s; ord(s) >= 1", "ord(s)"))
    with pytest.raises(NotPrepared):
        change_of_variables("1 + s", "0", "vf s; ord(s) >= 0")
