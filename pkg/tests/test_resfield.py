import itertools

import pytest
from hypothesis import given, settings, strategies as st

from motivic import formula as fm
from motivic.errors import BudgetExceeded, SignatureMismatch
from motivic.lefring import L
from motivic.resfield import (
    FiniteField, ResidueClass, chevalley_warning_check, classes_agree, is_irreducible,
    nontrivial_zero, parse_field,
)

F3, F5, F7 = FiniteField(3), FiniteField(5), FiniteField(7)
SMALL = [parse_field(f"F{q}") for q in (2, 3, 4, 5, 7, 8, 9)]


def test_field_axioms_small_fields():
    for F in SMALL:
        els = list(F.elements())
        for a in els:
            assert F.add(a, F.neg(a)) == 0
            if a:
                assert F.mul(a, F.inv(a)) == 1
        for a, b, c in itertools.islice(itertools.product(els, repeat=3), 400):
            assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
        # the multiplicative group is cyclic of order q - 1
        assert all(F.pow(a, F.q - 1) == 1 for a in els if a)


def test_field_spec_parsing():
    F = parse_field("Fq(p=5,e=2,mod=[2,0,1])")
    assert F.q == 25 and F.modulus == (2, 0, 1)
    assert parse_field(F.spec()) == F
    assert parse_field("F7").q == 7 and parse_field("Fq(p=3,e=1)").q == 3
    with pytest.raises(ValueError):
        parse_field("Fq(p=5,e=2,mod=[1,0,1])")  # x^2 + 1 splits mod 5
    with pytest.raises(SyntaxError):
        parse_field("F6")
    assert is_irreducible([1, 1, 1], 2) and not is_irreducible([1, 0, 1], 2)


def test_count_examples():
    assert ResidueClass.parse("u != 0").count_points(F3) == 2
    assert ResidueClass.parse("exists rf w: w^2 = u & u != 0").count_points(F5) == 2
    for F in SMALL[:5]:
        assert ResidueClass.punctured_line().count_points(F) == F.q - 1
        assert ResidueClass.line().count_points(F) == F.q


def test_semiring_examples():
    a, b = ResidueClass.parse("u = 0"), ResidueClass.parse("u != 0")
    for F in SMALL:
        assert (a + b).count_points(F) == F.q
        assert (ResidueClass.line() * ResidueClass.line()).count_points(F) == F.q ** 2
    nz = ResidueClass.parse("u != 0", params=("u",))
    sq = ResidueClass.parse("w^2 = u", params=("u",))
    prod = nz * sq
    assert sum(prod.count_points(F7, (u,)) for u in F7.elements()) == 6
    with pytest.raises(SignatureMismatch):
        nz + ResidueClass.line()


def test_pushforward_counts():
    assert ResidueClass.line().to_lefschetz() == L
    assert ResidueClass.punctured_line().to_lefschetz() == L - 1
    pair = ResidueClass.parse("w^2 = u", params=("u",)).absorb(("u",))
    for F in (F3, F5):
        assert pair.count_points(F) == F.q


def test_class_collapse_is_heuristic():
    assert ResidueClass.parse("u^2 = w").to_lefschetz() == L
    # (q + 1) / 2 squares: not a polynomial with integer coefficients
    assert ResidueClass.parse("exists rf w: w^2 = u").to_lefschetz() is None
    assert ResidueClass.parse("u != 0", params=("u",)).to_lefschetz() is None


def test_count_csv():
    text = ResidueClass.parse("w^2 = u", params=("u",)).count_csv(F5)
    assert text.splitlines() == ["u,count", "0,1", "1,2", "2,0", "3,0", "4,2"]


def test_budget():
    big = ResidueClass.make((), tuple(f"x{i}" for i in range(7)), fm.Truth(True))
    with pytest.raises(BudgetExceeded):
        big.count_points(parse_field("F31"))


def test_depth_cap():
    with pytest.raises(ValueError):
        ResidueClass.parse("exists rf a: exists rf b: exists rf c: a + b + c = u")


def test_substitute_pullback():
    sq = ResidueClass.parse("w^2 = u", params=("u",))
    pulled = sq.substitute("u", fm.BinOp("*", fm.Var("v", fm.Sort.RF), fm.Var("v", fm.Sort.RF), fm.Sort.RF))
    assert pulled.params == ("v",)
    for v in F7.elements():
        assert pulled.count_points(F7, (v,)) == (1 if v == 0 else 2)


# random RF formulas in u, v for inclusion-exclusion
rf_terms = st.sampled_from(["u", "v", "u*v", "u^2", "v^2 + 1", "u + v", "2*u - v", "1"])


@st.composite
def rf_formulas(draw):
    parts = []
    for _ in range(draw(st.integers(1, 3))):
        a, b = draw(rf_terms), draw(rf_terms)
        op = draw(st.sampled_from(["=", "!="]))
        parts.append(f"{a} {op} {b}")
    glue = draw(st.sampled_from([" & ", " | "]))
    return glue.join(parts)


@settings(max_examples=60, deadline=None)
@given(rf_formulas(), rf_formulas())
def test_inclusion_exclusion(f1, f2):
    Y = ResidueClass.parse(f"rf u, v; {f1}")
    Z = ResidueClass.parse(f"rf u, v; {f2}")
    for F in (F3, F5):
        lhs = Y.union(Z).count_points(F) + Y.intersection(Z).count_points(F)
        rhs = Y.count_points(F) + Z.count_points(F)
        assert lhs == rhs
        assert (Y + Z).count_points(F) == rhs
        assert (Y * Z).count_points(F) == Y.count_points(F) * Z.count_points(F)


def test_classes_agree():
    a = ResidueClass.parse("u = 0 | u != 0")
    assert classes_agree(a, ResidueClass.line())
    assert not classes_agree(a, ResidueClass.punctured_line())


@pytest.mark.parametrize("q,d,n", [(2, 1, 2), (3, 2, 3), (5, 3, 4)])
def test_chevalley_warning_examples(q, d, n):
    ok, witness = chevalley_warning_check(parse_field(f"F{q}"), d, n, trials=30)
    assert ok and witness is None


def test_nontrivial_zero_absent_for_anisotropic_form():
    # x^2 + y^2 over F_3 has only the trivial zero (n = d, so no zero is guaranteed)
    form = [(1, (2, 0)), (1, (0, 2))]
    assert nontrivial_zero(F3, form, 2) is None
    with pytest.raises(ValueError):
        chevalley_warning_check(F3, 2, 2)


def test_closed_atoms_in_classes():
    assert ResidueClass.parse("rf u, v; 1 = 1").count_points(F3) == 9
    assert ResidueClass.parse("rf u, v; u = v | 2 = 3").count_points(F5) == 5
