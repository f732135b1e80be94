import itertools
import re
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from motivic.errors import BudgetExceeded, NotSummable, PrecisionExhausted
from motivic.localoracle import (
    TERJANIAN, LocalElement, LocalField, ake_compare, berlekamp_massey, eval_formula,
    integrate_numeric, series_sum, terjanian_n, terjanian_verify, volume,
)

Q3, Q5, Q7 = LocalField.qp(3), LocalField.qp(5), LocalField.qp(7)


def brute_volume(pred, p, k, m=1):
    """Fraction of residue classes mod p^k whose representative satisfies ``pred``."""
    hits = sum(1 for xs in itertools.product(range(p ** k), repeat=m) if pred(*xs))
    return Fraction(hits, p ** (k * m))


def vp(x, p, cap):
    if x == 0:
        return cap
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


# ------------------------------------------------------------ fields

def test_field_parsing():
    assert LocalField.parse("Q5") == Q5 and LocalField.parse("Qp(5)") == Q5
    K = LocalField.parse("F5((t))")
    assert K.name == "Fq((t))" and K.q == 5 and Q5.name == "Qp"


def test_elements():
    x = LocalElement.from_int(Q5, 50, 4)
    assert (x.ord(), x.ac()) == (2, 2)
    y = LocalElement.from_digits(LocalField.laurent(5), (2, 0, 3))
    assert (y.ord(), y.ac()) == (0, 2)


# ------------------------------------------------------- eval_formula

def test_eval_formula_examples():
    assert eval_formula("vf x; ord(x) >= 1", Q5, [LocalElement.from_int(Q5, 5, 4)])
    F5 = LocalField.laurent(5)
    assert eval_formula("vf x; ac(x) = 2", F5, [LocalElement.from_digits(F5, (2, 0, 3))])
    assert eval_formula("vf x; ord(x - 3) >= 2", Q7, [LocalElement.from_int(Q7, 3, 4)])
    assert not eval_formula("vf x; ord(x - 3) >= 2", Q7, [LocalElement.from_int(Q7, 10, 4)])


def test_eval_precision_exhausted():
    with pytest.raises(PrecisionExhausted):
        eval_formula("vf x; ord(x - 25) = 3", Q5, [LocalElement.from_int(Q5, 25, 2)])


def test_eval_with_parameters():
    f = "rf u; vg n; vf x; ord(x) >= n & ac(x) = u"
    assert eval_formula(f, Q5, [LocalElement.from_int(Q5, 75, 5)], rf=(3,), vg=(2,))
    assert not eval_formula(f, Q5, [LocalElement.from_int(Q5, 75, 5)], rf=(2,), vg=(2,))


# ------------------------------------------------------------- volume

def test_volume_examples():
    r = volume("vf x; ord(x) >= 1", Q5, 1)
    assert (r.value, r.status) == (Fraction(1, 5), "exact")
    for K in (Q3, Q5, Q7):
        p = K.p
        r = volume("vf x; (exists rf w: w^2 = ac(x)) & ord(x) == 0 mod 2 & x != 0", K, 3)
        assert r.value == Fraction(p, 2 * (p + 1))
        assert r.status == "tail-exact"


def test_volume_matches_brute_force():
    # fully decided at level 3, so the brute count over Z/p^3 is exact
    for K in (Q3, Q5):
        p = K.p
        r = volume("vf x, y; ord(x - y) >= 1 & ord(x + 2*y - 1) = 1", K, 3)
        want = brute_volume(lambda x, y: (x - y) % p == 0 and vp((x + 2 * y - 1) % p ** 3, p, 3) == 1, p, 3, 2)
        assert r.status == "exact" and r.value == want


def test_integrate_numeric():
    assert integrate_numeric("vf x; ord(x) >= 0", Q5, "ord(x)").value == Fraction(5, 6)
    for K in (Q3, Q7):
        assert integrate_numeric("vf x; ord(x) >= 0", K, "ord(x)").value == Fraction(K.p, K.p + 1)
    assert integrate_numeric("vf x; ord(x) >= 2", Q3).value == Fraction(1, 9)
    with pytest.raises(NotSummable):
        integrate_numeric("vf x; ord(x) >= 1", Q5, "-ord(x)")


def test_budget():
    with pytest.raises(BudgetExceeded):
        volume("vf x, y, z; ord(x) >= 0", Q7, 4)
    with pytest.raises(BudgetExceeded):
        volume("vf x; ord(x*x - 2) >= 9", Q7, 2, budget=10, tail=False)


def test_report_line():
    line = volume("vf x; ord(x) >= 1", Q5, 3).report_line()
    assert line == "field=Qp p=5 k=3 inside=25 undecided=0 vol=1/5 status=exact"


# ----------------------------------------------------- Haar properties

PIECES = ["ord(x) = 0 & ac(x) = 1", "ord(x) = 1 & ac(x) = 1", "ord(x - 2) >= 2", "ord(x) >= 3"]


@settings(max_examples=25, deadline=None)
@given(st.sets(st.integers(0, len(PIECES) - 1), min_size=1), st.sampled_from([3, 5, 7]))
def test_additivity(chosen, p):
    K = LocalField.qp(p)
    parts = [PIECES[i] for i in sorted(chosen)]
    union = " | ".join(f"({s})" for s in parts)
    total = sum(volume(f"vf x; {s}", K, 3).value for s in parts)
    assert volume(f"vf x; {union}", K, 3).value == total


@pytest.mark.parametrize("body", ["ord(x) >= 1", "ac(x) = 1 & ord(x) <= 2", "ord(x*x - 1) >= 2",
                                  "(exists rf w: w^2 = ac(x)) & ord(x) == 0 mod 2"])
@pytest.mark.parametrize("c", [1, 2, "t", "1 + t"])
def test_translation_invariance(body, c):
    moved = re.sub(r"\bx\b", f"(x - ({c}))", body)
    for K in (Q3, Q5):
        assert volume(f"vf x; {body}", K, 3).value == volume(f"vf x; {moved}", K, 3).value


def test_scaling():
    # the image of R under x -> t x is ord(x) >= 1
    for K in (Q3, Q5):
        assert volume("vf x; ord(x) >= 1", K, 2).value == Fraction(1, K.q)


def test_stabilization_monotone():
    f = "vf x; ord(x*x - 1) >= 2 | ord(x - 3) = 1"
    prev = None
    for k in range(1, 5):
        r = volume(f, Q5, k, tail=False)
        if prev is not None:
            assert r.undecided_mass <= prev.undecided_mass
            assert r.lower >= prev.lower
            if prev.status == "exact":
                assert r.value == prev.value
        prev = r
    assert prev.status == "exact"


# ------------------------------------------------------------------ AKE

def test_ake_examples():
    for f in ("vf x; ord(x - 3) >= 2", "vf x; ord(x - t) >= 1"):
        rep = ake_compare(f, (2, 3, 5))
        assert rep.threshold == 0 and all(r.agree for r in rep.rows)
    exact = ake_compare("vf x; ord(x - 3) >= 2", (3, 5))
    assert all(r.qp.value == Fraction(1, r.p ** 2) for r in exact.rows)
    rep = ake_compare("vf x; ord(x*x - 1) >= 3", (2, 3, 5, 7))
    assert rep.threshold == 2
    assert rep.rows[0].qp.value != rep.rows[0].laurent.value
    assert rep.lines()[-1] == "N = 2"


def test_ake_ac_squares():
    rep = ake_compare("vf x; ac(x)^2 = 1 & ord(x - 1 - t) >= 1", (2, 3, 5))
    assert [r.agree for r in rep.rows][1:] == [True, True]


# ------------------------------------------------------------ Terjanian

def test_terjanian():
    rep = terjanian_verify()
    assert rep.ok and rep.witness is None
    assert rep.line().startswith("PASS")
    assert terjanian_n(1, 1, 1) == 3


@pytest.mark.parametrize("drop", range(len(TERJANIAN)))
def test_terjanian_mutation(drop):
    form = TERJANIAN[:drop] + TERJANIAN[drop + 1:]
    rep = terjanian_verify(form)
    assert not rep.ok and rep.witness is not None
    x = rep.witness
    f = sum(terjanian_n(*x[3 * i:3 * i + 3], form=form) for i in range(3))
    assert f % 4 == 0 and any(v % 2 for v in x)


# ---------------------------------------------------------- recurrences

def test_berlekamp_massey():
    fib = [0, 1]
    for _ in range(12):
        fib.append(fib[-1] + fib[-2])
    C, n = berlekamp_massey(fib)
    assert n == 2 and C == [1, -1, -1]
    C, n = berlekamp_massey([Fraction(1, 2 ** k) for k in range(8)])
    assert n == 1 and C == [1, Fraction(-1, 2)]


def test_series_sum():
    assert series_sum([Fraction(1, 3 ** k) for k in range(10)]) == Fraction(3, 2)
    seq = [Fraction(k + 1, 2 ** k) for k in range(16)]
    assert series_sum(seq) == 4
    assert series_sum([1, 2, 3]) is None
    with pytest.raises(NotSummable):
        series_sum([2 ** k for k in range(10)])
