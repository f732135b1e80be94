"""Acceptance criteria, one test each, at their stated tolerances and time limits.

Each test records a PASS/FAIL line; ``conftest.py`` prints them in the
terminal summary and ``python tests/test_acceptance.py`` prints them directly.
"""

import random
import sys
import time
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from motivic import formula as fm
from motivic import presburger as pb
from motivic.lefring import L, LefschetzElement, parse_element
from motivic.localoracle import (
    TERJANIAN, LocalField, ake_compare, integrate_numeric, terjanian_verify, volume,
)
from motivic.resfield import FiniteField, chevalley_warning_check, parse_field
from motivic.vfcells import Cell, Center, check_fubini, integrate, integrate_cell, value_of
from vf_fixtures import FIXTURES, TWO_VARIABLE

PRIMES = (3, 5, 7)
RESULTS = {}


@contextmanager
def criterion(n, title, limit):
    start = time.perf_counter()
    detail = []
    try:
        yield detail
    except BaseException as e:
        RESULTS[n] = f"FAIL criterion {n:2d}: {title} ({type(e).__name__}: {e})"
        raise
    elapsed = time.perf_counter() - start
    ok = elapsed < limit
    note = f"; {'; '.join(detail)}" if detail else ""
    RESULTS[n] = (f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {title} "
                  f"[{elapsed:.2f}s < {limit}s]{note}")
    assert ok, f"took {elapsed:.2f}s, limit {limit}s"


def _cell(cond):
    return Cell(Center.constant(0), fm.parse(f"rf eta; vg a; {cond}").body)


# ---------------------------------------------------------------- 1-4

def test_criterion_01_ball_volume():
    with criterion(1, "ball volume L^(-alpha-1), motivic and oracle", 1):
        for alpha in range(4):
            phi = integrate_cell(_cell(f"a = {alpha} & eta = 1")).to_lefschetz()
            assert phi == L ** (-alpha - 1)
            for p in PRIMES:
                want = Fraction(1, p ** (alpha + 1))
                assert phi.theta(p) == want
                res = volume(f"vf x; ord(x - 1) = {alpha} & ac(x - 1) = 1", LocalField.qp(p), alpha + 1)
                assert res.status == "exact" and res.level == alpha + 1 and res.value == want


def test_criterion_02_unit_ball():
    with criterion(2, "unit ball has volume 1", 1):
        annuli = pb.parse_sum("(L - 1)*L^(-a-1) on a >= 0").sum()
        assert annuli == 1
        assert value_of(integrate("vf x; ord(x) >= 0")) == 1
        for p in PRIMES:
            res = volume("vf x; ord(x) >= 0", LocalField.qp(p), 1)
            assert res.status == "exact" and res.value == 1


def test_criterion_03_abs_integral():
    with criterion(3, "integral of |x| over the unit ball", 5):
        phi = value_of(integrate("vf x; ord(x) >= 0", "ord(x)"))
        assert phi == parse_element("(1-L^-1)/(1-L^-2)")
        assert str(phi) == "(1-L^-1)/(1-L^-2)"
        for p in PRIMES:
            want = Fraction(p, p + 1)
            assert phi.theta(p) == want
            assert integrate_numeric("vf x; ord(x) >= 0", LocalField.qp(p), "ord(x)").value == want


def test_criterion_04_squares():
    with criterion(4, "measure of the squares p/(2(p+1))", 10) as detail:
        f = "vf x; ord(x) >= 0 & (exists rf w: w^2 = ac(x)) & ord(x) == 0 mod 2 & x != 0"
        phi = integrate(f)
        for p in PRIMES:
            want = Fraction(p, 2 * (p + 1))
            assert phi.value(FiniteField(p)) == want
            res = volume(f, LocalField.qp(p), 3)
            assert res.level == 3 and res.value == want
            assert res.status in ("exact", "tail-exact")
            detail.append(f"p={p} oracle {res.value} {res.status}")


# ---------------------------------------------------------------- 5-7

def test_criterion_05_specialization():
    with criterion(5, f"specialization equals the oracle on {len(FIXTURES)} fixtures", 60):
        assert len(FIXTURES) >= 10
        for f, w in FIXTURES:
            phi = integrate(f, w)
            for p in PRIMES:
                res = volume(f, LocalField.qp(p), 3, w)
                assert res.status != "lower-bound-only", (f, p)
                assert phi.value(FiniteField(p)) == res.value, (f, w, p)


AKE_SUITE = [
    "vf x; ord(x - 3) >= 2",
    "vf x; ord(x - t) >= 1",
    "vf x; ord(x*x - 1) >= 3",
    "vf x; ac(x)^2 = 1 & ord(x - 1 - t) >= 1",
    "vf x; ord(x + 1) >= 2 & ord(x - 1) = 0",
    "vf x; ord(x*x - t*t) >= 3",
    "vf x; ord(x - 2) >= 1 & ac(x - 2 - 2*t) = 1",
    "vf x, y; ord(x - y) >= 1 & ord(x + y - 1) >= 1",
    "vf x; ord(x*x*x - x) >= 2",
    "vf x; (exists rf w: w^2 = ac(x)) & ord(x) == 0 mod 2 & x != 0",
]


def test_criterion_06_ake():
    with criterion(6, f"AKE transfer on {len(AKE_SUITE)} formulas", 120) as detail:
        thresholds = []
        for f in AKE_SUITE:
            rep = ake_compare(f, (2, 3, 5, 7), 3)
            for r in rep.rows:
                if r.p > rep.threshold:
                    assert r.agree is True
            assert rep.threshold < 7, f
            thresholds.append(rep.threshold)
        assert max(thresholds) >= 2  # some fixture needs N > 1
        detail.append(f"N per formula {thresholds}")


def test_criterion_07_terjanian():
    with criterion(7, "Terjanian check with single-monomial mutations", 2):
        assert terjanian_verify().ok
        for k in range(len(TERJANIAN)):
            assert not terjanian_verify(TERJANIAN[:k] + TERJANIAN[k + 1:]).ok


# --------------------------------------------------------------- 8-11

def test_criterion_08_chevalley_warning():
    with criterion(8, "Chevalley-Warning, 100 forms per (q, d, n)", 30):
        for q, d, n in ((2, 2, 3), (3, 2, 3), (3, 3, 4), (5, 2, 3)):
            ok, witness = chevalley_warning_check(parse_field(f"F{q}"), d, n, trials=100, seed=q * 100 + d * 10 + n)
            assert ok, witness


def test_criterion_09_fubini():
    with criterion(9, f"order independence on {len(TWO_VARIABLE)} two-variable fixtures", 10):
        for f, w in TWO_VARIABLE:
            ok, (a, b) = check_fubini(f, w)
            assert ok and value_of(a) is not None and value_of(a) == value_of(b), f


def _random_element(rng):
    num = {rng.randint(-3, 3): rng.randint(-5, 5) for _ in range(rng.randint(1, 4))}
    denoms = tuple(rng.randint(1, 4) for _ in range(rng.randint(0, 3)))
    return LefschetzElement(num, denoms)


def _negative_somewhere(a):
    grid = [1 + Fraction(k, 400) for k in range(1, 400 * 9 + 1)]
    grid += [Fraction(10 + k) for k in range(1, 200)] + [Fraction(10) ** k for k in range(3, 12)]
    return any(a.theta(q) < 0 for q in grid)


def test_criterion_10_positivity():
    with criterion(10, "positivity decision against dense sampling", 10) as detail:
        rng = random.Random(10)
        samples = [1 + Fraction(9 * k, 50) for k in range(1, 51)]
        positive = 0
        for _ in range(200):
            a = _random_element(rng)
            sampled = all(a.theta(q) >= 0 for q in samples)
            decided = a.is_positive()
            if decided:
                positive += 1
                assert sampled
            if not sampled:
                assert not decided
            elif not decided:
                # the decision found negativity the coarse grid missed; locate it
                assert _negative_somewhere(a), a
        adv = (L - Fraction(61, 20)) * (L - Fraction(63, 20))
        assert all(adv.theta(q) >= 0 for q in samples) and adv.theta(Fraction(31, 10)) < 0
        assert not adv.is_positive()
        detail.append(f"{positive}/200 positive; sign dip at q=31/10 caught")


def _random_sum(rng):
    names = ["i", "j"][:rng.randint(1, 2)]
    parts = [f"{v} >= {rng.randint(-2, 2)}" for v in names]
    if len(names) == 2:
        shape = rng.choice(["box", "cone", "cong"])
        if shape == "cone":
            parts.append(f"j <= {rng.randint(1, 2)}*i + {rng.randint(0, 3)}")
        elif shape == "cong":
            parts.append(f"i + j == {rng.randint(0, 2)} mod {rng.randint(2, 3)}")
    elif rng.random() < 0.5:
        parts.append(f"i == {rng.randint(0, 2)} mod 3")
    terms = []
    for _ in range(rng.randint(1, 2)):
        degs = [rng.randint(0, 3) for _ in names]
        while sum(degs) > 3:
            degs[rng.randrange(len(degs))] -= 1
        mono = "*".join(f"{v}^{d}" for v, d in zip(names, degs))
        ex = " ".join(f"- {rng.randint(1, 3)}*{v}" for v in names)
        terms.append(f"{rng.randint(-3, 3) or 1}*{mono}*L^({rng.randint(-1, 1)} {ex})")
    return f"{' + '.join(terms)} on {' & '.join(parts)}"


def _sum_by_regions(f):
    """Sum ``f`` region by region in the coordinates of each region."""
    total = parse_element("0")
    for g, e, poly in f.terms:
        for R in pb.decompose(pb.PresburgerSet(f.vars, (g,))):
            names = tuple(f"_n{k}" for k in range(len(R.gens)))
            cons = [pb.ineq(pb.Affine.var(n)) for n in names]
            cons += [pb.ineq(pb.Affine.constant(r) - pb.Affine.var(n))
                     for n, r in zip(names, R.ranges) if r is not None]
            ee, pp = e, poly
            for i, v in enumerate(R.vars):
                aff = pb.Affine.make({names[k]: R.gens[k][i] for k in range(len(names))}, R.base[i])
                ee, pp = ee.subst(v, aff), pb.p_subst(pp, v, aff)
            guard = pb.make_guard(cons) if cons else frozenset()
            total = total + pb.ExponentialSum(names, ((guard, ee, pp),)).sum()
    return total


def test_criterion_11_summation():
    with criterion(11, "50 random sums against the tail bound and region refinement", 30) as detail:
        rng = random.Random(11)
        done = worst = 0
        while done < 50:
            text = _random_sum(rng)
            f = pb.parse_sum(text)
            if not f.is_summable():
                continue
            closed = f.sum()
            diff = abs(float(closed.theta(2) - f.partial_sum(2, 60)))
            bound = f.tail_bound(2, 60)
            assert diff <= bound, (text, diff, bound)
            assert _sum_by_regions(f) == closed, text
            assert f.sum(order=tuple(reversed(f.vars))) == closed, text
            worst = max(worst, diff)
            done += 1
        detail.append(f"largest |error| {worst:.2e}")


def report_lines():
    return [RESULTS[k] for k in sorted(RESULTS)]


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    failed = 0
    for t in tests:
        try:
            t()
        except BaseException:
            failed += 1
    print("\n".join(report_lines()))
    sys.exit(1 if failed else 0)
