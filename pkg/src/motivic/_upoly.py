"""Dense univariate polynomials over Q (coefficient lists, lowest degree first).

Only what the Lefschetz ring needs: exact division, gcd, square-free
decomposition and Sturm-sequence root counting.
"""

from fractions import Fraction
from functools import lru_cache


def trim(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def deg(p):
    return len(p) - 1


def add(p, q):
    n = max(len(p), len(q))
    return trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def sub(p, q):
    return add(p, [-c for c in q])


def mul(p, q):
    if not p or not q:
        return []
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return trim(out)


def scale(p, c):
    return trim([c * a for a in p])


def divmod_(p, q):
    """Polynomial division over Q; returns ``(quotient, remainder)``."""
    q = trim(q)
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    r = [Fraction(c) for c in p]
    out = [Fraction(0)] * max(len(r) - len(q) + 1, 0)
    lead = Fraction(q[-1])
    while len(trim(r)) >= len(q):
        r = trim(r)
        k = len(r) - len(q)
        c = r[-1] / lead
        out[k] = c
        for i, b in enumerate(q):
            r[i + k] -= c * b
        r = trim(r)
    return trim(out), trim(r)


def exact_div(p, q):
    quo, rem = divmod_(p, q)
    if rem:
        raise ArithmeticError("inexact polynomial division")
    return quo


def deriv(p):
    return trim([i * p[i] for i in range(1, len(p))])


def monic(p):
    p = trim(p)
    if not p:
        return p
    lead = Fraction(p[-1])
    return [Fraction(c) / lead for c in p]


def gcd(p, q):
    p, q = trim(p), trim(q)
    while q:
        p, q = q, divmod_(p, q)[1]
    return monic(p)


def evaluate(p, x):
    acc = 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def squarefree_decomposition(p):
    """Yun's algorithm: list of ``(factor, multiplicity)`` with monic factors."""
    p = monic(p)
    if len(p) <= 1:
        return []
    out = []
    a0 = gcd(p, deriv(p))
    b = exact_div(p, a0)
    c = exact_div(deriv(p), a0)
    d = sub(c, deriv(b))
    i = 1
    while len(b) > 1:
        a = gcd(b, d)
        if len(a) > 1:
            out.append((a, i))
        b = exact_div(b, a)
        c = exact_div(d, a)
        d = sub(c, deriv(b))
        i += 1
    return out


def sturm_sequence(p):
    seq = [trim(p), deriv(p)]
    while seq[-1]:
        r = divmod_(seq[-2], seq[-1])[1]
        if not r:
            break
        seq.append(scale(r, -1))
    return [s for s in seq if s]


def _sign(x):
    return (x > 0) - (x < 0)


def _variations(signs):
    signs = [s for s in signs if s]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def variations_at(seq, x):
    return _variations([_sign(evaluate(s, x)) for s in seq])


def variations_at_infinity(seq, positive=True):
    out = []
    for s in seq:
        lead = _sign(s[-1])
        if not positive and deg(s) % 2:
            lead = -lead
        out.append(lead)
    return _variations(out)


def count_roots(p, lo, hi=None):
    """Number of distinct real roots of ``p`` in ``(lo, hi]`` (``hi=None`` means +oo).

    ``p`` must not vanish at ``lo``.
    """
    seq = sturm_sequence(p)
    v_lo = variations_at(seq, lo)
    v_hi = variations_at_infinity(seq) if hi is None else variations_at(seq, hi)
    return v_lo - v_hi


def nonnegative_beyond(p, lo):
    """Decide ``p(x) >= 0`` for every real ``x > lo`` exactly.

    The sign can only change across roots of odd multiplicity, so ``p`` is
    nonnegative on ``(lo, oo)`` iff its leading coefficient is positive and
    the odd-multiplicity part of its square-free decomposition has no root
    there.
    """
    p = trim(p)
    if not p:
        return True
    if p[-1] < 0:
        return False
    odd = [Fraction(1)]
    for factor, mult in squarefree_decomposition(p):
        if mult % 2:
            odd = mul(odd, factor)
    if len(odd) <= 1:
        return True
    while evaluate(odd, lo) == 0:
        odd = exact_div(odd, [-Fraction(lo), 1])
    if len(odd) <= 1:
        return True
    return count_roots(odd, lo) == 0


def isolate_roots(p, lo, hi):
    """Disjoint intervals ``(a, b]`` inside ``(lo, hi]`` each holding one distinct root."""
    sq = monic(p)
    g = gcd(sq, deriv(sq))
    if len(g) > 1:
        sq = exact_div(sq, g)
    seq = sturm_sequence(sq)
    out = []
    stack = [(Fraction(lo), Fraction(hi))]
    while stack:
        a, b = stack.pop()
        if evaluate(sq, a) == 0:
            a -= Fraction(1, 10**9)
        n = variations_at(seq, a) - variations_at(seq, b)
        if n == 0:
            continue
        if n == 1:
            out.append((a, b))
            continue
        m = (a + b) / 2
        stack.append((a, m))
        stack.append((m, b))
    return sorted(out)


@lru_cache(maxsize=None)
def cyclotomic(n):
    """Integer coefficients of the n-th cyclotomic polynomial."""
    p = [-1] + [0] * (n - 1) + [1]
    for d in range(1, n):
        if n % d == 0:
            p = exact_div(p, list(cyclotomic(d)))
    return tuple(int(c) for c in p)
