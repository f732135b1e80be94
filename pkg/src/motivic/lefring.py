"""Exact arithmetic in A = Z[L, 1/L, 1/(1 - L^-i) : i > 0].

An element is stored as a reduced fraction ``Q(L) / prod_d Phi_d(L)^e_d``
where ``Q`` is a Laurent polynomial and the ``Phi_d`` are cyclotomic
polynomials.  Reduced means no ``Phi_d`` with ``e_d > 0`` divides ``Q``.
Since the denominator is monic and fixed by the fraction, ``(Q, e)`` is a
normal form and equality is structural.

The user-facing shape ``P(L) / prod (1 - L^-i)`` is derived from the normal
form by covering the cyclotomic denominator greedily with the largest
needed index first, which is deterministic.

Coefficients are rationals (the ring A tensored with Q) so that
intermediate Faulhaber sums can be represented; every element produced by
summation of integer data has integer coefficients.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import total_ordering

from . import _upoly as up
from .errors import ParseError


def _divisors(n):
    return [d for d in range(1, n + 1) if n % d == 0]


def _clean(q):
    return {k: Fraction(v) for k, v in q.items() if v != 0}


def _to_dense(q):
    if not q:
        return 0, []
    lo = min(q)
    hi = max(q)
    return lo, [q.get(lo + i, Fraction(0)) for i in range(hi - lo + 1)]


def _from_dense(shift, coeffs):
    return {shift + i: Fraction(c) for i, c in enumerate(coeffs) if c != 0}


def _lmul(a, b):
    out = {}
    for i, x in a.items():
        for j, y in b.items():
            out[i + j] = out.get(i + j, 0) + x * y
    return _clean(out)


def _ladd(a, b):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
    return _clean(out)


def _cyclo_laurent(d):
    return {i: Fraction(c) for i, c in enumerate(up.cyclotomic(d)) if c}


def _try_div_cyclo(q, d):
    shift, dense = _to_dense(q)
    quo, rem = up.divmod_(dense, list(up.cyclotomic(d)))
    if rem:
        return None
    return _from_dense(shift, quo)


def _canonical(q, e):
    q = _clean(q)
    e = {d: m for d, m in e.items() if m > 0}
    if not q:
        return (), ()
    for d in sorted(e, reverse=True):
        while e[d] > 0:
            r = _try_div_cyclo(q, d)
            if r is None:
                break
            q = r
            e[d] -= 1
    e = {d: m for d, m in e.items() if m > 0}
    return tuple(sorted(q.items())), tuple(sorted(e.items()))


@total_ordering
class LefschetzElement:
    """Element of the Lefschetz ring in canonical form.

    ``LefschetzElement({1: 1, 0: -1})`` is ``L - 1``;
    ``LefschetzElement({0: 1}, (1,))`` is ``1/(1 - L^-1)``.
    """

    __slots__ = ("_q", "_e", "_shape")

    def __init__(self, num=None, denoms=()):
        num = dict(num or {})
        shift = sum(denoms)
        q = {k + shift: Fraction(v) for k, v in num.items()}
        e = {}
        for i in denoms:
            if i <= 0:
                raise ValueError("denominator indices must be positive")
            for d in _divisors(i):
                e[d] = e.get(d, 0) + 1
        self._q, self._e = _canonical(q, e)
        self._shape = None

    @classmethod
    def _make(cls, q, e):
        obj = cls.__new__(cls)
        obj._q, obj._e = _canonical(q, e)
        obj._shape = None
        return obj

    # constructors
    @classmethod
    def L(cls, power=1):
        return cls({power: 1})

    @classmethod
    def const(cls, c):
        return cls({0: Fraction(c)})

    @classmethod
    def coerce(cls, x):
        if isinstance(x, LefschetzElement):
            return x
        if isinstance(x, (int, Fraction)):
            return cls.const(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to LefschetzElement")

    @classmethod
    def geometric(cls, step):
        """``1/(1 - L^step)`` for ``step != 0``."""
        return (cls.const(1) - cls.L(step)).inverse()

    # normal form access
    @property
    def qe(self):
        return dict(self._q), dict(self._e)

    def _shape_data(self):
        if self._shape is None:
            e = dict(self._e)
            work = dict(e)
            cover = {}
            denoms = []
            while any(m > 0 for m in work.values()):
                dstar = max(d for d, m in work.items() if m > 0)
                denoms.append(dstar)
                for d in _divisors(dstar):
                    cover[d] = cover.get(d, 0) + 1
                    if work.get(d, 0) > 0:
                        work[d] -= 1
            num = dict(self._q)
            for d, c in cover.items():
                for _ in range(c - e.get(d, 0)):
                    num = _lmul(num, _cyclo_laurent(d))
            shift = sum(denoms)
            num = {k - shift: v for k, v in num.items()}
            self._shape = (tuple(sorted(num.items())), tuple(sorted(denoms)))
        return self._shape

    @property
    def numerator(self):
        """Laurent numerator ``{exponent: coefficient}`` of the shaped form."""
        return dict(self._shape_data()[0])

    @property
    def denominators(self):
        """Sorted indices ``i`` of the factors ``(1 - L^-i)``."""
        return self._shape_data()[1]

    @property
    def denom_multiset(self):
        return self.denominators

    @property
    def shift(self):
        """Lowest exponent of the shaped numerator (0 for zero)."""
        num = self._shape_data()[0]
        return num[0][0] if num else 0

    def is_zero(self):
        return not self._q

    def is_integral(self):
        return all(Fraction(c).denominator == 1 for _, c in self._shape_data()[0])

    # ring operations
    def __add__(self, other):
        try:
            other = LefschetzElement.coerce(other)
        except TypeError:
            return NotImplemented
        ea, eb = dict(self._e), dict(other._e)
        e = {d: max(ea.get(d, 0), eb.get(d, 0)) for d in set(ea) | set(eb)}
        qa, qb = dict(self._q), dict(other._q)
        for d, m in e.items():
            for _ in range(m - ea.get(d, 0)):
                qa = _lmul(qa, _cyclo_laurent(d))
            for _ in range(m - eb.get(d, 0)):
                qb = _lmul(qb, _cyclo_laurent(d))
        return LefschetzElement._make(_ladd(qa, qb), e)

    __radd__ = __add__

    def __neg__(self):
        return LefschetzElement._make({k: -v for k, v in self._q}, dict(self._e))

    def __sub__(self, other):
        try:
            other = LefschetzElement.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return LefschetzElement.coerce(other) - self

    def __mul__(self, other):
        try:
            other = LefschetzElement.coerce(other)
        except TypeError:
            return NotImplemented
        e = dict(self._e)
        for d, m in other._e:
            e[d] = e.get(d, 0) + m
        return LefschetzElement._make(_lmul(dict(self._q), dict(other._q)), e)

    __rmul__ = __mul__

    def is_unit(self):
        try:
            self._unit_factorization()
        except ArithmeticError:
            return False
        return True

    def _unit_factorization(self):
        if not self._q:
            raise ArithmeticError("zero is not invertible")
        shift, dense = _to_dense(dict(self._q))
        f = {}
        d = 1
        while len(dense) > 1:
            if d > 2 * len(dense) ** 2 + 2:
                raise ArithmeticError("element is not a unit")
            quo, rem = up.divmod_(dense, list(up.cyclotomic(d)))
            if not rem:
                dense = quo
                f[d] = f.get(d, 0) + 1
            else:
                d += 1
        return Fraction(dense[0]), shift, f

    def inverse(self):
        """Multiplicative inverse; raises ``ArithmeticError`` for non-units."""
        c, shift, f = self._unit_factorization()
        q = {-shift: 1 / c}
        for d, m in self._e:
            for _ in range(m):
                q = _lmul(q, _cyclo_laurent(d))
        return LefschetzElement._make(q, f)

    def __truediv__(self, other):
        try:
            other = LefschetzElement.coerce(other)
        except TypeError:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return LefschetzElement.coerce(other) * self.inverse()

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        out = LefschetzElement.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # comparison / hashing
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LefschetzElement.const(other)
        if not isinstance(other, LefschetzElement):
            return NotImplemented
        return self._q == other._q and self._e == other._e

    def __lt__(self, other):
        # arbitrary but total order, used only for deterministic sorting
        other = LefschetzElement.coerce(other)
        return (self._e, self._q) < (other._e, other._q)

    def __hash__(self):
        return hash((self._q, self._e))

    # evaluation
    def theta(self, q):
        """Evaluate at ``L = q`` for an exact rational ``q > 1``."""
        q = Fraction(q)
        if q <= 1:
            raise ValueError("evaluation points must satisfy q > 1")
        num = sum((c * q**k for k, c in self._q), Fraction(0))
        den = Fraction(1)
        for d, m in self._e:
            den *= Fraction(up.evaluate(list(up.cyclotomic(d)), q)) ** m
        return num / den

    def is_positive(self):
        """Membership in the positive semiring: theta_q >= 0 for every q > 1.

        The cyclotomic denominator is positive on (1, oo), so the sign is that
        of the numerator, decided by Sturm-sequence root counting.
        """
        if not self._q:
            return True
        _, dense = _to_dense(dict(self._q))
        return up.nonnegative_beyond(dense, 1)

    # text form
    def __str__(self):
        return format_element(self)

    def __repr__(self):
        return f"LefschetzElement({format_element(self)!r})"


L = LefschetzElement.L()
ONE = LefschetzElement.const(1)
ZERO = LefschetzElement.const(0)


def int_embed(n):
    return LefschetzElement.const(n)


def add(a, b):
    return LefschetzElement.coerce(a) + b


def sub(a, b):
    return LefschetzElement.coerce(a) - b


def mul(a, b):
    return LefschetzElement.coerce(a) * b


def neg(a):
    return -LefschetzElement.coerce(a)


def power(a, n):
    return LefschetzElement.coerce(a) ** n


def theta(a, q):
    return LefschetzElement.coerce(a).theta(q)


def is_positive(a):
    return LefschetzElement.coerce(a).is_positive()


# ------------------------------------------------------------ text format

def _fmt_coeff(c):
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"({c.numerator}/{c.denominator})"


def _fmt_poly(num):
    if not num:
        return "0"
    out = []
    for k, c in sorted(num.items(), reverse=True):
        c = Fraction(c)
        mono = "" if k == 0 else "L" if k == 1 else f"L^{k}"
        mag = abs(c)
        if mono and mag == 1:
            body = mono
        elif mono:
            body = f"{_fmt_coeff(mag)}*{mono}"
        else:
            body = _fmt_coeff(mag)
        if not out:
            out.append(("-" if c < 0 else "") + body)
        else:
            out.append(("-" if c < 0 else "+") + body)
    return "".join(out)


def format_element(a: LefschetzElement) -> str:
    """Canonical text: ``poly(L)`` or ``(poly(L))/((1-L^-i)...)``."""
    num_items, denoms = a._shape_data()
    num = dict(num_items)
    body = _fmt_poly(num)
    if not denoms:
        return body
    if len(num) > 1:
        body = f"({body})"
    factors = [f"(1-L^-{i})" for i in denoms]
    den = factors[0] if len(factors) == 1 else "(" + "".join(factors) + ")"
    return f"{body}/{den}"


_LTOK = re.compile(r"\s*(?:(?P<int>\d+)|(?P<L>L)|(?P<op>[-+*/^()]))")


def parse_element(text: str) -> LefschetzElement:
    """Parse the text form (any ring expression in ``L`` over the integers)."""
    toks = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _LTOK.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    i = 0

    def peek():
        return toks[i]

    def take(expected=None):
        nonlocal i
        tok = toks[i]
        if expected is not None and tok[1] != expected:
            raise ParseError(f"unexpected {tok[1] or 'end of input'!r}", tok[2], repr(expected))
        i += 1
        return tok

    def expr():
        val = term()
        while peek()[1] in ("+", "-"):
            op = take()[1]
            rhs = term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term():
        val = unary()
        while True:
            if peek()[1] == "*":
                take()
                val = val * unary()
            elif peek()[1] == "/":
                take()
                val = val / unary()
            elif peek()[1] == "(" or peek()[0] == "L":
                val = val * unary()
            else:
                return val

    def unary():
        if peek()[1] == "-":
            take()
            return -unary()
        if peek()[1] == "+":
            take()
            return unary()
        return power()

    def power():
        base = atom()
        if peek()[1] == "^":
            take()
            sign = 1
            if peek()[1] == "-":
                take()
                sign = -1
            tok = take()
            if tok[0] != "int":
                raise ParseError("bad exponent", tok[2], "integer")
            return base ** (sign * int(tok[1]))
        return base

    def atom():
        tok = take()
        if tok[0] == "int":
            return LefschetzElement.const(int(tok[1]))
        if tok[0] == "L":
            return LefschetzElement.L()
        if tok[1] == "(":
            val = expr()
            take(")")
            return val
        raise ParseError(f"unexpected {tok[1] or 'end of input'!r}", tok[2], "operand")

    try:
        val = expr()
    except ArithmeticError as exc:
        raise ParseError(f"division by a non-unit: {exc}") from exc
    if peek()[0] != "eof":
        raise ParseError(f"unexpected {peek()[1]!r}", peek()[2], "end of input")
    return val
