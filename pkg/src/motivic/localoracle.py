"""Brute-force semantics over Q_p and F_q((t)).

Points of the unit polydisc are enumerated as residue classes modulo
powers of the uniformizer.  On a class of depth n every polynomial with
coefficients in Z[t] is known modulo the n-th power of the uniformizer, so
``ord`` is either exact or known to be at least n; atoms are evaluated in
three-valued logic and only undecided classes are refined.  Volumes are
exact when no undecided mass is left, and otherwise the per-depth
contributions are summed as a linear recurrent series (Berlekamp-Massey)
that is verified on extra terms before it is trusted.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import formula as fm
from . import presburger as pb
from .errors import BudgetExceeded, NotSummable, PrecisionExhausted, SortError
from .resfield import FiniteField, parse_field

INF = math.inf
RF, VG, VF = fm.Sort.RF, fm.Sort.VG, fm.Sort.VF
CLASS_LIMIT = 10 ** 8  # q^(m k) cap from the volume contract
EVAL_BUDGET = 3 * 10 ** 6  # class evaluations per volume computation


# ---------------------------------------------------------------- rings

class _PadicRing:
    """Z_p / p^n Z_p on Python ints."""

    def __init__(self, p, n):
        self.p, self.n, self.mod = p, n, p ** n
        self.zero, self.one = 0, 1

    def const(self, zt):
        return sum(c * self.p ** e for e, c in zt.items()) % self.mod

    def from_int(self, c):
        return c % self.mod

    def add(self, a, b):
        return (a + b) % self.mod

    def sub(self, a, b):
        return (a - b) % self.mod

    def mul(self, a, b):
        return (a * b) % self.mod

    def ord_ac(self, a):
        a %= self.mod
        if a == 0:
            return None
        v = 0
        while a % self.p == 0:
            a //= self.p
            v += 1
        return v, a % self.p

    def digits(self, a):
        return tuple((a // self.p ** i) % self.p for i in range(self.n))


class _LaurentRing:
    """F_q[[t]] / t^n with elements as digit tuples."""

    def __init__(self, F, n):
        self.F, self.n = F, n
        self.zero = (0,) * n
        self.one = tuple([1] + [0] * (n - 1)) if n else ()

    def const(self, zt):
        out = [0] * self.n
        for e, c in zt.items():
            if 0 <= e < self.n:
                out[e] = self.F.add(out[e], self.F.from_int(c))
        return tuple(out)

    def from_int(self, c):
        return self.const({0: c})

    def add(self, a, b):
        return tuple(self.F.add(x, y) for x, y in zip(a, b))

    def sub(self, a, b):
        return tuple(self.F.sub(x, y) for x, y in zip(a, b))

    def mul(self, a, b):
        F, n = self.F, self.n
        out = [0] * n
        for i, x in enumerate(a):
            if x:
                for j in range(n - i):
                    y = b[j]
                    if y:
                        out[i + j] = F.add(out[i + j], F.mul(x, y))
        return tuple(out)

    def ord_ac(self, a):
        for i, x in enumerate(a):
            if x:
                return i, x
        return None

    def digits(self, a):
        return tuple(a)


@dataclass(frozen=True)
class LocalField:
    """``Q_p`` (kind ``'Qp'``) or ``F_q((t))`` (kind ``'laurent'``)."""

    kind: str
    residue: FiniteField

    @classmethod
    def qp(cls, p):
        return cls("Qp", FiniteField(p))

    @classmethod
    def laurent(cls, F):
        if isinstance(F, int):
            F = parse_field(f"F{F}")
        elif isinstance(F, str):
            F = parse_field(F)
        return cls("laurent", F)

    @classmethod
    def parse(cls, spec):
        """``Qp(5)``, ``Q5``, ``F5((t))`` or ``Fq(p=..,e=..)((t))``."""
        s = spec.strip()
        if s.endswith("((t))"):
            return cls.laurent(s[:-5])
        if s.startswith("Qp(") and s.endswith(")"):
            return cls.qp(int(s[3:-1]))
        if s.startswith("Q") and s[1:].isdigit():
            return cls.qp(int(s[1:]))
        raise ValueError(f"unknown local field {spec!r}")

    def __post_init__(self):
        if self.kind == "Qp" and self.residue.e != 1:
            raise ValueError("p-adic fields are restricted to Q_p itself")

    @property
    def p(self):
        return self.residue.p

    @property
    def q(self):
        return self.residue.q

    @property
    def name(self):
        return "Qp" if self.kind == "Qp" else "Fq((t))"

    def __str__(self):
        return f"Q{self.p}" if self.kind == "Qp" else f"{self.residue.spec()}((t))"

    def ring(self, n):
        return _ring(self, n)

    def children(self, rep, n):
        """Residue classes of depth n+1 inside the class ``rep`` of depth n."""
        if self.kind == "Qp":
            step = self.p ** n
            return [rep + d * step for d in range(self.p)]
        return [rep + (d,) for d in self.residue.elements()]

    def root_class(self):
        return 0 if self.kind == "Qp" else ()

    def is_zero_poly(self, zt):
        """Whether a Z[t] constant maps to 0 in this field."""
        if self.kind == "Qp":
            return sum(c * self.p ** e for e, c in zt.items()) == 0
        return all(c % self.p == 0 for c in zt.values())


@lru_cache(maxsize=None)
def _ring(K, n):
    return _PadicRing(K.p, n) if K.kind == "Qp" else _LaurentRing(K.residue, n)


# ------------------------------------------------------------- elements

@dataclass(frozen=True)
class LocalElement:
    """``pi^v * (d_0 + d_1 pi + ...)`` known to absolute precision ``v + len(digits)``.

    All-zero digits mark an element that is zero at that precision.
    """

    field: LocalField
    digits: tuple
    v: int = 0

    @classmethod
    def from_digits(cls, K, digits, v=0):
        digits = tuple(digits)
        while digits and digits[0] == 0:
            digits = digits[1:]
            v += 1
        if not digits:
            return cls(K, (0,) * v, 0)
        return cls(K, digits, v)

    @classmethod
    def from_int(cls, K, n, k=8):
        R = K.ring(k)
        return cls.from_digits(K, R.digits(R.from_int(n)))

    @classmethod
    def from_poly(cls, K, zt, k=8):
        """Image of a Z[t] constant ``{exponent: coeff}``."""
        R = K.ring(k)
        return cls.from_digits(K, R.digits(R.const(zt)))

    @property
    def precision(self):
        return self.v + len(self.digits)

    def is_zero_marker(self):
        return not any(self.digits)

    def ord(self):
        return None if self.is_zero_marker() else self.v

    def ac(self):
        return 0 if self.is_zero_marker() else self.digits[0]

    def value(self, n):
        """Ring element modulo pi^n."""
        if self.v < 0:
            raise ValueError("element lies outside the valuation ring")
        if n > self.precision:
            raise PrecisionExhausted(f"element known only to precision {self.precision}")
        digs = ((0,) * self.v + tuple(self.digits))[:n]
        if self.field.kind == "Qp":
            return sum(d * self.field.p ** i for i, d in enumerate(digs))
        return tuple(digs) + (0,) * (n - len(digs))


# --------------------------------------------------------- 3-valued logic

def _and(a, b):
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def _or(a, b):
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def _not(a):
    return None if a is None else not a


class _State:
    __slots__ = ("n", "ring", "vf", "rf", "vg")

    def __init__(self, n, ring, vf, rf, vg):
        self.n, self.ring, self.vf, self.rf, self.vg = n, ring, vf, rf, vg


class _Compiler:
    """Formula -> closure ``state -> True | False | None``."""

    def __init__(self, K):
        self.K = K
        self.F = K.residue

    # VF polynomials -------------------------------------------------
    def vf_poly(self, t):
        poly = fm.vf_poly(t)
        grouped = {}
        for (mono, e), c in poly.items():
            grouped.setdefault(mono, {})[e] = c
        K = self.K
        # drop monomials whose coefficient vanishes in this field
        terms = [(mono, zt) for mono, zt in grouped.items() if not K.is_zero_poly(zt)]
        if not terms:
            return None  # identically zero in K

        def ev(st):
            R = st.ring
            acc = R.zero
            for mono, zt in terms:
                val = R.const(zt)
                for v, e in mono:
                    x = st.vf[v]
                    for _ in range(e):
                        val = R.mul(val, x)
                acc = R.add(acc, val)
            return acc
        return ev

    def ord_interval(self, t):
        """Closure giving ``(lo, hi)`` for ord of a VF term (ord0 on zero)."""
        ev = self.vf_poly(t)
        if ev is None:
            return lambda st: (0, 0)

        def f(st):
            oa = st.ring.ord_ac(ev(st))
            if oa is None:
                return (st.n, INF)
            return (oa[0], oa[0])
        return f

    def ac_value(self, t):
        ev = self.vf_poly(t)
        if ev is None:
            return lambda st: 0

        def f(st):
            oa = st.ring.ord_ac(ev(st))
            return None if oa is None else oa[1]
        return f

    # RF terms -------------------------------------------------------
    def rf_term(self, t):
        F = self.F
        if isinstance(t, fm.Num):
            c = F.from_int(t.value)
            return lambda st: c
        if isinstance(t, fm.Var):
            name = t.name
            return lambda st: st.rf[name]
        if isinstance(t, fm.Ac):
            return self.ac_value(t.arg)
        if isinstance(t, fm.Neg):
            g = self.rf_term(t.arg)
            return lambda st: None if (x := g(st)) is None else F.neg(x)
        if isinstance(t, fm.Pow):
            g, k = self.rf_term(t.base), t.exp
            return lambda st: None if (x := g(st)) is None else F.pow(x, k)
        if isinstance(t, fm.BinOp):
            a, b = self.rf_term(t.left), self.rf_term(t.right)
            op = {"+": F.add, "-": F.sub, "*": F.mul}[t.op]

            def f(st):
                x = a(st)
                if x is None:
                    return None
                y = b(st)
                return None if y is None else op(x, y)
            return f
        raise SortError(f"not a residue-field term: {fm.pretty_term(t)}")

    # VG terms as affine forms over ord intervals ----------------------
    def vg_affine(self, t):
        """Affine form of a weight, its ord closures, and for each ord the
        variable it measures when the argument is ``+-(x - c)``."""
        ords, axes, seen = [], [], {}

        def ord_map(o):
            if o not in seen:
                seen[o] = len(ords)
                ords.append(self.ord_interval(o.arg))
                axes.append(_axis(o.arg))
            return pb.Affine.var(f"_o{seen[o]}")
        return pb.term_to_affine(t, None, ord_map), ords, axes

    @staticmethod
    def _bounds(aff, ords, st):
        lo = hi = aff.const
        for v, c in aff.coeffs:
            if v.startswith("_o"):
                a, b = ords[int(v[2:])](st)
            else:
                a = b = st.vg[v]
            if c > 0:
                lo, hi = lo + c * a, hi + c * b
            else:
                lo, hi = lo + c * b, hi + c * a
        return lo, hi

    def constraint(self, con, ords):
        aff = con.aff
        if con.kind == "ge":
            def f(st):
                lo, hi = self._bounds(aff, ords, st)
                if lo >= 0:
                    return True
                if hi < 0:
                    return False
                return None
            return f
        m = con.modulus

        def g(st):
            lo, hi = self._bounds(aff, ords, st)
            if lo != hi:
                return None
            val = Fraction(lo)
            return val.denominator == 1 and val.numerator % m == 0
        return g

    def dnf(self, guards, ords):
        compiled = [[self.constraint(c, ords) for c in g] for g in guards]

        def f(st):
            out = False
            for g in compiled:
                val = True
                for c in g:
                    val = _and(val, c(st))
                    if val is False:
                        break
                out = _or(out, val)
                if out is True:
                    return True
            return out
        return f

    # formulas --------------------------------------------------------
    def node(self, n):
        if isinstance(n, fm.Truth):
            v = n.value
            return lambda st: v
        if isinstance(n, fm.Not):
            g = self.node(n.arg)
            return lambda st: _not(g(st))
        if isinstance(n, fm.And):
            a, b = self.node(n.left), self.node(n.right)

            def f_and(st):
                x = a(st)
                return False if x is False else _and(x, b(st))
            return f_and
        if isinstance(n, fm.Or):
            a, b = self.node(n.left), self.node(n.right)

            def f_or(st):
                x = a(st)
                return True if x is True else _or(x, b(st))
            return f_or
        if isinstance(n, fm.Atom):
            return self.atom(n)
        if isinstance(n, fm.Quant):
            return self.quant(n)
        raise TypeError(n)

    def atom(self, a):
        if a.sort is VG:
            ords = []

            def ord_map(o):
                ords.append(self.ord_interval(o.arg))
                return pb.Affine.var(f"_o{len(ords) - 1}")
            guards = pb.atom_to_dnf(a, None, ord_map)
            return self.dnf(guards, ords)
        if a.sort is RF:
            left, right = self.rf_term(a.left), self.rf_term(a.right)
            if a.op not in ("=", "!="):
                raise SortError("residue-field atoms compare with = or != only")
            eq = a.op == "="

            def f(st):
                x = left(st)
                if x is None:
                    return None
                y = right(st)
                if y is None:
                    return None
                return (x == y) == eq
            return f
        # VF equality: undecided whenever the difference vanishes at this depth
        ev = self.vf_poly(fm.BinOp("-", a.left, a.right, VF))
        eq = a.op == "="
        if ev is None:
            return lambda st: eq

        def g(st):
            if st.ring.ord_ac(ev(st)) is not None:
                return not eq
            return None
        return g

    def quant(self, q):
        body = q.body
        if q.sort is VG:
            ords = []

            def ord_map(o):
                ords.append(self.ord_interval(o.arg))
                return pb.Affine.var(f"_o{len(ords) - 1}")
            guards = pb.node_to_dnf(q, None, ord_map)
            return self.dnf(guards, ords)
        inner = self.node(body)
        name, exists = q.var, q.kind == "exists"
        if q.sort is RF:
            elems = list(self.F.elements())

            def f(st):
                saved = st.rf.get(name)
                out = False if exists else True
                for x in elems:
                    st.rf[name] = x
                    val = inner(st)
                    out = _or(out, val) if exists else _and(out, val)
                    if out is exists:
                        break
                _restore(st.rf, name, saved)
                return out
            return f
        K = self.K

        def g(st):
            # bounded search over the valuation ring at the current depth
            saved = st.vf.get(name)
            out = False if exists else True
            for y in _all_classes(K, st.n):
                st.vf[name] = y
                val = inner(st)
                out = _or(out, val) if exists else _and(out, val)
                if out is exists:
                    break
            _restore(st.vf, name, saved)
            return out
        return g


def _axis(t):
    """Variable x when the VF term is x + c or -x + c with c constant."""
    poly = fm.vf_poly(t)
    lin = [(mono, e, c) for (mono, e), c in poly.items() if mono]
    if len(lin) == 1:
        mono, e, c = lin[0]
        if len(mono) == 1 and mono[0][1] == 1 and e == 0 and c in (1, -1):
            return mono[0][0]
    return None


def _restore(env, name, saved):
    if saved is None:
        env.pop(name, None)
    else:
        env[name] = saved


def _all_classes(K, n):
    if K.kind == "Qp":
        return range(K.p ** n)
    return itertools.product(list(K.residue.elements()), repeat=n)


def compile_formula(f, K):
    return _Compiler(K).node(f.body if isinstance(f, fm.Formula) else f)


def _parse(f):
    return fm.parse(f, mode="oracle") if isinstance(f, str) else f


# ------------------------------------------------------- point evaluation

def eval_formula(f, K, point=(), rf=(), vg=()):
    """Truth value at a point; VF coordinates are :class:`LocalElement` s."""
    f = _parse(f)
    vf_names = f.names(VF)
    point = tuple(point)
    n = min((e.precision for e in point), default=1)
    R = K.ring(n)
    st = _State(n, R, {v: e.value(n) for v, e in zip(vf_names, point)},
                dict(zip(f.names(RF), rf)), dict(zip(f.names(VG), vg)))
    val = compile_formula(f, K)(st)
    if val is None:
        raise PrecisionExhausted(f"undecided at precision {n}")
    return val


# --------------------------------------------------------------- volumes

@dataclass
class VolumeResult:
    """Certified volume of a definable subset of the unit polydisc."""

    value: Fraction
    level: int
    status: str  # exact | tail-exact | lower-bound-only
    field: LocalField
    inside: int | None = None  # inside mass in units of level-k classes
    undecided: int = 0
    lower: Fraction = Fraction(0)
    undecided_mass: Fraction = Fraction(0)
    contributions: list = field(default_factory=list)

    def report_line(self):
        inside = "-" if self.inside is None else str(self.inside)
        return (f"field={self.field.name} p={self.field.p} k={self.level} inside={inside} "
                f"undecided={self.undecided} vol={_frac(self.value)} status={self.status}")


def _frac(x):
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _refine(f, K, weight, params, max_depth, budget):
    """Yield ``(depth, decided mass, inside count, frontier size, undecided mass)``."""
    comp = _Compiler(K)
    test = comp.node(f.body)
    names = f.names(VF)
    m = len(names)
    wfun = None
    if weight is not None:
        wfun = comp.vg_affine(weight)
    rf_env = dict(params.get("rf", {}))
    vg_env = dict(params.get("vg", {}))
    q = K.q
    frontier = [tuple(K.root_class() for _ in names)]
    evals = 0
    for n in range(max_depth + 1):
        R = K.ring(n)
        cls_mass = Fraction(1, q ** (m * n))
        mass = Fraction(0)
        count = 0
        nxt = []
        for cls in frontier:
            evals += 1
            if evals > budget:
                raise BudgetExceeded(f"more than {budget} class evaluations")
            st = _State(n, R, dict(zip(names, cls)), rf_env, vg_env)
            val = test(st)
            if val is True and wfun is not None:
                w = _class_weight(wfun, st, q, m)
                if w is None:
                    val = None
                else:
                    mass += cls_mass * w
                    count += 1
                    continue
            if val is True:
                mass += cls_mass
                count += 1
            elif val is None:
                nxt.append(cls)
        und_mass = cls_mass * len(nxt)
        yield n, mass, count, nxt, und_mass
        if not nxt or n == max_depth:
            return
        frontier = [tuple(c) for cls in nxt
                    for c in itertools.product(*(K.children(x, n) for x in cls))]


def _class_weight(wfun, st, q, m):
    """Average of q^(-weight) over a class, or ``None`` if not computable.

    Ords that are not yet determined are allowed when each measures a
    distinct coordinate translate; on a ball of radius q^(-n) the value
    ord = n + k has relative measure (1 - 1/q) q^(-k).
    """
    aff, ords, axes = wfun
    exponent = aff.const
    used = set()
    factor = Fraction(1)
    for v, c in aff.coeffs:
        if not v.startswith("_o"):
            exponent += c * st.vg[v]
            continue
        i = int(v[2:])
        lo, hi = ords[i](st)
        if lo == hi:
            exponent += c * lo
            continue
        axis = axes[i]
        if axis is None or axis in used or Fraction(c).denominator != 1:
            return None
        used.add(axis)
        s = 1 + c  # decay rate of q^(-c ord) against the measure q^(-ord)
        if s <= 0:
            raise NotSummable("weight grows faster than the measure decays")
        n = st.n
        factor *= (1 - Fraction(1, q)) * Fraction(q) ** (n - s * n) / (1 - Fraction(q) ** -s)
        # the value n*c of the ord offsets is folded into the factor above
    if Fraction(exponent).denominator != 1:
        return None
    return factor * Fraction(q) ** -int(exponent)


def volume(f, K, level=3, weight=None, params=None, tail_depth=24, budget=EVAL_BUDGET, tail=True):
    """Volume (or weighted integral of q^(-weight)) of ``f`` inside R^m.

    Classes are refined adaptively up to ``level``; if undecided mass
    remains and ``tail`` is set, refinement continues up to
    ``level + tail_depth`` and the per-depth contributions are summed as a
    verified linear recurrent series.
    """
    f = _parse(f)
    m = len(f.names(VF))
    if K.q ** (m * level) > CLASS_LIMIT:
        raise BudgetExceeded(f"q^(m k) = {K.q}^{m * level} exceeds {CLASS_LIMIT}")
    if isinstance(weight, str):
        weight = fm.parse_term(weight, f.decls, VG)
    params = params or {}
    seq = []
    base = None
    depth = level + (tail_depth if tail else 0)
    it = _refine(f, K, weight, params, depth, budget)
    last = None
    try:
        for n, mass, count, frontier, und in it:
            seq.append(mass)
            last = (n, frontier, und)
            if n == level:
                lower = sum(seq, Fraction(0))
                inside = None if weight is not None else int(lower * K.q ** (m * level))
                base = VolumeResult(lower, level, "exact" if not frontier else "lower-bound-only", K,
                                    inside, len(frontier), lower, und, list(seq))
                if not frontier:
                    return base
    except BudgetExceeded:
        if base is None:
            raise
    n, frontier, und = last
    total = sum(seq, Fraction(0))
    if base is None:  # decided before reaching the level
        inside = None if weight is not None else int(total * K.q ** (m * level))
        return VolumeResult(total, level, "exact", K, inside, 0, total, Fraction(0), list(seq))
    if not frontier:
        base.value, base.status, base.contributions = total, "exact", list(seq)
        base.level = n
        return base
    s = series_sum(seq)
    if s is not None:
        base.value, base.status, base.contributions = s, "tail-exact", list(seq)
    return base


def integrate_numeric(f, K, weight=None, level=3, params=None):
    """Exact integral of ``q^(-weight)`` over ``f``; raises if uncertified."""
    res = volume(f, K, level=level, weight=weight, params=params)
    if res.status == "lower-bound-only":
        raise PrecisionExhausted(f"could not certify the tail beyond level {res.level}")
    return res


# --------------------------------------------------- recurrent series

def berlekamp_massey(seq):
    """Shortest linear recurrence over Q: returns the connection polynomial
    ``C`` (``C[0] = 1``) with ``sum_j C[j] s[i-j] = 0`` for ``i >= L``."""
    s = [Fraction(x) for x in seq]
    C, B = [Fraction(1)], [Fraction(1)]
    L, m, b = 0, 1, Fraction(1)
    for n in range(len(s)):
        d = s[n] + sum(C[i] * s[n - i] for i in range(1, L + 1))
        if d == 0:
            m += 1
            continue
        coef = d / b
        T = list(C)
        C = C + [Fraction(0)] * max(0, len(B) + m - len(C))
        for i, bi in enumerate(B):
            C[i + m] -= coef * bi
        if 2 * L <= n:
            L, B, b, m = n + 1 - L, T, d, 1
        else:
            m += 1
    return C[:L + 1] + [Fraction(0)] * max(0, L + 1 - len(C)), L


def series_sum(seq, checks=4):
    """Sum of a linear recurrent series fitted on a prefix of ``seq``.

    Returns ``None`` when the fit is not confirmed by ``checks`` further
    terms; raises :class:`NotSummable` when the recurrence diverges.
    """
    seq = [Fraction(x) for x in seq]
    if len(seq) <= checks:
        return None
    C, L = berlekamp_massey(seq[:len(seq) - checks])
    if 2 * L + 2 > len(seq) - checks:
        return None
    for i in range(L, len(seq)):
        if sum(C[j] * seq[i - j] for j in range(L + 1)) != 0:
            return None
    if L == 0:
        return Fraction(0)
    # characteristic roots are the reciprocals of the roots of C
    roots = np.roots([float(c) for c in reversed(C)])
    if len(roots) and min(abs(r) for r in roots) <= 1 + 1e-12:
        raise NotSummable("the level contributions do not decay")
    P = [sum(C[j] * seq[i - j] for j in range(i + 1) if j <= L) for i in range(L)]
    return sum(P, Fraction(0)) / sum(C, Fraction(0))


# --------------------------------------------------------- comparisons

@dataclass
class AkeRow:
    p: int
    qp: VolumeResult | None
    laurent: VolumeResult | None
    agree: bool | None
    note: str = ""


@dataclass
class AkeReport:
    formula: str
    rows: list
    threshold: int  # every tested p above this agrees

    def lines(self):
        out = [f"# {self.formula}", "p | Qp | Fp((t)) | agree"]
        for r in self.rows:
            a = "-" if r.qp is None else f"{_frac(r.qp.value)} ({r.qp.status})"
            b = "-" if r.laurent is None else f"{_frac(r.laurent.value)} ({r.laurent.status})"
            out.append(f"{r.p} | {a} | {b} | {r.agree if r.agree is not None else r.note}")
        out.append(f"N = {self.threshold}")
        return out


def ake_compare(f, primes=(2, 3, 5, 7), level=3, weight=None):
    """Compare volumes over Q_p and F_p((t)) for each p."""
    text = f if isinstance(f, str) else str(f)
    f = _parse(f)
    rows = []
    for p in primes:
        try:
            a = volume(f, LocalField.qp(p), level, weight)
            b = volume(f, LocalField.laurent(p), level, weight)
        except (PrecisionExhausted, BudgetExceeded) as e:
            rows.append(AkeRow(p, None, None, None, type(e).__name__))
            continue
        decided = a.status != "lower-bound-only" and b.status != "lower-bound-only"
        rows.append(AkeRow(p, a, b, (a.value == b.value) if decided else None,
                           "" if decided else "PrecisionExhausted"))
    bad = [r.p for r in rows if r.agree is not True]
    return AkeReport(text, rows, max(bad, default=0))


# ----------------------------------------------------------- Terjanian

TERJANIAN = (
    (1, (2, 1, 1)), (1, (1, 2, 1)), (1, (1, 1, 2)),
    (1, (2, 2, 0)), (1, (0, 2, 2)), (1, (2, 0, 2)),
    (-1, (4, 0, 0)), (-1, (0, 4, 0)), (-1, (0, 0, 4)),
)


def terjanian_n(X, Y, Z, form=TERJANIAN):
    out = 0
    for c, (a, b, d) in form:
        out = out + c * X ** a * Y ** b * Z ** d
    return out


@dataclass
class TerjanianReport:
    ok: bool
    zero_classes: int  # x in (Z/4)^9 with f(x) = 0 mod 4
    witness: tuple | None

    def line(self):
        if self.ok:
            return (f"PASS terjanian: {self.zero_classes} of {4 ** 9} classes mod 4 have f = 0 mod 4, "
                    "all with x = 0 mod 2; h(x, y) = f(x) + 4 f(y) has no primitive zero in Q_2")
        return f"FAIL terjanian: witness {self.witness}"


def terjanian_verify(form=TERJANIAN):
    """Check ``f(x) = 0 mod 4 => x = 0 mod 2`` on all of (Z/4)^9.

    The descent for h(x, y) = f(x) + 4 f(y) then follows: a zero forces x
    even, so f(x) = 16 f(x/2) and hence f(y) = 0 mod 4, so y is even too.
    """
    grid = np.indices((4,) * 9).reshape(9, -1).astype(np.int64)
    f = sum(terjanian_n(grid[3 * i], grid[3 * i + 1], grid[3 * i + 2], form) for i in range(3))
    zero = (f % 4) == 0
    odd = (grid % 2).any(axis=0)
    bad = np.nonzero(zero & odd)[0]
    # homogeneity of degree 4 gives f(2x) = 16 f(x) = 0 mod 16 on the even classes
    if bad.size:
        return TerjanianReport(False, int(zero.sum()), tuple(int(v) for v in grid[:, bad[0]]))
    return TerjanianReport(True, int(zero.sum()), None)


def center_value(K, terms, n):
    """Ring element mod pi^n of a series ``{exponent: rational}`` in R."""
    R = K.ring(n)
    acc = R.zero
    for e, c in terms.items():
        if e < 0:
            raise ValueError("center lies outside the valuation ring")
        if e >= n:
            continue
        c = Fraction(c)
        if K.kind == "Qp":
            if c.denominator % K.p == 0:
                raise ValueError(f"{c} is not p-integral")
            val = c.numerator * pow(c.denominator, -1, R.mod) * K.p ** e
            acc = R.add(acc, val % R.mod)
        else:
            digs = [0] * n
            digs[e] = K.residue.from_int(c)
            acc = R.add(acc, tuple(digs))
    return acc
