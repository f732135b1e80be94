"""Presburger sets over Z^r and exact summation of exponential-polynomial series.

Sets are finite unions (DNF) of guards; a guard is a conjunction of
normalized constraints ``aff >= 0`` or ``aff == 0 mod m``.  Quantifiers are
eliminated with Cooper's method.  Summation eliminates one variable at a
time, splitting into residue classes and into pieces on which a single lower
and upper bound are active, and closes each one-dimensional sum with
geometric and Eulerian series.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from . import formula as fm
from .errors import NotSummable, ParseError, SortError, UnboundedDegenerate
from .lefring import LefschetzElement, ONE, ZERO

MAX_DEGREE = 4


def _lcm(*xs):
    out = 1
    for x in xs:
        out = out * x // math.gcd(out, x)
    return out


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _floor(x: Fraction) -> int:
    return x.numerator // x.denominator


# ------------------------------------------------------------ affine forms

@dataclass(frozen=True, order=True)
class Affine:
    """``sum c_v * v + const`` with rational coefficients."""

    coeffs: tuple = ()
    const: Fraction = Fraction(0)

    @staticmethod
    def make(coeffs=None, const=0):
        items = tuple(sorted((v, Fraction(c)) for v, c in (coeffs or {}).items() if c != 0))
        return Affine(items, Fraction(const))

    @staticmethod
    def var(name, coeff=1):
        return Affine.make({name: coeff})

    @staticmethod
    def constant(c):
        return Affine((), Fraction(c))

    def as_dict(self):
        return dict(self.coeffs)

    def coeff(self, v):
        for name, c in self.coeffs:
            if name == v:
                return c
        return Fraction(0)

    @property
    def vars(self):
        return tuple(v for v, _ in self.coeffs)

    def is_const(self):
        return not self.coeffs

    def __add__(self, other):
        if not isinstance(other, Affine):
            other = Affine.constant(other)
        d = self.as_dict()
        for v, c in other.coeffs:
            d[v] = d.get(v, 0) + c
        return Affine.make(d, self.const + other.const)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        if not isinstance(other, Affine):
            other = Affine.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return Affine.constant(other) - self

    def scale(self, k):
        k = Fraction(k)
        return Affine.make({v: c * k for v, c in self.coeffs}, self.const * k)

    def drop(self, v):
        return Affine.make({n: c for n, c in self.coeffs if n != v}, self.const)

    def subst(self, v, aff):
        c = self.coeff(v)
        if c == 0:
            return self
        return self.drop(v) + aff.scale(c)

    def rename(self, mapping):
        d = {}
        for v, c in self.coeffs:
            n = mapping.get(v, v)
            d[n] = d.get(n, 0) + c
        return Affine.make(d, self.const)

    def evaluate(self, env):
        return sum((c * env[v] for v, c in self.coeffs), self.const)

    def denominator(self):
        return _lcm(*(c.denominator for _, c in self.coeffs), self.const.denominator)

    def __str__(self):
        parts = []
        for v, c in self.coeffs:
            mag = abs(c)
            body = v if mag == 1 else f"{_fmt_frac(mag)}*{v}"
            parts.append(("-" if c < 0 else "+", body))
        if self.const or not parts:
            parts.append(("-" if self.const < 0 else "+", _fmt_frac(abs(self.const))))
        out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out


def _fmt_frac(c):
    return str(c.numerator) if c.denominator == 1 else f"({c.numerator}/{c.denominator})"


# ------------------------------------------------------------- constraints

@dataclass(frozen=True, order=True)
class Constraint:
    """``aff >= 0`` (kind ``'ge'``) or ``aff == 0 mod modulus`` (kind ``'cong'``)."""

    kind: str
    aff: Affine
    modulus: int = 0

    def holds(self, env):
        val = self.aff.evaluate(env)
        if self.kind == "ge":
            return val >= 0
        return val.denominator == 1 and val.numerator % self.modulus == 0

    def __str__(self):
        if self.kind == "ge":
            return f"{self.aff} >= 0"
        return f"{self.aff} == 0 mod {self.modulus}"


_TRUE = "true"
_FALSE = "false"


def ineq(aff):
    """Normalized ``aff >= 0``: a Constraint, or the markers for true/false."""
    d = aff.denominator()
    aff = aff.scale(d)
    coeffs = {v: int(c) for v, c in aff.coeffs}
    const = int(aff.const)
    if not coeffs:
        return _TRUE if const >= 0 else _FALSE
    g = math.gcd(*coeffs.values())
    return Constraint("ge", Affine.make({v: c // g for v, c in coeffs.items()}, const // g))


def cong(aff, m):
    """Normalized ``aff == 0 mod m``."""
    d = aff.denominator()
    aff, m = aff.scale(d), m * d
    coeffs = {v: int(c) % m for v, c in aff.coeffs}
    coeffs = {v: c for v, c in coeffs.items() if c}
    const = int(aff.const) % m
    g = math.gcd(m, const, *coeffs.values())
    m //= g
    if m == 1:
        return _TRUE
    if not coeffs:
        return _TRUE if const // g == 0 else _FALSE
    return Constraint("cong", Affine.make({v: c // g for v, c in coeffs.items()}, const // g), m)


def make_guard(cons):
    """Conjunction of constraints as a frozenset, or ``None`` if trivially false."""
    out = set()
    for c in cons:
        if isinstance(c, str):
            if c == _FALSE:
                return None
            continue
        if c.kind == "ge":
            c = ineq(c.aff)
        else:
            c = cong(c.aff, c.modulus)
        if c == _FALSE:
            return None
        if c != _TRUE:
            out.add(c)
    # contradictory pair of opposite inequalities with empty gap
    byvec = {}
    for c in out:
        if c.kind == "ge":
            byvec.setdefault(c.aff.coeffs, []).append(c.aff.const)
    for vec, consts in byvec.items():
        neg = tuple((v, -k) for v, k in vec)
        if neg in byvec and min(consts) + min(byvec[neg]) < 0:
            return None
    return frozenset(out)


def negate(c):
    """Disjoint list of constraints whose union is the complement of ``c``."""
    if c.kind == "ge":
        return [ineq(-c.aff - 1)]
    return [cong(c.aff - r, c.modulus) for r in range(1, c.modulus)]


def guard_vars(guard):
    return sorted({v for c in guard for v in c.aff.vars})


def guard_holds(guard, env):
    return all(c.holds(env) for c in guard)


def guard_complement(guard):
    """Disjoint DNF of the complement of a guard."""
    out = []
    prefix = []
    for c in sorted(guard):
        for nc in negate(c):
            g = make_guard(prefix + [nc])
            if g is not None:
                out.append(g)
        prefix.append(c)
    return out


# ------------------------------------------------------ Cooper elimination

def eliminate(guard, x):
    """Guards whose union is ``exists x: guard``."""
    keep, ineqs, congs = [], [], []
    for c in guard:
        a = c.aff.coeff(x)
        if a == 0:
            keep.append(c)
        elif c.kind == "ge":
            ineqs.append(c)
        else:
            congs.append(c)
    if not ineqs and not congs:
        return [guard]
    delta = _lcm(*(abs(int(c.aff.coeff(x))) for c in ineqs + congs))
    lowers, uppers, mods = [], [], []
    for c in ineqs:
        a = int(c.aff.coeff(x))
        rest = c.aff.drop(x).scale(delta // abs(a))
        if a > 0:
            lowers.append(-rest)
        else:
            uppers.append(rest)
    for c in congs:
        a = int(c.aff.coeff(x))
        k = delta // abs(a)
        rest = c.aff.drop(x).scale(k * (1 if a > 0 else -1))
        mods.append((rest, c.modulus * k))
    if delta > 1:
        mods.append((Affine(), delta))
    D = _lcm(*(m for _, m in mods)) if mods else 1

    def inst(val):
        cons = list(keep)
        cons += [ineq(val - lb) for lb in lowers]
        cons += [ineq(ub - val) for ub in uppers]
        cons += [cong(val + rest, m) for rest, m in mods]
        return make_guard(cons)

    if not lowers and not uppers:
        cands = [Affine.constant(j) for j in range(D)]
    elif lowers and (not uppers or len(lowers) <= len(uppers)):
        cands = [lb + j for lb in lowers for j in range(D)]
    else:
        cands = [ub - j for ub in uppers for j in range(D)]
    out = []
    seen = set()
    for val in cands:
        g = inst(val)
        if g is not None and g not in seen:
            seen.add(g)
            out.append(g)
    return out


def _pick_var(guard, candidates):
    def cost(v):
        lo = sum(1 for c in guard if c.kind == "ge" and c.aff.coeff(v) > 0)
        hi = sum(1 for c in guard if c.kind == "ge" and c.aff.coeff(v) < 0)
        mods = [c.modulus for c in guard if c.kind == "cong" and c.aff.coeff(v) != 0]
        return min(lo, hi) * _lcm(*mods)
    return min(candidates, key=lambda v: (cost(v), v))


def feasible(guard):
    """Decide whether a guard has an integer solution."""
    if guard is None:
        return False
    vs = guard_vars(guard)
    if not vs:
        return True
    x = _pick_var(guard, vs)
    return any(feasible(g) for g in eliminate(guard, x))


def project_guard(guard, xs):
    out = [guard]
    for x in xs:
        nxt = []
        for g in out:
            nxt.extend(eliminate(g, x))
        out = [g for g in dict.fromkeys(nxt) if feasible(g)]
    return out


def var_bounds(guard, var):
    """Integer ``(lo, hi)`` bounding ``var`` on the guard; ``None`` entries if unbounded."""
    others = [v for v in guard_vars(guard) if v != var]
    lo_all, hi_all = [], []
    for g in project_guard(guard, others):
        los = [_ceil(-c.aff.const / c.aff.coeff(var)) for c in g if c.kind == "ge" and c.aff.coeff(var) > 0]
        his = [_floor(c.aff.const / -c.aff.coeff(var)) for c in g if c.kind == "ge" and c.aff.coeff(var) < 0]
        lo_all.append(max(los) if los else None)
        hi_all.append(min(his) if his else None)
    if not lo_all:
        return None, None
    lo = None if None in lo_all else min(lo_all)
    hi = None if None in hi_all else max(hi_all)
    return lo, hi


# ------------------------------------------------------------- DNF algebra

def _prune(guards):
    out = []
    for g in dict.fromkeys(guards):
        if g is not None and feasible(g):
            out.append(g)
    return out


def dnf_and(a, b):
    return _prune(make_guard(list(g) + list(h)) for g in a for h in b)


def dnf_not(a):
    out = [frozenset()]
    for g in a:
        out = dnf_and(out, guard_complement(g))
    return out


def dnf_disjoint(a):
    """Same union as ``a`` with pairwise disjoint guards."""
    out = []
    for i, g in enumerate(a):
        pieces = [g]
        for h in a[:i]:
            pieces = dnf_and(pieces, guard_complement(h))
        out.extend(pieces)
    return out


@dataclass(frozen=True)
class PresburgerSet:
    """Subset of Z^r given by a DNF over the named coordinates ``vars``."""

    vars: tuple
    guards: tuple = (frozenset(),)

    @property
    def dimension(self):
        return len(self.vars)

    @staticmethod
    def universe(vars):
        return PresburgerSet(tuple(vars), (frozenset(),))

    @staticmethod
    def empty(vars):
        return PresburgerSet(tuple(vars), ())

    def _env(self, point):
        if isinstance(point, dict):
            return point
        return dict(zip(self.vars, point))

    def contains(self, point):
        env = self._env(point)
        return any(guard_holds(g, env) for g in self.guards)

    def is_empty(self):
        return not any(feasible(g) for g in self.guards)

    def simplify(self):
        return PresburgerSet(self.vars, tuple(_prune(self.guards)))

    def intersect(self, other):
        return PresburgerSet(self.vars, tuple(dnf_and(self.guards, other.guards)))

    def union(self, other):
        return PresburgerSet(self.vars, tuple(_prune(self.guards + other.guards)))

    def complement(self):
        return PresburgerSet(self.vars, tuple(dnf_not(self.guards)))

    def difference(self, other):
        return self.intersect(other.complement())

    def disjoint(self):
        return PresburgerSet(self.vars, tuple(dnf_disjoint(list(self.guards))))

    def project(self, var):
        out = []
        for g in self.guards:
            out.extend(eliminate(g, var))
        return PresburgerSet(tuple(v for v in self.vars if v != var), tuple(_prune(out)))

    def points(self, radius):
        """All points in the box ``[-radius, radius]^r``, in lexicographic order."""
        rng = range(-radius, radius + 1)
        return [p for p in itertools.product(rng, repeat=len(self.vars)) if self.contains(p)]

    def to_formula_text(self):
        decl = f"vg {', '.join(self.vars)}; " if self.vars else ""
        return decl + guards_text(self.guards)

    def __str__(self):
        return self.to_formula_text()


def guard_text(g):
    return " & ".join(str(c) for c in sorted(g)) or "true"


def guards_text(guards):
    if not guards:
        return "false"
    if len(guards) == 1:
        return guard_text(guards[0])
    return " | ".join(f"({guard_text(g)})" if len(g) > 1 else guard_text(g) for g in guards)


# --------------------------------------------------- formulas <-> sets

def term_to_affine(t, env=None, ord_map=None):
    """Affine form of a value-group term.

    ``env`` renames variables; ``ord_map`` maps an ``Ord`` node to an Affine.
    """
    env = env or {}
    if isinstance(t, fm.Num):
        return Affine.constant(t.value)
    if isinstance(t, fm.Var):
        if t.sort is not fm.Sort.VG:
            raise SortError(f"{t.name!r} is not a value-group variable")
        return Affine.var(env.get(t.name, t.name))
    if isinstance(t, fm.Neg):
        return -term_to_affine(t.arg, env, ord_map)
    if isinstance(t, fm.BinOp):
        a = term_to_affine(t.left, env, ord_map)
        b = term_to_affine(t.right, env, ord_map)
        if t.op == "+":
            return a + b
        if t.op == "-":
            return a - b
        if a.is_const():
            return b.scale(a.const)
        if b.is_const():
            return a.scale(b.const)
        raise SortError("value-group products need a constant factor")
    if isinstance(t, fm.Ord):
        if ord_map is None:
            raise SortError("ord(...) is not allowed in a pure value-group formula")
        return ord_map(t)
    raise SortError(f"not a value-group term: {fm.pretty_term(t)}")


def atom_to_dnf(a, env=None, ord_map=None):
    left = term_to_affine(a.left, env, ord_map)
    right = term_to_affine(a.right, env, ord_map)
    diff = left - right
    if a.op == "=":
        g = make_guard([ineq(diff), ineq(-diff)])
        return [g] if g is not None else []
    if a.op == "!=":
        return _prune([make_guard([ineq(diff - 1)]), make_guard([ineq(-diff - 1)])])
    if a.op == ">=":
        g = make_guard([ineq(diff)])
    elif a.op == ">":
        g = make_guard([ineq(diff - 1)])
    elif a.op == "<=":
        g = make_guard([ineq(-diff)])
    elif a.op == "<":
        g = make_guard([ineq(-diff - 1)])
    elif a.op == "mod":
        g = make_guard([cong(diff, a.modulus)])
    else:
        raise SortError(f"unknown comparison {a.op!r}")
    return [g] if g is not None else []


_fresh = itertools.count()


def node_to_dnf(node, env=None, ord_map=None, atom_hook=None):
    """DNF of a value-group formula node, eliminating VG quantifiers.

    ``atom_hook(atom)`` may return a DNF for atoms of other sorts.
    """
    env = dict(env or {})
    if isinstance(node, fm.Truth):
        return [frozenset()] if node.value else []
    if isinstance(node, fm.Atom):
        if node.sort is not fm.Sort.VG:
            if atom_hook is None:
                raise SortError("only value-group atoms can be converted to a Presburger set")
            return atom_hook(node)
        return atom_to_dnf(node, env, ord_map)
    if isinstance(node, fm.Not):
        return dnf_not(node_to_dnf(node.arg, env, ord_map, atom_hook))
    if isinstance(node, fm.And):
        return dnf_and(node_to_dnf(node.left, env, ord_map, atom_hook),
                       node_to_dnf(node.right, env, ord_map, atom_hook))
    if isinstance(node, fm.Or):
        return _prune(node_to_dnf(node.left, env, ord_map, atom_hook)
                      + node_to_dnf(node.right, env, ord_map, atom_hook))
    if isinstance(node, fm.Quant):
        if node.sort is not fm.Sort.VG:
            raise SortError("only value-group quantifiers can be eliminated here")
        name = f"_b{next(_fresh)}"
        env[node.var] = name
        body = node_to_dnf(node.body, env, ord_map, atom_hook)
        if node.kind == "exists":
            out = []
            for g in body:
                out.extend(eliminate(g, name))
            return _prune(out)
        neg = dnf_not(body)
        out = []
        for g in neg:
            out.extend(eliminate(g, name))
        return dnf_not(_prune(out))
    raise TypeError(node)


def vg_quantifier_eliminate(f):
    """Quantifier-free DNF (a :class:`PresburgerSet`) of a value-group formula."""
    if isinstance(f, str):
        f = fm.parse(f)
    for _, s in f.decls:
        if s is not fm.Sort.VG:
            raise SortError("formula has free variables outside the value group")
    return PresburgerSet(f.names(), tuple(node_to_dnf(f.body)))


def parse_set(text):
    """Parse a VG formula into a set; undeclared names are taken as VG variables."""
    text = text.strip()
    if not text.startswith(("vg ", "vf ", "rf ")):
        names = sorted(set(_idents(text)))
        if names:
            text = f"vg {', '.join(names)}; {text}"
    return vg_quantifier_eliminate(fm.parse(text))


def _idents(text):
    toks = fm.tokenize(text)
    bound = {tok.text for prev, tok in zip(toks, toks[1:])
             if tok.kind == "ident" and prev.text in ("vg", "rf", "vf")}
    return [tok.text for tok in toks if tok.kind == "ident" and tok.text not in bound]


# ------------------------------------------- polynomials with A coefficients

def _mono_mul(m1, m2):
    d = dict(m1)
    for v, e in m2:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def p_const(c):
    c = LefschetzElement.coerce(c)
    return {} if c.is_zero() else {(): c}


def p_var(v):
    return {((v, 1),): ONE}


def p_add(a, b):
    out = dict(a)
    for m, c in b.items():
        s = out.get(m, ZERO) + c
        if s.is_zero():
            out.pop(m, None)
        else:
            out[m] = s
    return out


def p_scale(a, c):
    c = LefschetzElement.coerce(c)
    if c.is_zero():
        return {}
    return {m: v * c for m, v in a.items()}


def p_mul(a, b):
    out = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            m = _mono_mul(m1, m2)
            s = out.get(m, ZERO) + c1 * c2
            if s.is_zero():
                out.pop(m, None)
            else:
                out[m] = s
    return out


def p_pow(a, n):
    out = p_const(1)
    for _ in range(n):
        out = p_mul(out, a)
    return out


def p_from_affine(aff):
    out = p_const(aff.const)
    for v, c in aff.coeffs:
        out = p_add(out, {((v, 1),): LefschetzElement.const(c)})
    return out


def p_degree(a):
    return max((sum(e for _, e in m) for m in a), default=0)


def p_vars(a):
    return sorted({v for m in a for v, _ in m})


def p_split(a, v):
    """``{exponent of v: coefficient polynomial}``."""
    out = {}
    for m, c in a.items():
        e = dict(m).pop(v, 0)
        rest = tuple((n, k) for n, k in m if n != v)
        out.setdefault(e, {})[rest] = c
    return out


def p_subst(a, v, aff):
    out = {}
    base = p_from_affine(aff)
    for e, q in p_split(a, v).items():
        out = p_add(out, p_mul(q, p_pow(base, e)))
    return out


def p_rename(a, mapping):
    out = {}
    for m, c in a.items():
        mm = _mono_mul((), tuple((mapping.get(n, n), k) for n, k in m))
        out = p_add(out, {mm: c})
    return out


def p_value(a, env):
    """Evaluate the variables, keeping the A-valued result."""
    out = ZERO
    for m, c in a.items():
        w = Fraction(1)
        for v, e in m:
            w *= Fraction(env[v]) ** e
        out = out + c * w
    return out


def p_str(a):
    if not a:
        return "0"
    parts = []
    for m, c in sorted(a.items()):
        mono = "*".join(v if e == 1 else f"{v}^{e}" for v, e in m)
        cs = str(c)
        if not mono:
            parts.append(f"[{cs}]")
        elif cs == "1":
            parts.append(mono)
        else:
            parts.append(f"[{cs}]*{mono}")
    return " + ".join(parts)


# ------------------------------------------------------ series closed forms

@lru_cache(maxsize=None)
def stirling2(n, k):
    if n == k:
        return 1
    if n == 0 or k == 0:
        return 0
    return k * stirling2(n - 1, k) + stirling2(n - 1, k - 1)


@lru_cache(maxsize=None)
def eulerian_series(i, s):
    """``sum_{n >= 0} n^i L^(s n)`` as a rational function in L (s != 0)."""
    w = LefschetzElement.L(s)
    inv = (ONE - w).inverse()
    out = ZERO
    for k in range(i + 1):
        c = stirling2(i, k)
        if c:
            out = out + c * math.factorial(k) * w ** k * inv ** (k + 1)
    return out


@lru_cache(maxsize=None)
def power_sum_coeffs(j):
    """Coefficients (lowest first) of ``S_j(N) = sum_{y=0}^{N-1} y^j``."""
    from . import _upoly as up
    out = []
    for k in range(j + 1):
        c = stirling2(j, k)
        if not c:
            continue
        falling = [Fraction(1)]
        for r in range(k + 1):
            falling = up.mul(falling, [Fraction(-r), Fraction(1)])
        term = up.scale(falling, Fraction(c * math.factorial(k), math.factorial(k + 1)))
        out = up.add(out, term)
    return tuple(out)


def _power_sum_poly(j, arg):
    base = p_from_affine(arg)
    out = {}
    for e, c in enumerate(power_sum_coeffs(j)):
        if c:
            out = p_add(out, p_scale(p_pow(base, e), c))
    return out


def _tail(j, s, b):
    """``sum_{y >= b} y^j L^(s y)`` as ``(exponent shift, polynomial)``."""
    base = p_from_affine(b)
    poly = {}
    for i in range(j + 1):
        poly = p_add(poly, p_scale(p_pow(base, j - i), math.comb(j, i) * eulerian_series(i, s)))
    return b.scale(s), poly


def _range_sum(j, s, lo, hi):
    """Closed form of ``sum_{y=lo}^{hi} y^j L^(s y)`` as ``[(shift, poly), ...]``."""
    if lo is None:
        raise NotSummable("summation variable is unbounded in both directions")
    if s == 0:
        if hi is None:
            raise NotSummable("non-decaying summand on an infinite range")
        poly = p_add(_power_sum_poly(j, hi + 1), p_scale(_power_sum_poly(j, lo), -1))
        return [(Affine(), poly)]
    if hi is None:
        if s > 0:
            raise NotSummable("exponent grows along an infinite ray")
        return [_tail(j, s, lo)]
    e1, p1 = _tail(j, s, lo)
    e2, p2 = _tail(j, s, hi + 1)
    return [(e1, p1), (e2, p_scale(p2, -1))]


# ------------------------------------------------------ one-variable split

@dataclass(frozen=True)
class Piece:
    """On ``guard`` the variable equals ``sign * (M*z + rho)`` with z in [lo, hi]."""

    guard: frozenset
    sign: int
    M: int
    rho: int
    lo: Affine | None
    hi: Affine | None


def _reflect(c, y):
    return Constraint(c.kind, c.aff.subst(y, Affine.var(y, -1)), c.modulus)


def split_var(guard, y, extra_modulus=1):
    """Disjoint pieces of ``guard`` with a single active lower and upper bound on ``y``."""
    inv = [c for c in guard if c.aff.coeff(y) != 0]
    rest = [c for c in guard if c.aff.coeff(y) == 0]
    has_lo = any(c.kind == "ge" and c.aff.coeff(y) > 0 for c in inv)
    has_hi = any(c.kind == "ge" and c.aff.coeff(y) < 0 for c in inv)
    sign = 1
    if has_hi and not has_lo:
        sign = -1
        inv = [_reflect(c, y) for c in inv]
    M = _lcm(extra_modulus, *(c.modulus for c in inv if c.kind == "cong"))
    pieces = []
    for rho in range(M):
        sub = Affine.var(y, M) + rho
        g = make_guard(rest + [Constraint(c.kind, c.aff.subst(y, sub), c.modulus) for c in inv])
        if g is None:
            continue
        base = [c for c in g if c.aff.coeff(y) == 0]
        bounds = []
        for c in sorted(g):
            a = c.aff.coeff(y)
            if a == 0:
                continue
            assert c.kind == "ge"
            r = c.aff.drop(y)
            bounds.append((-r, int(a), True) if a > 0 else (r, int(-a), False))
        variants = [(base, [], [])]
        for num, k, is_low in bounds:
            nxt = []
            for b, ls, hs in variants:
                if k == 1 or num.is_const():
                    val = num.scale(Fraction(1, k))
                    if num.is_const():
                        val = Affine.constant(_ceil(val.const) if is_low else _floor(val.const))
                    opts = [(b, val)]
                else:
                    opts = []
                    for s in range(k):
                        b2 = make_guard(list(b) + [cong(num - s, k)])
                        if b2 is None:
                            continue
                        shift = (k - s) % k if is_low else -s
                        opts.append((list(b2), (num + shift).scale(Fraction(1, k))))
                for b2, val in opts:
                    if is_low:
                        nxt.append((list(b2), ls + [val], hs))
                    else:
                        nxt.append((list(b2), ls, hs + [val]))
            variants = nxt
        for b, ls, hs in variants:
            ls = list(dict.fromkeys(ls))
            hs = list(dict.fromkeys(hs))
            for jl in range(len(ls)) if ls else [None]:
                for jh in range(len(hs)) if hs else [None]:
                    conds = list(b)
                    if jl is not None:
                        conds += [ineq(ls[jl] - ls[i] - (1 if i < jl else 0)) for i in range(len(ls)) if i != jl]
                    if jh is not None:
                        conds += [ineq(hs[i] - hs[jh] - (1 if i < jh else 0)) for i in range(len(hs)) if i != jh]
                    lo = ls[jl] if jl is not None else None
                    hi = hs[jh] if jh is not None else None
                    if lo is not None and hi is not None:
                        conds.append(ineq(hi - lo))
                    g2 = make_guard(conds)
                    if g2 is not None and feasible(g2):
                        pieces.append(Piece(g2, sign, M, rho, lo, hi))
    return pieces


# ----------------------------------------------------------- summation

def combine(gterms):
    """Merge terms with equal guard and exponent; drop zero and empty ones."""
    acc = {}
    for g, e, p in gterms:
        key = (g, e)
        acc[key] = p_add(acc.get(key, {}), p)
    out = []
    for (g, e), p in acc.items():
        if p and feasible(g):
            out.append((g, e, p))
    return out


def sum_out(gterms, y):
    """Sum the variable ``y`` out of a list of ``(guard, exponent, poly)`` terms."""
    out = []
    for g, expo, poly in gterms:
        den = expo.coeff(y).denominator
        for pc in split_var(g, y, den):
            sub = Affine.var(y, pc.sign * pc.M) + pc.sign * pc.rho
            e = expo.subst(y, sub)
            s = e.coeff(y)
            assert s.denominator == 1
            e0 = e.drop(y)
            for j, q in p_split(p_subst(poly, y, sub), y).items():
                if not q:
                    continue
                for shift, tp in _range_sum(j, int(s), pc.lo, pc.hi):
                    out.append((pc.guard, e0 + shift, p_mul(q, tp)))
    return combine(out)


def total(gterms):
    """Value of a variable-free term list."""
    out = ZERO
    for g, e, p in gterms:
        if guard_vars(g) or e.vars or p_vars(p):
            raise ValueError("terms still depend on variables")
        assert e.const.denominator == 1
        out = out + p.get((), ZERO) * LefschetzElement.L(int(e.const))
    return out


def evaluate_gterms(gterms, env, q):
    """Exact value at a point for ``L = q``."""
    out = Fraction(0)
    q = Fraction(q)
    for g, e, p in gterms:
        if guard_holds(g, env):
            out += p_value(p, env).theta(q) * q ** e.evaluate(env)
    return out


# ------------------------------------------------------- public types

@dataclass(frozen=True)
class PiecewiseAffineMap:
    """Definable map to Z given by affine forms on disjoint guards."""

    domain: PresburgerSet
    pieces: tuple  # ((guard, Affine), ...)

    def __post_init__(self):
        for (g1, _), (g2, _) in itertools.combinations(self.pieces, 2):
            if any(feasible(make_guard(list(g1) + list(g2) + list(d))) for d in self.domain.guards):
                raise ValueError("pieces of a piecewise affine map overlap")

    @staticmethod
    def affine(domain, aff):
        return PiecewiseAffineMap(domain, ((frozenset(), aff),))

    def evaluate(self, point):
        env = self.domain._env(point)
        for g, aff in self.pieces:
            if guard_holds(g, env):
                val = aff.evaluate(env)
                if val.denominator != 1:
                    raise ValueError("piecewise affine map is not integer valued here")
                return int(val)
        raise ValueError("point outside every piece")


@dataclass(frozen=True)
class ExponentialSum:
    """``sum over the lattice of c * P(i) * L^phi(i)`` as guarded terms.

    Each term is ``(guard, exponent, poly)``: on the integer points of the
    guard it contributes ``poly(i) * L^exponent(i)`` where ``poly`` has
    coefficients in A.
    """

    vars: tuple
    terms: tuple = ()

    @staticmethod
    def build(domain, terms):
        """``terms``: iterable of ``(coef, poly, exponent)`` with ``poly`` a
        ``{monomial: number}`` dict and ``exponent`` an Affine or
        PiecewiseAffineMap."""
        out = []
        guards = PresburgerSet(domain.vars, domain.guards).disjoint().guards
        for coef, poly, expo in terms:
            pa = p_scale({m: LefschetzElement.const(c) for m, c in poly.items() if c}, coef)
            if p_degree(pa) > MAX_DEGREE:
                raise ValueError(f"polynomial degree exceeds the cap of {MAX_DEGREE}")
            pieces = expo.pieces if isinstance(expo, PiecewiseAffineMap) else ((frozenset(), expo),)
            for g in guards:
                for pg, aff in pieces:
                    gg = make_guard(list(g) + list(pg))
                    if gg is not None and feasible(gg):
                        out.append((gg, aff, pa))
        return ExponentialSum(tuple(domain.vars), tuple(combine(out)))

    def __add__(self, other):
        if set(self.vars) != set(other.vars):
            raise ValueError("sums over different lattices cannot be added")
        return ExponentialSum(self.vars, tuple(combine(list(self.terms) + list(other.terms))))

    def scale(self, c):
        return ExponentialSum(self.vars, tuple(combine((g, e, p_scale(p, c)) for g, e, p in self.terms)))

    def restrict(self, S):
        out = []
        for g, e, p in self.terms:
            for h in S.guards:
                gg = make_guard(list(g) + list(h))
                if gg is not None:
                    out.append((gg, e, p))
        return ExponentialSum(self.vars, tuple(combine(out)))

    def sum_over(self, names):
        """Sum out the given variables, keeping the rest as parameters."""
        terms = list(self.terms)
        for y in names:
            terms = sum_out(terms, y)
        return ExponentialSum(tuple(v for v in self.vars if v not in names), tuple(terms))

    def sum(self, order=None):
        order = tuple(order or self.vars)
        return total(self.sum_over(order).terms)

    def is_summable(self):
        try:
            self.sum()
        except NotSummable:
            return False
        return True

    def value_at(self, point, q):
        env = dict(zip(self.vars, point)) if not isinstance(point, dict) else point
        return evaluate_gterms(self.terms, env, q)

    def partial_sum(self, q, radius):
        """Exact sum over the integer points of the box ``[-radius, radius]^r``."""
        q = Fraction(q)
        numeric = [(g, e, [(m, c.theta(q)) for m, c in p.items()]) for g, e, p in self.terms]
        rng = range(-radius, radius + 1)
        out = Fraction(0)
        for pt in itertools.product(rng, repeat=len(self.vars)):
            env = dict(zip(self.vars, pt))
            for g, e, poly in numeric:
                if not guard_holds(g, env):
                    continue
                val = Fraction(0)
                for m, c in poly:
                    w = c
                    for v, k in m:
                        w *= env[v] ** k
                    val += w
                out += val * q ** e.evaluate(env)
        return out

    def tail_bound(self, q, radius, cutoff=4000):
        """Upper bound (float) on the absolute sum outside ``[-radius, radius]^r``.

        Each guard is decomposed into regions ``base + sum n_k g_k``.  A point
        of a region outside the box has some ``n_k > (radius - |base|) /
        (K |g_k|)``; a union bound over k with the decay rate of the exponent
        along each generator bounds the tail.
        """
        qf = float(q)
        qx = Fraction(q)

        def series(e, slope, start, stop):
            stop = start + cutoff if stop is None else stop
            return sum(float(n) ** e * qf ** (slope * n) for n in range(max(start, 0), stop + 1))

        bound = 0.0
        for g, expo, poly in self.terms:
            for R in decompose(PresburgerSet(self.vars, (g,))):
                K = len(R.gens)
                names = [f"_n{k}" for k in range(K)]
                sub = {v: Affine.make({names[k]: R.gens[k][i] for k in range(K)}, R.base[i])
                       for i, v in enumerate(R.vars)}
                pp = poly
                for v, aff in sub.items():
                    pp = p_subst(pp, v, aff)
                ee = expo
                for v, aff in sub.items():
                    ee = ee.subst(v, aff)
                slopes = [float(ee.coeff(nm)) for nm in names]
                for k, rng in enumerate(R.ranges):
                    if rng is None and slopes[k] >= 0:
                        raise NotSummable("exponent does not decay along a ray")
                bmax = max((abs(x) for x in R.base), default=0)
                scale = qf ** float(ee.const)
                mons = [(dict(m), abs(float(c.theta(qx)))) for m, c in pp.items()]
                if K == 0:
                    if bmax > radius:
                        bound += scale * sum(c for _, c in mons)
                    continue
                for k in range(K):
                    gmax = max(abs(x) for x in R.gens[k])
                    start = math.floor((radius - bmax) / (K * gmax)) + 1
                    if R.ranges[k] is not None and start > R.ranges[k]:
                        continue
                    for m, c in mons:
                        prod = c * scale
                        for l in range(K):
                            lo = start if l == k else 0
                            prod *= series(m.get(names[l], 0), slopes[l], lo, R.ranges[l])
                        bound += prod
        return bound * (1 + 1e-9)

    def __str__(self):
        lines = []
        for g, e, p in self.terms:
            lines.append(f"({p_str(p)}) * L^({e}) on {guard_text(g)}")
        return "\n".join(lines) or "0"


# ------------------------------------------------------------ regions

@dataclass(frozen=True)
class Region:
    """``{base + sum n_k gens_k : 0 <= n_k <= ranges_k}`` (``None`` is unbounded)."""

    vars: tuple
    base: tuple
    gens: tuple = ()
    ranges: tuple = ()

    def coefficients(self, point):
        """Solve ``base + G n = point`` exactly; ``None`` if no rational solution."""
        rows = [[Fraction(g[i]) for g in self.gens] + [Fraction(point[i] - self.base[i])]
                for i in range(len(self.vars))]
        ncols = len(self.gens)
        r = 0
        pivots = []
        for col in range(ncols):
            pr = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
            if pr is None:
                continue
            rows[r], rows[pr] = rows[pr], rows[r]
            piv = rows[r][col]
            rows[r] = [x / piv for x in rows[r]]
            for i in range(len(rows)):
                if i != r and rows[i][col] != 0:
                    f = rows[i][col]
                    rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
            pivots.append(col)
            r += 1
        if any(row[-1] != 0 for row in rows[r:]):
            return None
        sol = [Fraction(0)] * ncols
        for i, col in enumerate(pivots):
            sol[col] = rows[i][-1]
        return sol

    def contains(self, point):
        sol = self.coefficients(point)
        if sol is None:
            return False
        for n, rng in zip(sol, self.ranges):
            if n.denominator != 1 or n < 0 or (rng is not None and n > rng):
                return False
        return True

    def __str__(self):
        parts = [f"base ({', '.join(map(str, self.base))})"]
        for g, rng in zip(self.gens, self.ranges):
            parts.append(f"+ n*({', '.join(map(str, g))}) n in 0..{'oo' if rng is None else rng}")
        return " ".join(parts)


def _enumerate(guard, vars, limit=100000):
    ranges = []
    size = 1
    for v in vars:
        lo, hi = var_bounds(guard, v)
        if lo is None or hi is None:
            return None
        ranges.append(range(lo, hi + 1))
        size *= max(hi - lo + 1, 0)
        if size > limit:
            return None
    return [dict(zip(vars, pt)) for pt in itertools.product(*ranges) if guard_holds(guard, dict(zip(vars, pt)))]


def _param_regions(c, ds, ranges):
    """Product regions partitioning ``{(m, k): m in ranges, 0 <= k <= c + d.m}``.

    Coordinates are ``(m_1..m_K, k)``; every ``d_j`` must be nonnegative
    and ``c >= 0``.
    """
    K = len(ds)

    def unit(j, scale=1):
        v = [0] * (K + 1)
        v[j] = scale
        return v

    pos = [j for j in range(K) if ds[j] > 0]
    if not pos:
        gens = [unit(j) for j in range(K)] + [unit(K)]
        return [([0] * (K + 1), gens, list(ranges) + [c])]
    j = pos[0]
    rest = list(ds)
    rest[j] = 0
    out = _param_regions(c, rest, ranges)
    for r in range(ds[j]):
        base = unit(j)
        base[K] = c + 1 + r
        gens = []
        rngs = []
        for i in range(K):
            if i == j:
                continue
            g = unit(i)
            g[K] = rest[i]
            gens.append(g)
            rngs.append(ranges[i])
        a_gen = unit(j)
        a_gen[K] = ds[j]
        gens += [a_gen, unit(j)]
        rngs += [None, None]
        out.append((base, gens, rngs))
    return out


def _fix_finite(R, diff):
    """Split off generators with finite range along which ``diff`` changes."""
    for idx, (h, rng) in enumerate(zip(R.gens, R.ranges)):
        henv = dict(zip(R.vars, h))
        if rng is not None and diff.evaluate(henv) != diff.const:
            out = []
            for n in range(rng + 1):
                base = tuple(b + n * x for b, x in zip(R.base, h))
                sub = Region(R.vars, base, R.gens[:idx] + R.gens[idx + 1:], R.ranges[:idx] + R.ranges[idx + 1:])
                out.extend(_fix_finite(sub, diff))
            return out
    return [R]


def _extend(R, vars, y, pc, lo, hi):
    """Regions for ``{(x, y): x in R, y = sign*(M z + rho), lo(x) <= z <= hi(x)}``."""
    out = []
    for R2 in _fix_finite(R, hi - lo if hi is not None else Affine()):
        benv = dict(zip(R2.vars, R2.base))
        K = len(R2.gens)
        lins = []
        for h in R2.gens:
            henv = dict(zip(R2.vars, h))
            lins.append(henv)

        def lin(aff, henv):
            return aff.evaluate(henv) - aff.const

        if hi is None:
            params = [([0] * (K + 1), [[int(i == j) for i in range(K + 1)] for j in range(K + 1)],
                       list(R2.ranges) + [None])]
        else:
            diff = hi - lo
            c = diff.evaluate(benv)
            ds = [lin(diff, henv) for henv in lins]
            if c.denominator != 1 or any(d.denominator != 1 for d in ds):
                raise UnboundedDegenerate("non-integral range length")
            if any(d < 0 for d in ds) or c < 0:
                raise UnboundedDegenerate(f"range of {y} shrinks along an unbounded direction")
            params = _param_regions(int(c), [int(d) for d in ds], list(R2.ranges))

        def coords(pvec, affine_part):
            env = {v: (benv[v] if affine_part else 0) + sum(pvec[k] * lins[k][v] for k in range(K))
                   for v in R2.vars}
            z = (lo.evaluate(env) if affine_part else lin(lo, env)) + pvec[K]
            env[y] = pc.sign * (pc.M * z + (pc.rho if affine_part else 0))
            vals = tuple(env[v] for v in vars)
            if any(Fraction(x).denominator != 1 for x in vals):
                raise UnboundedDegenerate("non-integral generator")
            return tuple(int(x) for x in vals)

        for base, gens, rngs in params:
            keep = [(g, r) for g, r in zip(gens, rngs) if r != 0]
            out.append(Region(tuple(vars), coords(base, True), tuple(coords(g, False) for g, _ in keep),
                              tuple(r for _, r in keep)))
    return out


def _regions_via(guard, vars, y):
    others = [v for v in vars if v != y]
    out = []
    for pc in split_var(guard, y):
        outer = _regions(pc.guard, others)
        if pc.lo is None:
            # z ranges over Z: z = n and z = -1 - n with n >= 0
            halves = [pc, Piece(pc.guard, -pc.sign, pc.M, pc.M - pc.rho, None, None)]
            for half in halves:
                for R in outer:
                    out.extend(_extend(R, vars, y, half, Affine(), None))
            continue
        for R in outer:
            out.extend(_extend(R, vars, y, pc, pc.lo, pc.hi))
    return out


def _regions(guard, vars):
    if not vars:
        return [Region((), ())] if feasible(guard) else []
    for y in reversed(vars):
        try:
            return _regions_via(guard, vars, y)
        except UnboundedDegenerate:
            continue
    pts = _enumerate(guard, list(vars))
    if pts is None:
        raise UnboundedDegenerate("set is not a finite union of product regions in any variable order")
    return [Region(tuple(vars), tuple(env[v] for v in vars)) for env in pts]


def decompose(S):
    """Disjoint regions, each a bijective affine image of a product of ranges, covering S."""
    out = []
    for g in S.disjoint().guards:
        out.extend(_regions(g, list(S.vars)))
    return out


# -------------------------------------------------------- sum text syntax

def _expoly_tokens(text):
    import re
    pat = re.compile(r"\s*(?:(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))")
    pos = 0
    toks = []
    text = text.rstrip()
    while pos < len(text):
        m = pat.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        toks.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


def _ep_mul(a, b):
    out = {}
    for (e1, m1), c1 in a.items():
        for (e2, m2), c2 in b.items():
            k = (e1 + e2, _mono_mul(m1, m2))
            out[k] = out.get(k, 0) + c1 * c2
    return {k: v for k, v in out.items() if v}


def _ep_add(a, b, sign=1):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + sign * v
    return {k: v for k, v in out.items() if v}


def _ep_affine(a, pos):
    aff = Affine()
    for (e, m), c in a.items():
        if not e.is_const() or e.const != 0 or sum(k for _, k in m) > 1:
            raise ParseError("exponent of L must be affine in the variables", pos)
        aff = aff + (Affine.var(m[0][0], c) if m else Affine.constant(c))
    return aff


def parse_expoly(text):
    """Parse ``c * P(i) * L^(affine)`` sums into ``{(exponent, monomial): coeff}``."""
    toks = _expoly_tokens(text)
    i = 0

    def peek():
        return toks[i]

    def take():
        nonlocal i
        i += 1
        return toks[i - 1]

    def expr():
        val = term()
        while peek()[1] in ("+", "-"):
            op = take()[1]
            val = _ep_add(val, term(), 1 if op == "+" else -1)
        return val

    def term():
        val = factor()
        while peek()[1] in ("*", "/"):
            _, op, pos = take()
            rhs = factor()
            if op == "*":
                val = _ep_mul(val, rhs)
                continue
            if len(rhs) != 1 or next(iter(rhs)) != (Affine(), ()):
                raise ParseError("can only divide by a nonzero integer constant", pos)
            val = {k: v / next(iter(rhs.values())) for k, v in val.items()}
        return val

    def factor():
        if peek()[1] == "-":
            take()
            return _ep_mul({(Affine(), ()): -1}, factor())
        tok = peek()
        base = atom()
        if peek()[1] != "^":
            return base
        take()
        if tok[1] == "L":
            pos = peek()[2]
            neg = False
            if peek()[1] == "-":
                take()
                neg = True
            ex = _ep_affine(atom(), pos)
            if neg:
                ex = -ex
            return {(ex, ()): 1}
        etok = take()
        if etok[0] != "int":
            raise ParseError("polynomial powers must be natural numbers", etok[2])
        out = {(Affine(), ()): 1}
        for _ in range(int(etok[1])):
            out = _ep_mul(out, base)
        return out

    def atom():
        tok = take()
        if tok[0] == "int":
            return {(Affine(), ()): Fraction(int(tok[1]))}
        if tok[0] == "ident":
            if tok[1] == "L":
                return {(Affine.constant(1), ()): 1}
            return {(Affine(), ((tok[1], 1),)): 1}
        if tok[1] == "(":
            val = expr()
            if take()[1] != ")":
                raise ParseError("missing ')'", tok[2])
            return val
        raise ParseError(f"unexpected {tok[1] or 'end of input'!r}", tok[2], "operand")

    val = expr()
    if peek()[0] != "eof":
        raise ParseError(f"unexpected {peek()[1]!r}", peek()[2], "end of expression")
    return val


def parse_sum(text):
    """Parse ``"expr on domain; expr on domain ..."`` into an :class:`ExponentialSum`.

    Free identifiers other than ``L`` are value-group summation variables.
    """
    items = []
    names = set()
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        if " on " not in chunk:
            raise ParseError("expected 'expr on domain'", 0)
        expr, dom = chunk.split(" on ", 1)
        ep = parse_expoly(expr)
        names.update(v for (e, m) in ep for v in e.vars + tuple(n for n, _ in m))
        names.update(_idents(dom))
        items.append((ep, dom))
    vars = tuple(sorted(names))
    total_sum = ExponentialSum(vars)
    for ep, dom in items:
        decl = f"vg {', '.join(vars)}; " if vars else ""
        S = vg_quantifier_eliminate(fm.parse(decl + dom))
        terms = [(Fraction(1), {m: c}, e) for (e, m), c in ep.items()]
        total_sum = total_sum + ExponentialSum.build(S, terms)
    return total_sum
