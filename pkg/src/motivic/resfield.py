"""Finite residue fields, residue-field definable classes and point counting.

A class ``[Y -> S]`` is a residue-field formula in parameter variables (the
coordinates of S) and auxiliary variables (the fibre coordinates); its count
at a parameter point is the number of auxiliary tuples satisfying it.
"""

from __future__ import annotations

import csv
import io
import itertools
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from . import formula as fm
from . import presburger as pb
from .errors import BudgetExceeded, ParseError, SignatureMismatch, SortError
from .lefring import LefschetzElement, ONE, ZERO

BUDGET = 10**8
MAX_RF_DEPTH = 2
TABLE_LIMIT = 256


# ---------------------------------------------------------------- fields

def _poly_mulmod(a, b, mod, p):
    """Product of little-endian coefficient lists modulo a monic ``mod``."""
    e = len(mod) - 1
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    for k in range(len(out) - 1, e - 1, -1):
        c = out[k]
        if c:
            for i in range(e + 1):
                out[k - e + i] = (out[k - e + i] - c * mod[i]) % p
    return (out + [0] * e)[:e]


def _has_factor(mod, p, d):
    """Whether ``mod`` has a monic factor of degree ``d`` over F_p."""
    for tail in itertools.product(range(p), repeat=d):
        f = list(tail) + [1]
        # polynomial remainder of mod by f
        r = list(mod)
        while len(r) >= len(f):
            c = r[-1] % p
            shift = len(r) - len(f)
            for i, x in enumerate(f):
                r[shift + i] = (r[shift + i] - c * x) % p
            r.pop()
        if not any(x % p for x in r):
            return True
    return False


def is_irreducible(mod, p):
    e = len(mod) - 1
    return mod[-1] % p == 1 and all(not _has_factor(mod, p, d) for d in range(1, e // 2 + 1))


@lru_cache(maxsize=None)
def default_modulus(p, e):
    """First monic irreducible of degree e in lexicographic order of coefficients."""
    if e == 1:
        return (0, 1)
    for tail in itertools.product(range(p), repeat=e):
        mod = tuple(reversed(tail)) + (1,)
        if mod[0] and is_irreducible(list(mod), p):
            return mod
    raise ValueError(f"no irreducible polynomial of degree {e} over F_{p}")


def _is_prime(n):
    return n >= 2 and all(n % k for k in range(2, int(n**0.5) + 1))


class FiniteField:
    """F_q with q = p^e; elements are integers whose base-p digits are the
    little-endian coefficients of a polynomial modulo ``modulus``."""

    def __init__(self, p, e=1, modulus=None):
        if not _is_prime(p):
            raise ValueError(f"{p} is not prime")
        if e < 1:
            raise ValueError("degree must be at least 1")
        mod = tuple(modulus) if modulus is not None else default_modulus(p, e)
        if len(mod) != e + 1 or not is_irreducible(list(mod), p):
            raise ValueError(f"modulus {list(mod)} is not a monic irreducible of degree {e} over F_{p}")
        self.p, self.e, self.modulus = p, e, tuple(x % p for x in mod)
        self.q = p**e
        self._mul_table = None
        self._add_table = None
        if e > 1 and self.q <= TABLE_LIMIT:
            self._add_table = [[self._add_slow(a, b) for b in range(self.q)] for a in range(self.q)]
            self._mul_table = [[self._mul_slow(a, b) for b in range(self.q)] for a in range(self.q)]

    def __repr__(self):
        return self.spec()

    def __eq__(self, other):
        return isinstance(other, FiniteField) and (self.p, self.e, self.modulus) == (other.p, other.e, other.modulus)

    def __hash__(self):
        return hash((self.p, self.e, self.modulus))

    def spec(self):
        if self.e == 1:
            return f"Fq(p={self.p},e=1)"
        return f"Fq(p={self.p},e={self.e},mod=[{','.join(map(str, self.modulus))}])"

    # coding
    def digits(self, a):
        out = []
        for _ in range(self.e):
            a, r = divmod(a, self.p)
            out.append(r)
        return out

    def from_digits(self, ds):
        a = 0
        for d in reversed(ds):
            a = a * self.p + d % self.p
        return a

    def elements(self):
        return range(self.q)

    def from_int(self, n):
        if isinstance(n, Fraction):
            if n.denominator % self.p == 0:
                raise ZeroDivisionError(f"{n} has no reduction mod {self.p}")
            return self.mul(n.numerator % self.p, self.inv(n.denominator % self.p))
        return n % self.p

    # arithmetic
    def _add_slow(self, a, b):
        return self.from_digits([x + y for x, y in zip(self.digits(a), self.digits(b))])

    def _mul_slow(self, a, b):
        return self.from_digits(_poly_mulmod(self.digits(a), self.digits(b), self.modulus, self.p))

    def add(self, a, b):
        if self.e == 1:
            return (a + b) % self.p
        if self._add_table:
            return self._add_table[a][b]
        return self._add_slow(a, b)

    def neg(self, a):
        if self.e == 1:
            return -a % self.p
        return self.from_digits([-x for x in self.digits(a)])

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        if self.e == 1:
            return a * b % self.p
        if self._mul_table:
            return self._mul_table[a][b]
        return self._mul_slow(a, b)

    def pow(self, a, n):
        if self.e == 1:
            return pow(a, n, self.p)
        out, base = 1, a
        while n:
            if n & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            n >>= 1
        return out

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("0 has no inverse")
        return self.pow(a, self.q - 2)


_FIELD_RE = re.compile(r"^\s*Fq\s*\((?P<args>.*)\)\s*$")


def parse_field(spec):
    """Parse ``Fq(p=5,e=2,mod=[2,0,1])``, ``F25`` or a bare prime ``7``."""
    spec = spec.strip()
    m = _FIELD_RE.match(spec)
    if m:
        args = {}
        for part in re.findall(r"(\w+)\s*=\s*(\[[^\]]*\]|[^,]+)", m.group("args")):
            args[part[0]] = part[1].strip()
        if "p" not in args:
            raise ParseError("field spec needs p=", 0)
        p = int(args["p"])
        e = int(args.get("e", 1))
        mod = None
        if "mod" in args:
            mod = [int(x) for x in args["mod"].strip("[]").split(",") if x.strip()]
        return FiniteField(p, e, mod)
    m = re.match(r"^F?(\d+)$", spec)
    if m:
        q = int(m.group(1))
        for p in range(2, q + 1):
            if _is_prime(p):
                e, r = 0, q
                while r % p == 0:
                    r //= p
                    e += 1
                if r == 1:
                    return FiniteField(p, e)
                if q % p == 0:
                    break
        raise ParseError(f"{q} is not a prime power", 0)
    raise ParseError(f"bad field spec {spec!r}", 0, "Fq(p=..,e=..,mod=[..])")


# ---------------------------------------------------- RF formula evaluation

def compile_term(t, F):
    """Closure ``env -> element`` for a residue-field term."""
    if isinstance(t, fm.Num):
        c = F.from_int(t.value)
        return lambda env: c
    if isinstance(t, fm.Var):
        if t.sort is not fm.Sort.RF:
            raise SortError(f"{t.name!r} is not a residue-field variable")
        name = t.name
        return lambda env: env[name]
    if isinstance(t, fm.Neg):
        f = compile_term(t.arg, F)
        return lambda env: F.neg(f(env))
    if isinstance(t, fm.Pow):
        f, n = compile_term(t.base, F), t.exp
        return lambda env: F.pow(f(env), n)
    if isinstance(t, fm.BinOp):
        a, b = compile_term(t.left, F), compile_term(t.right, F)
        op = {"+": F.add, "-": F.sub, "*": F.mul}[t.op]
        return lambda env: op(a(env), b(env))
    raise SortError(f"not a pure residue-field term: {fm.pretty_term(t)}")


def compile_node(node, F):
    """Closure ``env -> bool``; RF quantifiers are resolved by enumeration."""
    if isinstance(node, fm.Truth):
        v = node.value
        return lambda env: v
    if isinstance(node, fm.Atom):
        if node.sort is fm.Sort.VG and not fm.term_vars(node.left) and not fm.term_vars(node.right):
            # a closed integer statement such as 1 = 1
            v = bool(pb.atom_to_dnf(node))
            return lambda env: v
        if node.sort is not fm.Sort.RF or node.op not in ("=", "!="):
            raise SortError("residue-field classes admit only '=' and '!=' between RF terms")
        a, b = compile_term(node.left, F), compile_term(node.right, F)
        if node.op == "=":
            return lambda env: a(env) == b(env)
        return lambda env: a(env) != b(env)
    if isinstance(node, fm.Not):
        f = compile_node(node.arg, F)
        return lambda env: not f(env)
    if isinstance(node, fm.And):
        a, b = compile_node(node.left, F), compile_node(node.right, F)
        return lambda env: a(env) and b(env)
    if isinstance(node, fm.Or):
        a, b = compile_node(node.left, F), compile_node(node.right, F)
        return lambda env: a(env) or b(env)
    if isinstance(node, fm.Quant):
        if node.sort is not fm.Sort.RF:
            raise SortError("only residue-field quantifiers are allowed in a class")
        body, var, elems = compile_node(node.body, F), node.var, F.elements()

        def quant(env, exists=node.kind == "exists"):
            env = dict(env)
            for x in elems:
                env[var] = x
                if body(env) == exists:
                    return exists
            return not exists
        return quant
    raise TypeError(node)


def rename_free(node, mapping):
    """Rename free variables of a formula node (bound names shadow)."""
    if not mapping:
        return node
    if isinstance(node, fm.Quant):
        inner = {k: v for k, v in mapping.items() if k != node.var}
        return fm.Quant(node.kind, node.sort, node.var, rename_free(node.body, inner))
    if isinstance(node, fm.Atom):
        def fn(u):
            if isinstance(u, fm.Var) and u.name in mapping:
                return fm.Var(mapping[u.name], u.sort)
            return None
        return fm.Atom(node.op, fm.rewrite_term(node.left, fn), fm.rewrite_term(node.right, fn), node.modulus)
    if isinstance(node, fm.Truth):
        return node
    if isinstance(node, fm.Not):
        return fm.Not(rename_free(node.arg, mapping))
    if isinstance(node, fm.And):
        return fm.And(rename_free(node.left, mapping), rename_free(node.right, mapping))
    if isinstance(node, fm.Or):
        return fm.Or(rename_free(node.left, mapping), rename_free(node.right, mapping))
    raise TypeError(node)


def substitute_node(node, name, tm):
    """Replace the free variable ``name`` by the term ``tm`` (no capture check
    beyond shadowing; callers use reserved names for fresh variables)."""
    if isinstance(node, fm.Quant):
        if node.var == name:
            return node
        return fm.Quant(node.kind, node.sort, node.var, substitute_node(node.body, name, tm))
    if isinstance(node, fm.Atom):
        def fn(u):
            return tm if isinstance(u, fm.Var) and u.name == name else None
        return fm.Atom(node.op, fm.rewrite_term(node.left, fn), fm.rewrite_term(node.right, fn), node.modulus)
    if isinstance(node, fm.Truth):
        return node
    if isinstance(node, fm.Not):
        return fm.Not(substitute_node(node.arg, name, tm))
    if isinstance(node, fm.And):
        return fm.And(substitute_node(node.left, name, tm), substitute_node(node.right, name, tm))
    if isinstance(node, fm.Or):
        return fm.Or(substitute_node(node.left, name, tm), substitute_node(node.right, name, tm))
    raise TypeError(node)


# ------------------------------------------------------------ classes

def _rf(name):
    return fm.Var(name, fm.Sort.RF)


def _zero():
    return fm.Num(0, fm.Sort.RF)


@dataclass(frozen=True)
class ResidueClass:
    """``[Y -> S]`` with ``Y = {(s, w) : body(s, w)}``; ``params`` are the
    coordinates of S and ``aux`` the fibre coordinates."""

    params: tuple
    aux: tuple
    body: object

    def __post_init__(self):
        if fm.quantifier_depth(self.body, fm.Sort.RF) > MAX_RF_DEPTH:
            raise ValueError(f"residue-field quantifier depth exceeds {MAX_RF_DEPTH}")
        if fm.quantifier_depth(self.body) != fm.quantifier_depth(self.body, fm.Sort.RF):
            raise SortError("classes admit residue-field quantifiers only")

    # construction helpers
    @staticmethod
    def make(params, aux, body):
        """Build with canonical auxiliary names ``_w0, _w1, ...``."""
        mapping = {a: f"_w{i}" for i, a in enumerate(aux)}
        clash = set(mapping.values()) & set(params)
        if clash:
            raise ValueError(f"parameter names {sorted(clash)} are reserved")
        return ResidueClass(tuple(params), tuple(mapping[a] for a in aux), rename_free(body, mapping))

    @staticmethod
    def point(params=()):
        """The class ``[S -> S]`` (the unit, counting 1)."""
        return ResidueClass(tuple(params), (), fm.Truth(True))

    @staticmethod
    def empty(params=()):
        return ResidueClass(tuple(params), (), fm.Truth(False))

    @staticmethod
    def line(params=()):
        """``[S x h[0,1,0] -> S]``, denoted L."""
        return ResidueClass(tuple(params), ("_w0",), fm.Truth(True))

    @staticmethod
    def punctured_line(params=()):
        """``[S x (h[0,1,0] minus 0) -> S]``, denoted L - 1."""
        return ResidueClass(tuple(params), ("_w0",), fm.Atom("!=", _rf("_w0"), _zero()))

    @staticmethod
    def parse(text, params=()):
        """Parse an RF formula; free variables not in ``params`` become auxiliaries."""
        f = _parse_rf(text)
        names = f.names()
        for p_ in params:
            if p_ not in names:
                names = names + (p_,)
        aux = tuple(n for n in names if n not in params)
        return ResidueClass.make(tuple(params), aux, f.body)

    @property
    def ell(self):
        return len(self.aux)

    def _check(self, other):
        if tuple(self.params) != tuple(other.params):
            raise SignatureMismatch(f"parameters {self.params} and {other.params} differ")

    # semiring structure
    def add(self, other):
        """Disjoint union, tagged by a fresh auxiliary coordinate."""
        self._check(other)
        n = max(self.ell, other.ell)
        shared = [f"_w{i + 1}" for i in range(n)]
        tag = _rf("_w0")
        a = rename_free(self.body, {w: shared[i] for i, w in enumerate(self.aux)})
        b = rename_free(other.body, {w: shared[i] for i, w in enumerate(other.aux)})
        pad_a = [fm.Atom("=", _rf(w), _zero()) for w in shared[self.ell:]]
        pad_b = [fm.Atom("=", _rf(w), _zero()) for w in shared[other.ell:]]
        left = fm.conj(fm.Atom("=", tag, _zero()), a, *pad_a)
        right = fm.conj(fm.Atom("=", tag, fm.Num(1, fm.Sort.RF)), b, *pad_b)
        return ResidueClass(self.params, ("_w0",) + tuple(shared), fm.Or(left, right))

    def mul(self, other):
        """Fibre product over S."""
        self._check(other)
        names = [f"_w{i}" for i in range(self.ell + other.ell)]
        a = rename_free(self.body, dict(zip(self.aux, names[:self.ell])))
        b = rename_free(other.body, dict(zip(other.aux, names[self.ell:])))
        return ResidueClass(self.params, tuple(names), fm.conj(a, b))

    __add__ = add
    __mul__ = mul

    def union(self, other):
        """``Y u Y'`` for classes with the same auxiliary coordinates."""
        self._check(other)
        b = rename_free(other.body, dict(zip(other.aux, self.aux)))
        if other.ell != self.ell:
            raise SignatureMismatch("auxiliary dimensions differ")
        return ResidueClass(self.params, self.aux, fm.Or(self.body, b))

    def intersection(self, other):
        self._check(other)
        if other.ell != self.ell:
            raise SignatureMismatch("auxiliary dimensions differ")
        b = rename_free(other.body, dict(zip(other.aux, self.aux)))
        return ResidueClass(self.params, self.aux, fm.And(self.body, b))

    def restrict(self, cond):
        """Conjoin a condition on parameters (and auxiliaries)."""
        return ResidueClass(self.params, self.aux, fm.conj(self.body, cond))

    def substitute(self, name, tm):
        """Pull back along a parameter substitution ``name := tm``."""
        if name not in self.params:
            raise KeyError(name)
        body = substitute_node(self.body, name, tm)
        new = [n for n, _ in sorted(fm.term_vars(tm)) if n not in self.params or n == name]
        params = [p_ for p_ in self.params if p_ != name] + [n for n in new if n != name]
        return ResidueClass(tuple(params), self.aux, body)

    def with_params(self, params):
        """Same class viewed over a larger (or reordered) parameter list."""
        missing = [p_ for p_ in self.params if p_ not in params]
        if missing:
            raise SignatureMismatch(f"parameters {missing} would be dropped")
        return ResidueClass(tuple(params), self.aux, self.body)

    def absorb(self, names):
        """Move parameters into the fibre (pushforward along the projection)."""
        params = tuple(p_ for p_ in self.params if p_ not in names)
        aux = self.aux + tuple(names)
        return ResidueClass.make(params, aux, self.body)

    # counting
    def count_points(self, F, params=()):
        env = dict(params) if isinstance(params, dict) else dict(zip(self.params, params))
        if F.q ** self.ell > BUDGET:
            raise BudgetExceeded(f"enumeration of {F.q}^{self.ell} auxiliary points exceeds the budget")
        fast = _fast_count(self, F, env)
        if fast is not None:
            return fast
        pred = compile_node(self.body, F)
        n = 0
        for w in itertools.product(F.elements(), repeat=self.ell):
            env.update(zip(self.aux, w))
            if pred(env):
                n += 1
        return n

    def count_table(self, F):
        """All parameter points with their counts, in lexicographic order."""
        if F.q ** (len(self.params) + self.ell) > BUDGET:
            raise BudgetExceeded("parameter space times fibre exceeds the budget")
        return [(pt, self.count_points(F, pt)) for pt in itertools.product(F.elements(), repeat=len(self.params))]

    def count_csv(self, F):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.params) + ["count"])
        for pt, n in self.count_table(F):
            w.writerow(list(pt) + [n])
        return buf.getvalue()

    def to_lefschetz(self):
        """A in A with count = theta_q at every tested prime field, or ``None``.

        Heuristic: only for parameter-free classes; counts at primes
        11..31 are interpolated and the polynomial must have integer
        coefficients and reproduce two further primes.
        """
        return _class_value(self)

    def __str__(self):
        head = f"[{', '.join(self.aux)} | {fm.pretty_node(self.body)}]"
        if self.params:
            head += f" over ({', '.join(self.params)})"
        return head


def _parse_rf(text):
    text = text.strip()
    if not re.match(r"^(vf|rf|vg)\s", text):
        toks = fm.tokenize(text)
        bound = {tok.text for prev, tok in zip(toks, toks[1:]) if tok.kind == "ident" and prev.text in ("rf", "vg", "vf")}
        names = list(dict.fromkeys(t.text for t in toks if t.kind == "ident" and t.text not in bound))
        if names:
            text = f"rf {', '.join(names)}; {text}"
    return fm.parse(text)


def _conjuncts(node):
    if isinstance(node, fm.And):
        return _conjuncts(node.left) + _conjuncts(node.right)
    if isinstance(node, fm.Truth) and node.value:
        return []
    return [node]


def _fast_count(cls, F, env):
    """Count by factoring the body into independent one-variable pieces."""
    parts = _conjuncts(cls.body)
    used = set()
    factor = 1
    for part in parts:
        fv = {n for n, _ in fm.free_vars(part)} & set(cls.aux)
        if not fv:
            if not compile_node(part, F)(env):
                return 0
            continue
        if len(fv) > 1 or fv & used:
            return None
        (w,) = fv
        used.add(w)
        if isinstance(part, fm.Atom) and part.op in ("=", "!=") and _is_zero_test(part, w):
            factor *= 1 if part.op == "=" else F.q - 1
        else:
            pred = compile_node(part, F)
            e = dict(env)
            n = 0
            for x in F.elements():
                e[w] = x
                n += pred(e)
            factor *= n
    return factor * F.q ** (cls.ell - len(used))


def _is_zero_test(atom, w):
    a, b = atom.left, atom.right
    z = fm.Num(0, fm.Sort.RF)
    return (a == fm.Var(w, fm.Sort.RF) and b == z) or (b == fm.Var(w, fm.Sort.RF) and a == z)


INTERP_PRIMES = (11, 13, 17, 19, 23, 29, 31)


@lru_cache(maxsize=4096)
def _class_value(cls):
    if cls.params:
        return None
    if isinstance(cls.body, fm.Truth):
        return LefschetzElement.L(cls.ell) if cls.body.value else ZERO
    deg = cls.ell
    primes = INTERP_PRIMES[:deg + 1]
    check = INTERP_PRIMES[deg + 1:deg + 3]
    if len(check) < 2:
        return None
    pts = []
    for p in primes + check:
        F = FiniteField(p)
        if F.q ** cls.ell > BUDGET:
            return None
        pts.append((p, cls.count_points(F)))
    coeffs = _interpolate(pts[:deg + 1])
    if any(c.denominator != 1 for c in coeffs):
        return None
    for p, n in pts[deg + 1:]:
        if sum(c * p**k for k, c in enumerate(coeffs)) != n:
            return None
    return LefschetzElement({k: int(c) for k, c in enumerate(coeffs)})


def _interpolate(pts):
    """Coefficients (lowest first) of the Lagrange interpolant."""
    from . import _upoly as up
    out = []
    for i, (xi, yi) in enumerate(pts):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, (xj, _) in enumerate(pts):
            if j != i:
                basis = up.mul(basis, [Fraction(-xj), Fraction(1)])
                denom *= xi - xj
        out = up.add(out, up.scale(basis, Fraction(yi) / denom))
    out = list(out) + [Fraction(0)] * (len(pts) - len(out))
    return out


def classes_agree(a, b, fields=None):
    """Heuristic equality: equal counts at every parameter point of each field."""
    a._check(b)
    fields = fields or [FiniteField(2), FiniteField(3), FiniteField(2, 2), FiniteField(5), FiniteField(7)]
    for F in fields:
        for pt in itertools.product(F.elements(), repeat=len(a.params)):
            if a.count_points(F, pt) != b.count_points(F, pt):
                return False
    return True


# ------------------------------------------------------- Chevalley-Warning

def random_form(F, d, n, rng):
    """Random homogeneous degree-d form as ``[(coeff, exponents), ...]``."""
    monos = [m for m in itertools.product(range(d + 1), repeat=n) if sum(m) == d]
    while True:
        terms = [(rng.randrange(F.q), m) for m in monos]
        terms = [(c, m) for c, m in terms if c]
        if terms:
            return terms


def eval_form(F, terms, x):
    acc = 0
    for c, m in terms:
        v = c
        for xi, k in zip(x, m):
            if k:
                v = F.mul(v, F.pow(xi, k))
        acc = F.add(acc, v)
    return acc


def nontrivial_zero(F, terms, n):
    for x in itertools.product(F.elements(), repeat=n):
        if any(x) and eval_form(F, terms, x) == 0:
            return x
    return None


def chevalley_warning_check(F, d, n, trials=100, seed=0):
    """Check that random degree-d forms in n > d variables have nontrivial zeros.

    Returns ``(True, None)`` or ``(False, form)`` with a counterexample.
    """
    if n <= d:
        raise ValueError("Chevalley-Warning needs more variables than the degree")
    if F.q**n > 10**7:
        raise BudgetExceeded(f"{F.q}^{n} points exceed the enumeration budget")
    rng = random.Random(seed)
    for _ in range(trials):
        form = random_form(F, d, n, rng)
        if nontrivial_zero(F, form, n) is None:
            return False, form
    return True, None
