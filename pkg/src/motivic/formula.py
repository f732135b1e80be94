"""Three-sorted syntax for the Denef-Pas language fragment.

Terms and formulas are immutable dataclasses.  Every term carries its sort;
integer literals receive the sort of the context they appear in.  ``ord``
always means ord0 (``ord(0) = 0``) in the motivic engine.

Surface grammar (see README for the full description)::

    vf x; rf u; vg n;  ac(x) = u^2 & ord(x) >= n
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Union

from .errors import CaptureError, ParseError, SortError, VfQuantifierError


class Sort(enum.Enum):
    VF = "vf"
    RF = "rf"
    VG = "vg"

    def __repr__(self):
        return f"Sort.{self.name}"


# ---------------------------------------------------------------- terms

@dataclass(frozen=True)
class Num:
    value: int
    sort: Sort


@dataclass(frozen=True)
class Unif:
    """The uniformizer symbol ``t``."""

    @property
    def sort(self):
        return Sort.VF


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*'
    left: "Term"
    right: "Term"
    sort: Sort


@dataclass(frozen=True)
class Neg:
    arg: "Term"
    sort: Sort


@dataclass(frozen=True)
class Pow:
    base: "Term"
    exp: int
    sort: Sort


@dataclass(frozen=True)
class Ac:
    arg: "Term"

    @property
    def sort(self):
        return Sort.RF


@dataclass(frozen=True)
class Ord:
    arg: "Term"

    @property
    def sort(self):
        return Sort.VG


Term = Union[Num, Unif, Var, BinOp, Neg, Pow, Ac, Ord]


# ------------------------------------------------------------- formulas

COMPARISONS = ("=", "!=", "<=", ">=", "<", ">")
ORDER_OPS = ("<=", ">=", "<", ">")


@dataclass(frozen=True)
class Atom:
    op: str  # one of COMPARISONS or 'mod'
    left: Term
    right: Term
    modulus: int | None = None

    @property
    def sort(self):
        return self.left.sort


@dataclass(frozen=True)
class Truth:
    value: bool


@dataclass(frozen=True)
class Not:
    arg: "Node"


@dataclass(frozen=True)
class And:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Or:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Quant:
    kind: str  # 'exists' | 'forall'
    sort: Sort
    var: str
    body: "Node"


Node = Union[Atom, Truth, Not, And, Or, Quant]


@dataclass(frozen=True)
class Formula:
    """A formula body together with its ordered free-variable declarations."""

    decls: tuple  # ((name, Sort), ...)
    body: Node

    def sort_of(self, name):
        for n, s in self.decls:
            if n == name:
                return s
        raise KeyError(name)

    def names(self, sort=None):
        return tuple(n for n, s in self.decls if sort is None or s == sort)

    def __str__(self):
        return pretty(self)


def conj(*parts):
    parts = [p for p in parts if p != Truth(True)]
    if not parts:
        return Truth(True)
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(*parts):
    parts = [p for p in parts if p != Truth(False)]
    if not parts:
        return Truth(False)
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<op>==|!=|<=|>=|[<>=+\-*^()&|!:;,]))"
)
KEYWORDS = {"vf", "rf", "vg", "exists", "forall", "mod", "true", "false", "ac", "ord", "t"}


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def tokenize(source):
    toks = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(source, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        text = m.group(kind)
        start = m.start(kind)
        if kind == "ident" and text in KEYWORDS:
            kind = "kw"
        toks.append(_Tok(kind, text, start))
        pos = m.end()
    toks.append(_Tok("eof", "", n))
    return toks


# ---------------------------------------------------------------- parser

class _Parser:
    def __init__(self, source, mode, scope=None):
        self.toks = tokenize(source)
        self.i = 0
        self.mode = mode
        self.scopes = [dict(scope or {})]

    # token helpers
    @property
    def tok(self):
        return self.toks[self.i]

    def at(self, text):
        return self.tok.text == text and self.tok.kind in ("op", "kw")

    def eat(self, text):
        if not self.at(text):
            raise ParseError(f"unexpected {self.tok.text or 'end of input'!r}", self.tok.pos, repr(text))
        self.i += 1

    def lookup(self, name, pos):
        for sc in reversed(self.scopes):
            if name in sc:
                return sc[name]
        raise ParseError(f"undeclared variable {name!r}", pos)

    # declarations
    def decls(self):
        out = []
        while self.tok.kind == "kw" and self.tok.text in ("vf", "rf", "vg"):
            sort = Sort(self.tok.text)
            self.i += 1
            while True:
                if self.tok.kind != "ident":
                    raise ParseError("bad declaration", self.tok.pos, "identifier")
                name = self.tok.text
                if any(n == name for n, _ in out):
                    raise ParseError(f"duplicate declaration of {name!r}", self.tok.pos)
                out.append((name, sort))
                self.scopes[0][name] = sort
                self.i += 1
                if self.at(","):
                    self.i += 1
                    continue
                break
            self.eat(";")
        return tuple(out)

    # formulas
    def expr(self):
        left = self.conj()
        while self.at("|"):
            self.i += 1
            left = Or(left, self.conj())
        return left

    def conj(self):
        left = self.unary()
        while self.at("&"):
            self.i += 1
            left = And(left, self.unary())
        return left

    def unary(self):
        if self.at("!"):
            self.i += 1
            return Not(self.unary())
        if self.at("exists") or self.at("forall"):
            return self.quant()
        if self.at("true") or self.at("false"):
            # 'true'/'false' are formula literals only
            val = self.tok.text == "true"
            self.i += 1
            return Truth(val)
        if self.at("("):
            save = self.i
            try:
                return self.atom()
            except ParseError:
                self.i = save
            self.eat("(")
            inner = self.expr()
            self.eat(")")
            return inner
        return self.atom()

    def quant(self):
        kind = self.tok.text
        self.i += 1
        if not (self.tok.kind == "kw" and self.tok.text in ("vf", "rf", "vg")):
            raise ParseError("bad quantifier", self.tok.pos, "sort keyword")
        sort = Sort(self.tok.text)
        qpos = self.tok.pos
        self.i += 1
        if self.tok.kind != "ident":
            raise ParseError("bad quantifier", self.tok.pos, "identifier")
        var = self.tok.text
        self.i += 1
        self.eat(":")
        if sort is Sort.VF and self.mode == "motivic":
            raise VfQuantifierError(f"quantifier over valued-field variable {var!r} at position {qpos}")
        self.scopes.append({var: sort})
        try:
            body = self.expr()
        finally:
            self.scopes.pop()
        return Quant(kind, sort, var, body)

    def atom(self):
        pos = self.tok.pos
        left = self.term()
        if self.at("=="):
            self.i += 1
            right = self.term()
            self.eat("mod")
            if self.tok.kind != "int":
                raise ParseError("bad modulus", self.tok.pos, "natural number")
            m = int(self.tok.text)
            self.i += 1
            if m < 2:
                raise SortError(f"congruence modulus must be >= 2, got {m}")
            return _type_atom("mod", left, right, m, pos)
        for op in COMPARISONS:
            if self.at(op):
                self.i += 1
                right = self.term()
                return _type_atom(op, left, right, None, pos)
        raise ParseError(f"unexpected {self.tok.text or 'end of input'!r}", self.tok.pos, "comparison")

    # raw terms: tuples ('num', v) ('t',) ('var', name, sort) ('bin', op, l, r)
    # ('neg', a) ('pow', b, e) ('ac', a) ('ord', a)
    def term(self):
        left = self.multerm()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            left = ("bin", op, left, self.multerm())
        return left

    def multerm(self):
        left = self.unaryterm()
        while self.at("*"):
            self.i += 1
            left = ("bin", "*", left, self.unaryterm())
        return left

    def unaryterm(self):
        if self.at("-"):
            self.i += 1
            arg = self.unaryterm()
            if arg[0] == "num" and not arg[2]:
                return ("num", -arg[1], False)
            return ("neg", arg)
        return self.powterm()

    def powterm(self):
        base = self.primary()
        if self.at("^"):
            self.i += 1
            if self.tok.kind != "int":
                raise ParseError("bad exponent", self.tok.pos, "natural number")
            e = int(self.tok.text)
            self.i += 1
            return ("pow", base, e)
        return base

    def primary(self):
        tok = self.tok
        if tok.kind == "int":
            self.i += 1
            return ("num", int(tok.text), False)
        if tok.kind == "kw" and tok.text == "t":
            self.i += 1
            return ("t",)
        if tok.kind == "kw" and tok.text in ("ac", "ord"):
            self.i += 1
            self.eat("(")
            arg = self.term()
            self.eat(")")
            return (tok.text, arg)
        if tok.kind == "ident":
            self.i += 1
            return ("var", tok.text, self.lookup(tok.text, tok.pos), tok.pos)
        if self.at("("):
            self.i += 1
            inner = self.term()
            self.eat(")")
            if inner[0] == "num":
                # a parenthesised literal stays a literal, but must not fold with '-'
                return ("num", inner[1], True)
            return inner
        raise ParseError(f"unexpected {tok.text or 'end of input'!r}", tok.pos, "term")


def _infer(raw):
    kind = raw[0]
    if kind == "num":
        return None
    if kind == "t":
        return Sort.VF
    if kind == "var":
        return raw[2]
    if kind == "ac":
        return Sort.RF
    if kind == "ord":
        return Sort.VG
    if kind == "bin":
        a, b = _infer(raw[2]), _infer(raw[3])
        if a is not None and b is not None and a != b:
            raise SortError(f"mixed sorts {a.value} and {b.value} in '{raw[1]}'")
        return a or b
    if kind == "neg":
        return _infer(raw[1])
    if kind == "pow":
        return _infer(raw[1])
    raise AssertionError(kind)


def _build(raw, sort):
    kind = raw[0]
    if kind == "num":
        return Num(raw[1], sort)
    if kind == "t":
        if sort is not Sort.VF:
            raise SortError(f"uniformizer t used in {sort.value} sort")
        return Unif()
    if kind == "var":
        if raw[2] is not sort:
            raise SortError(f"variable {raw[1]!r} of sort {raw[2].value} used as {sort.value}")
        return Var(raw[1], sort)
    if kind == "ac":
        if sort is not Sort.RF:
            raise SortError(f"ac(...) used in {sort.value} sort")
        return Ac(_build_vf(raw[1]))
    if kind == "ord":
        if sort is not Sort.VG:
            raise SortError(f"ord(...) used in {sort.value} sort")
        return Ord(_build_vf(raw[1]))
    if kind == "bin":
        op = raw[1]
        left, right = _build(raw[2], sort), _build(raw[3], sort)
        if sort is Sort.VG and op == "*" and not (isinstance(left, Num) or isinstance(right, Num)):
            raise SortError("value-group products need an integer factor")
        return BinOp(op, left, right, sort)
    if kind == "neg":
        return Neg(_build(raw[1], sort), sort)
    if kind == "pow":
        if sort is Sort.VG:
            raise SortError("powers are not allowed in the value group")
        return Pow(_build(raw[1], sort), raw[2], sort)
    raise AssertionError(kind)


def _build_vf(raw):
    s = _infer(raw)
    if s is not None and s is not Sort.VF:
        raise SortError(f"ac/ord applied to a {s.value} term")
    return _build(raw, Sort.VF)


def _type_atom(op, left, right, modulus, pos):
    a, b = _infer(left), _infer(right)
    if a is not None and b is not None and a != b:
        raise SortError(f"atom compares {a.value} with {b.value} (position {pos})")
    sort = a or b or Sort.VG
    if (op in ORDER_OPS or op == "mod") and sort is not Sort.VG:
        raise SortError(f"'{op}' is only defined on the value group (position {pos})")
    return Atom(op, _build(left, sort), _build(right, sort), modulus)


def parse(source, mode="motivic"):
    """Parse formula text into a sort-checked :class:`Formula`.

    ``mode`` is ``"motivic"`` (no valued-field quantifiers) or ``"oracle"``.
    """
    if mode not in ("motivic", "oracle"):
        raise ValueError(f"unknown mode {mode!r}")
    p = _Parser(source, mode)
    decls = p.decls()
    body = p.expr()
    if p.tok.kind != "eof":
        raise ParseError(f"unexpected {p.tok.text!r}", p.tok.pos, "end of input")
    return Formula(decls, body)


def parse_term(source, decls=(), sort=None):
    """Parse a single term against the given declarations."""
    p = _Parser(source, "oracle", scope=dict(decls))
    raw = p.term()
    if p.tok.kind != "eof":
        raise ParseError(f"unexpected {p.tok.text!r}", p.tok.pos, "end of term")
    s = _infer(raw)
    if sort is not None and s is not None and s is not sort:
        raise SortError(f"expected a {sort.value} term, got {s.value}")
    return _build(raw, sort or s or Sort.VG)


# -------------------------------------------------------------- printing

def _term_prec(t):
    if isinstance(t, BinOp):
        return 1 if t.op in "+-" else 2
    if isinstance(t, Neg):
        return 3
    if isinstance(t, Num) and t.value < 0:
        return 3
    if isinstance(t, Pow):
        return 4
    return 5


def pretty_term(t, ctx=0):
    if isinstance(t, Num):
        s = str(t.value)
    elif isinstance(t, Unif):
        s = "t"
    elif isinstance(t, Var):
        s = t.name
    elif isinstance(t, Ac):
        s = f"ac({pretty_term(t.arg)})"
    elif isinstance(t, Ord):
        s = f"ord({pretty_term(t.arg)})"
    elif isinstance(t, BinOp):
        p = _term_prec(t)
        s = f"{pretty_term(t.left, p)} {t.op} {pretty_term(t.right, p + 1)}"
    elif isinstance(t, Neg):
        s = "-" + (f"({t.arg.value})" if isinstance(t.arg, Num) else pretty_term(t.arg, 3))
    elif isinstance(t, Pow):
        s = f"{pretty_term(t.base, 5)}^{t.exp}"
    else:
        raise TypeError(t)
    return f"({s})" if _term_prec(t) < ctx else s


def _node_prec(f):
    if isinstance(f, Or):
        return 1
    if isinstance(f, And):
        return 2
    if isinstance(f, Not):
        return 3
    if isinstance(f, Quant):
        return 0
    return 4


def pretty_node(f, ctx=0):
    if isinstance(f, Truth):
        s = "true" if f.value else "false"
    elif isinstance(f, Atom):
        if f.op == "mod":
            s = f"{pretty_term(f.left)} == {pretty_term(f.right)} mod {f.modulus}"
        else:
            s = f"{pretty_term(f.left)} {f.op} {pretty_term(f.right)}"
    elif isinstance(f, Not):
        s = "!" + pretty_node(f.arg, 5)
    elif isinstance(f, And):
        s = f"{pretty_node(f.left, 2)} & {pretty_node(f.right, 3)}"
    elif isinstance(f, Or):
        s = f"{pretty_node(f.left, 1)} | {pretty_node(f.right, 2)}"
    elif isinstance(f, Quant):
        s = f"{f.kind} {f.sort.value} {f.var}: {pretty_node(f.body)}"
    else:
        raise TypeError(f)
    return f"({s})" if _node_prec(f) < ctx else s


def pretty(f: Formula):
    parts = []
    i = 0
    decls = list(f.decls)
    while i < len(decls):
        sort = decls[i][1]
        names = []
        while i < len(decls) and decls[i][1] is sort:
            names.append(decls[i][0])
            i += 1
        parts.append(f"{sort.value} {', '.join(names)};")
    parts.append(pretty_node(f.body))
    return " ".join(parts)


# -------------------------------------------------------------- traversal

def term_children(t):
    if isinstance(t, BinOp):
        return (t.left, t.right)
    if isinstance(t, (Neg, Ac, Ord)):
        return (t.arg,)
    if isinstance(t, Pow):
        return (t.base,)
    return ()


def term_vars(t, acc=None):
    acc = set() if acc is None else acc
    if isinstance(t, Var):
        acc.add((t.name, t.sort))
    for c in term_children(t):
        term_vars(c, acc)
    return acc


def free_vars(f, bound=frozenset()):
    """Free variables of a formula node as a set of ``(name, Sort)``."""
    if isinstance(f, Atom):
        return {v for v in term_vars(f.left) | term_vars(f.right) if v[0] not in bound}
    if isinstance(f, Truth):
        return set()
    if isinstance(f, Not):
        return free_vars(f.arg, bound)
    if isinstance(f, (And, Or)):
        return free_vars(f.left, bound) | free_vars(f.right, bound)
    if isinstance(f, Quant):
        return free_vars(f.body, bound | {f.var})
    raise TypeError(f)


def map_terms(f, fn):
    """Rebuild a formula node applying ``fn`` to the two sides of every atom."""
    if isinstance(f, Atom):
        return Atom(f.op, fn(f.left), fn(f.right), f.modulus)
    if isinstance(f, Truth):
        return f
    if isinstance(f, Not):
        return Not(map_terms(f.arg, fn))
    if isinstance(f, And):
        return And(map_terms(f.left, fn), map_terms(f.right, fn))
    if isinstance(f, Or):
        return Or(map_terms(f.left, fn), map_terms(f.right, fn))
    if isinstance(f, Quant):
        return Quant(f.kind, f.sort, f.var, map_terms(f.body, fn))
    raise TypeError(f)


def rewrite_term(t, fn):
    """Bottom-up term rewrite; ``fn`` returns a replacement or ``None``."""
    if isinstance(t, BinOp):
        t = BinOp(t.op, rewrite_term(t.left, fn), rewrite_term(t.right, fn), t.sort)
    elif isinstance(t, Neg):
        t = Neg(rewrite_term(t.arg, fn), t.sort)
    elif isinstance(t, Pow):
        t = Pow(rewrite_term(t.base, fn), t.exp, t.sort)
    elif isinstance(t, Ac):
        t = Ac(rewrite_term(t.arg, fn))
    elif isinstance(t, Ord):
        t = Ord(rewrite_term(t.arg, fn))
    r = fn(t)
    return t if r is None else r


def atoms(f):
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Not):
        yield from atoms(f.arg)
    elif isinstance(f, (And, Or)):
        yield from atoms(f.left)
        yield from atoms(f.right)
    elif isinstance(f, Quant):
        yield from atoms(f.body)


def quantifier_depth(f, sort=None):
    if isinstance(f, Quant):
        inner = quantifier_depth(f.body, sort)
        return inner + (1 if sort is None or f.sort is sort else 0)
    if isinstance(f, Not):
        return quantifier_depth(f.arg, sort)
    if isinstance(f, (And, Or)):
        return max(quantifier_depth(f.left, sort), quantifier_depth(f.right, sort))
    return 0


def free_signature(f: Formula):
    """Counts ``(m, n, r)`` of free VF, RF and VG variables."""
    return tuple(sum(1 for _, s in f.decls if s is srt) for srt in (Sort.VF, Sort.RF, Sort.VG))


# ----------------------------------------------------------- substitution

def _subst_term(t, name, tm):
    if isinstance(t, Var) and t.name == name:
        return tm
    return rewrite_term(t, lambda u: tm if isinstance(u, Var) and u.name == name else None)


def _subst_node(f, name, tm, tm_vars):
    if isinstance(f, Quant):
        if f.var == name:
            raise CaptureError(f"variable {name!r} is rebound by a quantifier")
        if f.var in tm_vars and any(v[0] == name for v in free_vars(f.body)):
            raise CaptureError(f"substituted term would be captured by '{f.kind} {f.var}'")
        return Quant(f.kind, f.sort, f.var, _subst_node(f.body, name, tm, tm_vars))
    if isinstance(f, Atom):
        return Atom(f.op, _subst_term(f.left, name, tm), _subst_term(f.right, name, tm), f.modulus)
    if isinstance(f, Truth):
        return f
    if isinstance(f, Not):
        return Not(_subst_node(f.arg, name, tm, tm_vars))
    if isinstance(f, And):
        return And(_subst_node(f.left, name, tm, tm_vars), _subst_node(f.right, name, tm, tm_vars))
    if isinstance(f, Or):
        return Or(_subst_node(f.left, name, tm, tm_vars), _subst_node(f.right, name, tm, tm_vars))
    raise TypeError(f)


def _retype_literals(t, sort):
    return rewrite_term(t, lambda u: Num(u.value, sort) if isinstance(u, Num) and u.sort is not sort else None)


def substitute(f: Formula, var: str, tm) -> Formula:
    """Capture-avoiding substitution of ``tm`` for the free variable ``var``.

    ``tm`` is a term or term text; new variables in it are appended to the
    declarations with their sorts.
    """
    sort = f.sort_of(var)
    if isinstance(tm, str):
        tm = parse_term(tm, f.decls, sort)
    if isinstance(tm, int):
        tm = Num(tm, sort)
    if isinstance(tm, Num):
        tm = Num(tm.value, sort)
    if tm.sort is not sort:
        raise SortError(f"cannot substitute a {tm.sort.value} term for {sort.value} variable {var!r}")
    tm = _retype_literals(tm, sort) if sort is not Sort.VF else tm
    tv = term_vars(tm)
    body = _subst_node(f.body, var, tm, {n for n, _ in tv})
    decls = [d for d in f.decls if d[0] != var]
    for n, s in sorted(tv, key=lambda v: v[0]):
        if n == var:
            continue
        for dn, ds in decls:
            if dn == n and ds is not s:
                raise SortError(f"variable {n!r} already declared with sort {ds.value}")
        if all(dn != n for dn, _ in decls):
            decls.append((n, s))
    return Formula(tuple(decls), body)


# ----------------------------------------------- valued-field polynomials

def vf_poly(t):
    """Expand a VF term into ``{(monomial, t_exponent): int}``.

    A monomial is a sorted tuple of ``(variable, exponent)`` pairs.
    """
    if isinstance(t, Num):
        return {((), 0): t.value} if t.value else {}
    if isinstance(t, Unif):
        return {((), 1): 1}
    if isinstance(t, Var):
        if t.sort is not Sort.VF:
            raise SortError(f"{t.name!r} is not a valued-field variable")
        return {(((t.name, 1),), 0): 1}
    if isinstance(t, Neg):
        return {k: -v for k, v in vf_poly(t.arg).items()}
    if isinstance(t, BinOp):
        a, b = vf_poly(t.left), vf_poly(t.right)
        if t.op == "+":
            return _padd(a, b)
        if t.op == "-":
            return _padd(a, {k: -v for k, v in b.items()})
        return _pmul(a, b)
    if isinstance(t, Pow):
        out = {((), 0): 1}
        base = vf_poly(t.base)
        for _ in range(t.exp):
            out = _pmul(out, base)
        return out
    raise SortError(f"not a valued-field term: {pretty_term(t)}")


def _padd(a, b):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
        if out[k] == 0:
            del out[k]
    return out


def _mono_mul(m1, m2):
    d = dict(m1)
    for v, e in m2:
        d[v] = d.get(v, 0) + e
    return tuple(sorted(d.items()))


def _pmul(a, b):
    out = {}
    for (m1, t1), c1 in a.items():
        for (m2, t2), c2 in b.items():
            k = (_mono_mul(m1, m2), t1 + t2)
            out[k] = out.get(k, 0) + c1 * c2
            if out[k] == 0:
                del out[k]
    return out


def vf_poly_vars(poly):
    return sorted({v for (mono, _), _c in poly.items() for v, _e in mono})
