"""Cells over the valued field and iterated integration of VF variables.

A cell with center ``c`` is parametrised by ``eta = ac(x - c)`` (a nonzero
residue) and ``a = ord(x - c)``; each fibre is a ball of volume L^(-a-1).
Integrating one variable means: split the line into closest-center cells,
rewrite every ``ord``/``ac`` of a linear factor in terms of ``(eta, a)``, then
push forward along ``eta`` (a point count) and along ``a`` (a Presburger sum).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import sympy

from . import formula as fm
from . import presburger as pb
from .constructible import ConstructibleFunction
from .errors import NotPrepared, ParseError, TruncationTooShallow
from .lefring import LefschetzElement

DEFAULT_LEVEL = 16
_T = sympy.Symbol("t")

RF, VG, VF = fm.Sort.RF, fm.Sort.VG, fm.Sort.VF


# ------------------------------------------------------------------ centers

class Center:
    """Laurent series ``sum c_k t^k`` known modulo ``t^level``.

    ``level=None`` marks an exact (finite) series.
    """

    def __init__(self, terms=None, level=None):
        self.level = level
        self.terms = {int(k): Fraction(v) for k, v in (terms or {}).items()
                      if v and (level is None or k < level)}

    @classmethod
    def constant(cls, c):
        return cls({0: c})

    @classmethod
    def from_ratio(cls, num, den, level=DEFAULT_LEVEL):
        """``num / den`` for Laurent polynomials given as ``{exponent: coeff}``."""
        den = {k: v for k, v in den.items() if v}
        if not den:
            raise ZeroDivisionError("center with zero denominator")
        k0 = min(den)
        d = {k - k0: Fraction(v) for k, v in den.items()}
        if len(d) == 1:
            return cls({k - k0: Fraction(v) / d[0] for k, v in num.items()})
        # power series long division, exponents shifted by -k0 at the end
        if not any(num.values()):
            return cls({}, level)
        lo = min(k for k, v in num.items() if v)
        out = {}
        for n in range(lo, level + k0):
            acc = Fraction(num.get(n, 0))
            for i, di in d.items():
                if i and n - i in out:
                    acc -= di * out[n - i]
            out[n] = acc / d[0]
        return cls({n - k0: v for n, v in out.items()}, level)

    @classmethod
    def parse(cls, text, level=None):
        """``"3 + t^2"``; a trailing ``+ O(t^k)`` marks truncation at k."""
        text = text.strip()
        if "O(" in text:
            head, _, tail = text.rpartition("O(")
            tail = tail.rstrip(") ").replace(" ", "")
            if not tail.startswith("t^"):
                raise ParseError(f"bad truncation {text!r}", len(head), "O(t^k)")
            level = int(tail[2:])
            text = head.rstrip().rstrip("+").strip() or "0"
        poly = fm.vf_poly(fm.parse_term(text, (), VF))
        if fm.vf_poly_vars(poly):
            raise ParseError(f"center {text!r} mentions a variable", 0, "element of Z[t]")
        return cls({k: c for (_m, k), c in poly.items()}, level)

    def is_zero(self):
        return not self.terms

    def ord(self):
        """Exact order, or raise if the truncation hides it."""
        if self.terms:
            return min(self.terms)
        if self.level is None:
            return None
        raise TruncationTooShallow(f"series vanishes below t^{self.level}")

    def ac(self):
        return self.terms[self.ord()] if self.terms else Fraction(0)

    def _lvl(self, other):
        levels = [x for x in (self.level, other.level) if x is not None]
        return min(levels) if levels else None

    def __add__(self, other):
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return Center(out, self._lvl(other))

    def __neg__(self):
        return Center({k: -v for k, v in self.terms.items()}, self.level)

    def __sub__(self, other):
        return self + (-other)

    def __eq__(self, other):
        return isinstance(other, Center) and (self.terms, self.level) == (other.terms, other.level)

    def __hash__(self):
        return hash((tuple(sorted(self.terms.items())), self.level))

    def __repr__(self):
        return f"Center({self})"

    def __str__(self):
        parts = []
        for k in sorted(self.terms):
            c = self.terms[k]
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            mono = "" if k == 0 else ("t" if k == 1 else f"t^{k}")
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}*{mono}"
            parts.append((sign, body))
        if self.level is not None:
            parts.append(("+", f"O(t^{self.level})"))
        if not parts:
            return "0"
        out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out


def center_gap(c1, c2):
    """``(ord, ac)`` of ``c1 - c2``; ``None`` if the centers coincide."""
    d = c1 - c2
    if d.is_zero():
        if d.level is None:
            return None
        raise TruncationTooShallow(f"centers {c1} and {c2} agree up to t^{d.level}")
    return d.ord(), d.ac()


# -------------------------------------------------------------------- cells

@dataclass(frozen=True)
class Cell:
    """``{x : ac(x - c) = eta, ord(x - c) = a, cond(xi, eta, a)}``."""

    center: Center
    cond: object  # formula node over rf + (eta,), vg + (a,)
    rf: tuple = ()
    vg: tuple = ()
    eta: str = "eta"
    a: str = "a"

    @property
    def signature(self):
        return self.rf + (self.eta,), self.vg + (self.a,)

    @cached_property
    def indicator_function(self):
        rf, vg = self.signature
        return ConstructibleFunction.indicator(self.cond, rf=rf, vg=vg)

    def holds(self, F, eta_value, a_value, xi=(), params=()):
        rf, vg = self.signature
        return self.indicator_function.value(F, tuple(xi) + (eta_value,), tuple(params) + (a_value,)) != 0

    def text(self):
        decls = [f"rf {', '.join(self.rf + (self.eta,))};", f"vg {', '.join(self.vg + (self.a,))};"]
        return f"center: {self.center}\ncond: {' '.join(decls)} {fm.pretty_node(self.cond)}"


@dataclass
class CellDecomposition:
    cells: list
    gaps: dict = field(default_factory=dict)  # (i, j) -> ord(c_i - c_j)

    def text(self):
        return "\n\n".join(c.text() for c in self.cells) + "\n"


def parse_cells(text):
    """Read cell records: ``center: <series>`` followed by ``cond: <formula>``."""
    cells, center = [], None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition(":")
        key = key.strip()
        if key == "center":
            center = Center.parse(val)
        elif key == "cond":
            if center is None:
                raise ParseError("cond without a center", 0, "center:")
            f = fm.parse(val)
            rf, vg = f.names(RF), f.names(VG)
            if not rf or not vg:
                raise ParseError("cell condition must declare eta (rf) and a (vg)", 0, "rf ..; vg ..;")
            cells.append(Cell(center, f.body, rf[:-1], vg[:-1], rf[-1], vg[-1]))
            center = None
        else:
            raise ParseError(f"unknown cell field {key!r}", 0, "center | cond")
    return CellDecomposition(cells)


def _num(v, sort):
    if isinstance(v, Fraction) and v.denominator == 1:
        v = v.numerator
    return fm.Num(v, sort)


def _var(name, sort):
    return fm.Var(name, sort)


def _ne(left, right):
    return fm.Not(fm.Atom("=", left, right))


def _add(a, b, sort):
    return fm.BinOp("+", a, b, sort)


def _mul(a, b, sort):
    return fm.BinOp("*", a, b, sort)


@dataclass
class _Piece:
    """One closest-center region for a single variable."""

    center: int
    guard: list  # VG atoms on a
    rf_cond: list  # RF atoms on eta
    ords: dict  # center index -> VG term of ord(x - c_i)
    acs: dict  # center index -> RF term of ac(x - c_i)


def _pieces(centers, eta, a):
    """Closest-center split; ties go to the smallest center index."""
    out = []
    A, E = _var(a, VG), _var(eta, RF)
    for j, cj in enumerate(centers):
        gaps = {i: center_gap(cj, ci) for i, ci in enumerate(centers) if i != j}
        marks = sorted({g[0] for g in gaps.values()})
        # regions: a < m0, a = m0, m0 < a < m1, ..., a > m_last
        regions = []
        prev = None
        for m in marks:
            if prev is None or m - prev >= 2:
                regions.append(("open", prev, m))
            regions.append(("eq", m, m))
            prev = m
        regions.append(("open", prev, None))
        for kind, lo, hi in regions:
            guard, rf_cond = [], [_ne(E, _num(0, RF))]
            ords, acs = {j: A}, {j: E}
            ok = True
            for i, (d, r) in gaps.items():
                if kind == "eq":
                    rel = "=" if d == lo else ("<" if lo < d else ">")
                else:
                    rel = "<" if hi is not None and hi <= d else ">"
                if i < j and rel != ">":
                    ok = False
                    break
                if rel == "<":
                    ords[i], acs[i] = A, E
                elif rel == "=":
                    shifted = fm.BinOp("-", E, _num(-r, RF), RF) if r < 0 else _add(E, _num(r, RF), RF)
                    ords[i], acs[i] = A, shifted
                    rf_cond.append(_ne(acs[i], _num(0, RF)))
                else:
                    ords[i], acs[i] = _num(d, VG), _num(r, RF)
            if not ok:
                continue
            if kind == "eq":
                guard.append(fm.Atom("=", A, _num(lo, VG)))
            else:
                if lo is not None:
                    guard.append(fm.Atom(">=", A, _num(lo + 1, VG)))
                if hi is not None:
                    guard.append(fm.Atom("<=", A, _num(hi - 1, VG)))
            out.append(_Piece(j, guard, rf_cond, ords, acs))
    return out


# --------------------------------------------------------------- preparation

@dataclass(frozen=True)
class _Prepared:
    """``ord`` and ``ac`` data of a factored VF polynomial."""

    zero: bool
    ord_const: int = 0
    ac_const: Fraction = Fraction(1)
    factors: tuple = ()  # ((var, center index, multiplicity), ...)


def _tpoly(expr):
    p = sympy.Poly(expr, _T)
    return {m[0]: int(c) for m, c in p.as_dict().items()}


class _Preparer:
    """Factors VF terms into linear pieces and registers their centers."""

    def __init__(self, variables, level=DEFAULT_LEVEL, fixed=None):
        self.variables = tuple(variables)
        self.level = level
        self.syms = {v: sympy.Symbol(f"_vf_{v}") for v in self.variables}
        self.fixed = fixed or {}
        self.centers = {v: list(self.fixed.get(v, ())) for v in self.variables}
        self._keys = {v: {} for v in self.variables}
        self._cache = {}

    def center_index(self, v, num, den):
        key = sympy.cancel(num / den)
        table = self._keys[v]
        if key not in table:
            c = Center.from_ratio(_tpoly(num), _tpoly(den), self.level)
            if v in self.fixed:
                hits = [i for i, d in enumerate(self.centers[v]) if center_gap(c, d) is None]
                if not hits:
                    raise ValueError(f"center {c} is not among the declared centers")
                table[key] = hits[0]
            else:
                table[key] = len(self.centers[v])
                self.centers[v].append(c)
        return table[key]

    def prepare(self, term):
        if term in self._cache:
            return self._cache[term]
        poly = fm.vf_poly(term)
        for v in fm.vf_poly_vars(poly):
            if v not in self.syms:
                raise NotPrepared(f"{v!r} is not an integration variable")
        if not poly:
            out = _Prepared(True)
            self._cache[term] = out
            return out
        expr = sum(c * _T ** k * sympy.Mul(*[self.syms[v] ** e for v, e in mono])
                   for (mono, k), c in poly.items())
        content, factors = sympy.factor_list(sympy.expand(expr))
        ord_const, ac_const, lin = 0, Fraction(int(content)), []
        for fac, mult in factors:
            used = [v for v in self.variables if sympy.degree(fac, self.syms[v]) > 0]
            if not used:
                tp = _tpoly(fac)
                k = min(tp)
                ord_const += k * mult
                ac_const *= Fraction(tp[k]) ** mult
                continue
            if len(used) > 1:
                raise NotPrepared(f"factor {_show(fac)} mixes the variables {', '.join(used)}")
            v = used[0]
            s = self.syms[v]
            if sympy.degree(fac, s) != 1:
                raise NotPrepared(f"factor {_show(fac)} is not linear in {v}")
            lead, rest = sympy.Poly(fac, s).all_coeffs()
            tl = _tpoly(lead)
            k = min(tl)
            ord_const += k * mult
            ac_const *= Fraction(tl[k]) ** mult
            lin.append((v, self.center_index(v, -rest, lead), mult))
        out = _Prepared(False, ord_const, ac_const, tuple(lin))
        self._cache[term] = out
        return out

    def collect(self, node):
        """Register every VF term under ord/ac in a node or term."""
        def visit(t):
            if isinstance(t, (fm.Ord, fm.Ac)):
                self.prepare(t.arg)
            return None
        if isinstance(node, fm.Formula):
            node = node.body
        if _is_term(node):
            fm.rewrite_term(node, visit)
            return
        for at in fm.atoms(node):
            if at.sort is VF:
                self.prepare(fm.BinOp("-", at.left, at.right, VF))
            else:
                fm.rewrite_term(at.left, visit)
                fm.rewrite_term(at.right, visit)


def _show(expr):
    return sympy.sstr(expr).replace("_vf_", "").replace("**", "^")


def _is_term(x):
    return isinstance(x, (fm.Num, fm.Unif, fm.Var, fm.BinOp, fm.Neg, fm.Pow, fm.Ac, fm.Ord))


def _ord_term(prep, choice):
    if prep.zero:
        return _num(0, VG)
    out = None if prep.ord_const == 0 else _num(prep.ord_const, VG)
    for v, i, mult in prep.factors:
        t = choice[v].ords[i]
        t = t if mult == 1 else _mul(_num(mult, VG), t, VG)
        out = t if out is None else _add(out, t, VG)
    return out if out is not None else _num(0, VG)


def _ac_term(prep, choice):
    if prep.zero:
        return _num(0, RF)
    c = prep.ac_const
    out = None if c == 1 else _num(c.numerator if c.denominator == 1 else c, RF)
    for v, i, mult in prep.factors:
        t = choice[v].acs[i]
        t = t if mult == 1 else fm.Pow(t, mult, RF)
        out = t if out is None else _mul(out, t, RF)
    return out if out is not None else _num(1, RF)


def _rewrite(node, prep, choice):
    """Replace ord/ac of VF terms by cell data; VF equalities hold on a null set."""
    def fn(t):
        if isinstance(t, fm.Ord):
            return _ord_term(prep.prepare(t.arg), choice)
        if isinstance(t, fm.Ac):
            return _ac_term(prep.prepare(t.arg), choice)
        return None

    def walk(n):
        if isinstance(n, fm.Atom):
            if n.sort is VF:
                p = prep.prepare(fm.BinOp("-", n.left, n.right, VF))
                if p.factors:
                    value = False  # a proper hypersurface has measure zero
                else:
                    value = p.zero
                return fm.Truth(value if n.op == "=" else not value)
            return fm.Atom(n.op, fm.rewrite_term(n.left, fn), fm.rewrite_term(n.right, fn), n.modulus)
        if isinstance(n, fm.Truth):
            return n
        if isinstance(n, fm.Not):
            return fm.Not(walk(n.arg))
        if isinstance(n, (fm.And, fm.Or)):
            return type(n)(walk(n.left), walk(n.right))
        if isinstance(n, fm.Quant):
            return fm.Quant(n.kind, n.sort, n.var, walk(n.body))
        raise TypeError(n)

    return walk(node)


# ------------------------------------------------------------- decompositions

def linear_cell_decompose(centers, domain=None, eta="eta", a="a", var="x"):
    """Partition the line into closest-center cells.

    ``domain`` is an optional formula in the single VF variable ``var``; it is
    rewritten into each cell's ``(eta, a)`` coordinates.
    """
    centers = [c if isinstance(c, Center) else Center.parse(str(c)) for c in centers]
    gaps = {}
    for (i, ci), (j, cj) in itertools.combinations(enumerate(centers), 2):
        g = center_gap(ci, cj)
        if g is None:
            raise ValueError(f"centers {i} and {j} coincide")
        gaps[(i, j)] = gaps[(j, i)] = g[0]
    prep = _Preparer((var,), fixed={var: centers})
    node = fm.Truth(True)
    if domain is not None:
        f = fm.parse(domain) if isinstance(domain, str) else domain
        node = f.body if isinstance(f, fm.Formula) else f
        prep.collect(node)
    cells = []
    for piece_group in _group(_pieces(centers, eta, a)):
        conds = []
        for piece in piece_group:
            body = _rewrite(node, prep, {var: piece})
            conds.append(fm.conj(*piece.guard, *piece.rf_cond, body))
        cells.append(Cell(centers[piece_group[0].center], _simplify(fm.disj(*conds)), eta=eta, a=a))
    return CellDecomposition([c for c in cells if c.cond != fm.Truth(False)], gaps)


def _group(pieces):
    out = {}
    for p in pieces:
        out.setdefault(p.center, []).append(p)
    return [out[k] for k in sorted(out)]


def _simplify(node):
    if isinstance(node, fm.Not):
        a = _simplify(node.arg)
        return fm.Truth(not a.value) if isinstance(a, fm.Truth) else fm.Not(a)
    if isinstance(node, (fm.And, fm.Or)):
        a, b = _simplify(node.left), _simplify(node.right)
        absorbing = isinstance(node, fm.Or)
        for x, y in ((a, b), (b, a)):
            if isinstance(x, fm.Truth):
                return x if x.value == absorbing else y
        return type(node)(a, b)
    if isinstance(node, fm.Quant):
        body = _simplify(node.body)
        return body if isinstance(body, fm.Truth) else fm.Quant(node.kind, node.sort, node.var, body)
    return node


# --------------------------------------------------------------- integration

def integrate_cell(cell, phi=None):
    """Integrate over the VF variable of a cell: weight each ball by
    L^(-a-1), then push forward along eta and along a."""
    rf, vg = cell.signature
    ball = ConstructibleFunction.exponential(-pb.Affine.var(cell.a) - 1, rf=rf, vg=vg)
    f = cell.indicator_function * ball
    if phi is not None:
        f = f * phi.pullback(rf=rf, vg=vg)
    return f.pushforward_rf([cell.eta]).pushforward_vg([cell.a])


def _weight_affine(w):
    if w is None:
        return pb.Affine()
    return pb.term_to_affine(w)


def _as_formula(f):
    if isinstance(f, str):
        return fm.parse(f)
    return f


def _parse_weight(weight, decls):
    if weight is None or weight == "":
        return None
    if isinstance(weight, str):
        return fm.parse_term(weight, decls, VG)
    return weight


def integrate(f, weight=None, order=None, level=DEFAULT_LEVEL, trace=None):
    """Integrate ``L^(-weight)`` over the VF variables of ``f``.

    ``weight`` is a VG term (text or AST) that may use ord(...) of the VF
    variables and the VG parameters.  Variables are integrated one at a time
    in ``order`` (innermost first); the result is a constructible function
    of the remaining RF/VG parameters.  If ``trace`` is a list, one line per
    step is appended to it.
    """
    log = trace.append if trace is not None else (lambda line: None)
    f = _as_formula(f)
    vf = f.names(VF)
    order = tuple(order) if order is not None else vf
    if sorted(order) != sorted(vf):
        raise ValueError(f"order {order} must list the VF variables {vf}")
    w = _parse_weight(weight, f.decls)
    prep = _Preparer(vf, level)
    prep.collect(f.body)
    if w is not None:
        prep.collect(w)
    for v in vf:
        if not prep.centers[v]:
            prep.centers[v].append(Center.constant(0))
    taken = set(f.names())
    eta = {v: _fresh(f"eta_{v}", taken) for v in vf}
    a = {v: _fresh(f"a_{v}", taken) for v in vf}
    rf = f.names(RF) + tuple(eta[v] for v in order)
    vg = f.names(VG) + tuple(a[v] for v in order)
    pieces = {v: _pieces(prep.centers[v], eta[v], a[v]) for v in vf}
    for v in vf:
        log(f"centers {v}: {', '.join(str(c) for c in prep.centers[v])} ({len(pieces[v])} pieces)")
    total = None
    kept = 0
    for combo in itertools.product(*(pieces[v] for v in vf)):
        choice = dict(zip(vf, combo))
        body = _rewrite(f.body, prep, choice)
        cond = fm.conj(*(c for p in combo for c in p.guard + p.rf_cond), body)
        cond = _simplify(cond)
        if cond == fm.Truth(False):
            continue
        kept += 1
        expo = -sum((pb.Affine.var(a[v]) + 1 for v in vf), pb.Affine())
        if w is not None:
            expo = expo - pb.term_to_affine(fm.rewrite_term(w, _ord_rewriter(prep, choice)))
        term = ConstructibleFunction.indicator(cond, rf=rf, vg=vg)
        term = term * ConstructibleFunction.exponential(expo, rf=rf, vg=vg)
        total = term if total is None else total + term
    log(f"cell products kept: {kept}")
    if total is None:
        return ConstructibleFunction.constant(0, f.names(RF), f.names(VG))
    for v in order:
        total = total.pushforward_rf([eta[v]]).pushforward_vg([a[v]])
        log(f"integrated {v}: sum over {eta[v]}, then over {a[v]}")
    total = total.simplify()
    value = value_of(total)
    log(f"result: {total if value is None else value}")
    return total


def _ord_rewriter(prep, choice):
    def fn(t):
        if isinstance(t, fm.Ord):
            return _ord_term(prep.prepare(t.arg), choice)
        if isinstance(t, fm.Ac):
            raise NotPrepared("weights may only use ord(...)")
        return None
    return fn


def _fresh(base, taken):
    name = base
    k = 0
    while name in taken:
        k += 1
        name = f"{base}{k}"
    taken.add(name)
    return name


def value_of(phi):
    """The element of A for a parameter-free result, else ``None``."""
    if phi.rf or phi.vg:
        return None
    return phi.to_lefschetz()


def volume(f, weight=None, order=None):
    """``integrate`` for sentences, returned as an element of A when the
    residue classes collapse (``None`` otherwise)."""
    return value_of(integrate(f, weight, order))


def same_function(phi, psi):
    a, b = value_of(phi), value_of(psi)
    if a is not None and b is not None:
        return a == b
    return phi.probe_equal(psi)


def check_fubini(f, weight=None, orders=None):
    """Integrate under every (or the given) variable orders; returns
    ``(agree, results)``."""
    f = _as_formula(f)
    vf = f.names(VF)
    orders = list(orders) if orders is not None else list(itertools.permutations(vf))
    results = [integrate(f, weight, o) for o in orders]
    agree = all(same_function(results[0], r) for r in results[1:])
    return agree, results


def integrate_graph(center, weight=None, f=None, var="z"):
    """Pushforward along the graph ``var = center``: evaluate at the center.

    The jacobian of a graph inclusion is trivial, so the result is the
    constant ``L^(-weight(center))`` times the indicator of ``f`` there.
    """
    c = center if isinstance(center, Center) else Center.parse(str(center))
    if c.level is not None:
        raise TruncationTooShallow("graph centers must be exact")
    subst = _center_term(c)
    decls = ((var, VF),)
    value = ONE_ELEMENT
    if weight is not None:
        w = fm.parse_term(weight, decls, VG) if isinstance(weight, str) else weight
        w = fm.rewrite_term(w, lambda t: subst if isinstance(t, fm.Var) and t.name == var else None)
        sentence = integrate_constant_ord(w)
        value = LefschetzElement.L(-sentence)
    if f is not None:
        g = _as_formula(f)
        node = fm.substitute(g, var, subst) if isinstance(g, fm.Formula) else g
        out = _decide_sentence(node.body if isinstance(node, fm.Formula) else node)
        if not out:
            value = LefschetzElement.coerce(0)
    return ConstructibleFunction.constant(value)


ONE_ELEMENT = LefschetzElement.coerce(1)


def _center_term(c):
    out = None
    for k in sorted(c.terms):
        v = c.terms[k]
        if v.denominator != 1:
            raise NotPrepared("graph centers must lie in Z[t]")
        mono = fm.Num(int(v), VF) if k == 0 else fm.BinOp("*", fm.Num(int(v), VF), fm.Pow(fm.Unif(), k, VF), VF)
        out = mono if out is None else fm.BinOp("+", out, mono, VF)
    return out if out is not None else fm.Num(0, VF)


def integrate_constant_ord(w):
    """Value of a ground VG term whose ord(...) arguments are constants."""
    prep = _Preparer(())
    t = fm.rewrite_term(w, _ord_rewriter(prep, {}))
    aff = pb.term_to_affine(t)
    if aff.vars:
        raise NotPrepared("graph weight still has free variables")
    return aff.evaluate({})


def _decide_sentence(node):
    prep = _Preparer(())
    body = _rewrite(node, prep, {})
    phi = ConstructibleFunction.indicator(body)
    return phi.to_lefschetz() != 0


def change_of_variables(u, v, f, weight=None, var=None):
    """Integrate ``f`` (a formula in one VF variable ``s``) through the
    affine substitution ``s = u*x + v``.

    Returns ``L^(-ord u) * integral of f(u x + v) dx``, which equals the
    integral of ``f`` itself; ``u`` and ``v`` must be constants of Z[t].
    """
    f = _as_formula(f)
    vf = f.names(VF)
    if len(vf) != 1:
        raise ValueError("change_of_variables expects one VF variable")
    s = var or vf[0]
    ut = _center_term_text(u, f.decls)
    vt = _center_term_text(v, f.decls)
    cu = Center(dict((k, c) for (_m, k), c in fm.vf_poly(ut).items()))
    if cu.is_zero():
        raise ValueError("u must be nonzero")
    x = _fresh("x", set(f.names()))
    xv = fm.Var(x, VF)
    image = fm.BinOp("+", fm.BinOp("*", ut, xv, VF), vt, VF)
    decls = tuple((x, VF) if (n, srt) == (s, VF) else (n, srt) for n, srt in f.decls)
    body = fm.substitute(fm.Formula(f.decls, f.body), s, image).body
    w = None
    if weight is not None:
        w = fm.parse_term(weight, f.decls, VG) if isinstance(weight, str) else weight
        w = fm.rewrite_term(w, lambda t: image if isinstance(t, fm.Var) and t.name == s else None)
    pulled = integrate(fm.Formula(decls, body), w)
    return pulled.scale(LefschetzElement.L(-cu.ord()))


def _center_term_text(c, decls):
    if isinstance(c, int):
        c = str(c)
    t = fm.parse_term(c, decls, VF) if isinstance(c, str) else c
    if fm.vf_poly_vars(fm.vf_poly(t)):
        raise NotPrepared("only affine maps with constant coefficients are supported")
    return t
