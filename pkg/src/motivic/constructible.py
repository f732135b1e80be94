"""Constructible motivic functions on parameter spaces h[0, n, r].

A function is a finite sum of terms ``[Y -> S] x E`` where ``[Y -> S]`` is a
residue-field class over the RF parameters and ``E`` is a list of guarded
exponential-polynomial pieces ``(guard, exponent, poly)`` in the VG
parameters (see :mod:`motivic.presburger`).  The value at a point of S over
F_q is ``count(Y_s) * theta_q(E(s))``.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from . import formula as fm
from . import presburger as pb
from .errors import IllFormed, SignatureMismatch, SortError
from .lefring import LefschetzElement, ONE, ZERO
from .resfield import FiniteField, ResidueClass, rename_free, substitute_node

PROBE_FIELDS = (3, 5, 7)


def _gt_mul(a, b):
    out = []
    for g1, e1, p1 in a:
        for g2, e2, p2 in b:
            g = pb.make_guard(list(g1) + list(g2))
            if g is not None:
                out.append((g, e1 + e2, pb.p_mul(p1, p2)))
    return pb.combine(out)


def _gt_scale(a, c):
    return pb.combine((g, e, pb.p_scale(p, c)) for g, e, p in a)


def _gt_const(c=ONE):
    return pb.combine([(frozenset(), pb.Affine(), pb.p_const(c))])


class ConstructibleFunction:
    """Sum of ``(ResidueClass, guarded exponential terms)`` over S = (rf, vg)."""

    def __init__(self, rf=(), vg=(), terms=()):
        self.rf = tuple(rf)
        self.vg = tuple(vg)
        out = []
        for cls, gts in terms:
            if cls.params != self.rf:
                cls = cls.with_params(self.rf)
            gts = tuple(pb.combine(gts))
            if gts and not (isinstance(cls.body, fm.Truth) and not cls.body.value):
                out.append((cls, gts))
        self.terms = tuple(out)

    # ------------------------------------------------------- constructors
    @classmethod
    def constant(cls, c, rf=(), vg=()):
        return cls(rf, vg, [(ResidueClass.point(rf), _gt_const(LefschetzElement.coerce(c)))])

    @classmethod
    def from_class(cls, klass, vg=()):
        return cls(klass.params, vg, [(klass, _gt_const())])

    @classmethod
    def from_sum(cls, expsum, rf=()):
        return cls(rf, expsum.vars, [(ResidueClass.point(rf), expsum.terms)])

    @classmethod
    def exponential(cls, exponent, rf=(), vg=(), guard=frozenset(), coef=ONE, poly=None):
        """``coef * poly * L^exponent`` on a guard; ``exponent`` an Affine."""
        p = pb.p_scale(poly if poly is not None else pb.p_const(1), coef)
        return cls(rf, vg, [(ResidueClass.point(rf), [(guard, exponent, p)])])

    @classmethod
    def indicator(cls, node, rf=(), vg=()):
        """``1_phi`` for a formula mixing RF atoms and value-group subformulas.

        Maximal pure value-group subformulas become Presburger sets; the
        value group is split by their truth pattern and each pattern leaves
        a pure residue-field formula.
        """
        if isinstance(node, str):
            f = fm.parse(node)
            rf = rf or f.names(fm.Sort.RF)
            vg = vg or f.names(fm.Sort.VG)
            node = f.body
        blocks = []
        _collect_vg_blocks(node, blocks)
        sets = [pb.node_to_dnf(b) for b in blocks]
        terms = []
        for pattern in itertools.product((True, False), repeat=len(blocks)):
            guards = [frozenset()]
            for dnf, val in zip(sets, pattern):
                guards = pb.dnf_and(guards, dnf if val else pb.dnf_not(dnf))
                if not guards:
                    break
            if not guards:
                continue
            rf_body = _replace_blocks(node, dict(zip(blocks, pattern)))
            klass = ResidueClass.make(rf, (), rf_body)
            for g in pb.dnf_disjoint(guards):
                terms.append((klass, [(g, pb.Affine(), pb.p_const(1))]))
        return cls(rf, vg, terms)

    # ------------------------------------------------------- ring structure
    def _check(self, other):
        if (self.rf, set(self.vg)) != (other.rf, set(other.vg)):
            raise SignatureMismatch(f"signatures {self.rf, self.vg} and {other.rf, other.vg} differ")

    def __add__(self, other):
        self._check(other)
        return ConstructibleFunction(self.rf, self.vg, self.terms + other.terms)

    def scale(self, c):
        return ConstructibleFunction(self.rf, self.vg, [(k, _gt_scale(g, c)) for k, g in self.terms])

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def multiply(self, other):
        self._check(other)
        terms = []
        for k1, g1 in self.terms:
            for k2, g2 in other.terms:
                gts = _gt_mul(g1, g2)
                if gts:
                    terms.append((k1 * k2, gts))
        return ConstructibleFunction(self.rf, self.vg, terms)

    __mul__ = multiply

    # ------------------------------------------------------- functoriality
    def pullback(self, rf_map=None, vg_map=None, rf=None, vg=None):
        """Compose with a map S -> S' given by component terms.

        ``rf_map`` sends each RF parameter of this function to an RF term
        (text or AST) in the new RF variables ``rf``; ``vg_map`` sends each VG
        parameter to an affine form (text, Affine or int) in ``vg``.
        """
        rf = tuple(self.rf if rf is None else rf)
        vg = tuple(self.vg if vg is None else vg)
        rf_map = dict(rf_map or {})
        vg_map = dict(vg_map or {})
        decls = tuple((n, fm.Sort.RF) for n in rf) + tuple((n, fm.Sort.VG) for n in vg)
        rf_terms = {}
        for name in self.rf:
            tm = rf_map.get(name, fm.Var(name, fm.Sort.RF))
            if isinstance(tm, str):
                tm = fm.parse_term(tm, decls, fm.Sort.RF)
            if tm.sort is not fm.Sort.RF:
                raise SortError(f"RF parameter {name!r} mapped to a {tm.sort.value} term")
            rf_terms[name] = tm
        vg_affs = {}
        for name in self.vg:
            tm = vg_map.get(name, pb.Affine.var(name))
            if isinstance(tm, int):
                tm = pb.Affine.constant(tm)
            elif isinstance(tm, str):
                tm = pb.term_to_affine(fm.parse_term(tm, decls, fm.Sort.VG))
            elif not isinstance(tm, pb.Affine):
                tm = pb.term_to_affine(tm)
            vg_affs[name] = tm
        # rename to fresh names first so that the substitution is simultaneous
        tmp = {n: f"_pb{i}" for i, n in enumerate(self.rf)}
        tmpv = {n: f"_pv{i}" for i, n in enumerate(self.vg)}
        terms = []
        for klass, gts in self.terms:
            body = rename_free(klass.body, tmp)
            for n, tm in rf_terms.items():
                body = substitute_node(body, tmp[n], tm)
            new_class = ResidueClass(rf, klass.aux, body)
            new_gts = []
            for g, e, p in gts:
                g2 = [pb.Constraint(c.kind, c.aff.rename(tmpv), c.modulus) for c in g]
                e2 = e.rename(tmpv)
                p2 = pb.p_rename(p, tmpv)
                for n, aff in vg_affs.items():
                    g2 = [pb.Constraint(c.kind, c.aff.subst(tmpv[n], aff), c.modulus) for c in g2]
                    e2 = e2.subst(tmpv[n], aff)
                    p2 = pb.p_subst(p2, tmpv[n], aff)
                gg = pb.make_guard(g2)
                if gg is not None:
                    new_gts.append((gg, e2, p2))
            terms.append((new_class, new_gts))
        return ConstructibleFunction(rf, vg, terms)

    def pushforward_rf(self, names):
        """Integrate out RF parameters (counting measure on the fibres)."""
        names = tuple(names)
        for n in names:
            if n not in self.rf:
                raise IllFormed(f"{n!r} is not a residue-field parameter of this function")
        rf = tuple(n for n in self.rf if n not in names)
        terms = [(klass.absorb(names), gts) for klass, gts in self.terms]
        return ConstructibleFunction(rf, self.vg, terms)

    def pushforward_vg(self, names):
        """Sum out VG parameters; raises NotSummable if a series diverges."""
        names = tuple(names)
        for n in names:
            if n not in self.vg:
                raise IllFormed(f"{n!r} is not a value-group parameter of this function")
        vg = tuple(n for n in self.vg if n not in names)
        terms = []
        for klass, gts in self.terms:
            out = list(gts)
            for y in names:
                out = pb.sum_out(out, y)
            terms.append((klass, out))
        return ConstructibleFunction(self.rf, vg, terms)

    # ------------------------------------------------------- evaluation
    def value(self, F, rf_point=(), vg_point=()):
        """Exact rational value over F_q at a parameter point."""
        renv = dict(zip(self.rf, rf_point)) if not isinstance(rf_point, dict) else rf_point
        venv = dict(zip(self.vg, vg_point)) if not isinstance(vg_point, dict) else vg_point
        out = Fraction(0)
        for klass, gts in self.terms:
            n = klass.count_points(F, tuple(renv[p] for p in klass.params))
            if n:
                out += n * pb.evaluate_gterms(gts, venv, F.q)
        return out

    def specialize(self, F):
        return SpecializedFunction(F, self)

    def simplify(self):
        """Fold parameter-free classes that collapse to A into the coefficients."""
        acc = {}
        order = []
        for klass, gts in self.terms:
            val = klass.to_lefschetz() if not klass.params else None
            if val is not None:
                klass = ResidueClass.point(self.rf)
                gts = _gt_scale(gts, val)
            key = klass
            if key not in acc:
                acc[key] = []
                order.append(key)
            acc[key].extend(gts)
        return ConstructibleFunction(self.rf, self.vg, [(k, acc[k]) for k in order])

    def to_lefschetz(self):
        """The element of A denoted by a parameter-free function, or ``None``
        if some class does not collapse."""
        if self.rf or self.vg:
            raise ValueError("function still has parameters")
        out = ZERO
        for klass, gts in self.terms:
            val = klass.to_lefschetz()
            if val is None:
                return None
            out = out + val * pb.total(gts)
        return out

    def probe_equal(self, other, fields=PROBE_FIELDS, radius=3):
        """Heuristic equality by exact evaluation on a battery of points."""
        self._check(other)
        for p in fields:
            F = FiniteField(p)
            for rpt in itertools.product(F.elements(), repeat=len(self.rf)):
                for vpt in itertools.product(range(-radius, radius + 1), repeat=len(self.vg)):
                    venv = dict(zip(self.vg, vpt))
                    if self.value(F, rpt, venv) != other.value(F, rpt, venv):
                        return False
        return True

    # ------------------------------------------------------- text
    def records(self):
        """``(class text, expsum text)`` pairs."""
        out = []
        for klass, gts in self.terms:
            es = "; ".join(f"({pb.p_str(p)}) * L^({e}) on {pb.guard_text(g)}" for g, e, p in gts)
            out.append((str(klass), es))
        return out

    def __str__(self):
        if not self.terms:
            return "0"
        return "\n".join(f"{c} x {e}" for c, e in self.records())


class SpecializedFunction:
    """Gamma of a constructible function at a finite field: an exact
    rational-valued function of (RF point, VG point)."""

    def __init__(self, F, phi):
        self.F = F
        self.q = F.q
        self.phi = phi

    def __call__(self, rf_point=(), vg_point=()):
        return self.phi.value(self.F, rf_point, vg_point)

    def table(self, radius=2):
        out = []
        for rpt in itertools.product(self.F.elements(), repeat=len(self.phi.rf)):
            for vpt in itertools.product(range(-radius, radius + 1), repeat=len(self.phi.vg)):
                out.append((rpt, vpt, self(rpt, vpt)))
        return out


def projection_formula_check(alpha, beta, names):
    """Compare ``f_!(f^* alpha * beta)`` with ``alpha * f_!(beta)`` for the
    projection f forgetting the given parameters of ``beta``'s space."""
    names = tuple(names)
    rf_names = tuple(n for n in names if n in beta.rf)
    vg_names = tuple(n for n in names if n in beta.vg)
    up = alpha.pullback(rf=beta.rf, vg=beta.vg)
    lhs = up.multiply(beta)
    rhs_push = beta
    if vg_names:
        lhs = lhs.pushforward_vg(vg_names)
        rhs_push = rhs_push.pushforward_vg(vg_names)
    if rf_names:
        lhs = lhs.pushforward_rf(rf_names)
        rhs_push = rhs_push.pushforward_rf(rf_names)
    rhs = alpha.pullback(rf=rhs_push.rf, vg=rhs_push.vg).multiply(rhs_push)
    return lhs.probe_equal(rhs)


# ---------------------------------------------------- formula helpers

def _is_vg_block(node):
    if isinstance(node, fm.Truth):
        return False
    fv = fm.free_vars(node)
    if any(s is not fm.Sort.VG for _, s in fv):
        return False
    return all(a.sort is fm.Sort.VG for a in fm.atoms(node))


def _collect_vg_blocks(node, out):
    if _is_vg_block(node):
        if node not in out:
            out.append(node)
        return
    if isinstance(node, fm.Atom):
        if node.sort is not fm.Sort.RF:
            raise SortError("indicator formulas may only mix RF atoms with value-group subformulas")
        return
    if isinstance(node, fm.Not):
        _collect_vg_blocks(node.arg, out)
    elif isinstance(node, (fm.And, fm.Or)):
        _collect_vg_blocks(node.left, out)
        _collect_vg_blocks(node.right, out)
    elif isinstance(node, fm.Quant):
        if node.sort is not fm.Sort.RF:
            raise SortError("value-group quantifiers must not range over RF atoms")
        _collect_vg_blocks(node.body, out)


def _replace_blocks(node, values):
    if node in values:
        return fm.Truth(values[node])
    if isinstance(node, fm.Not):
        a = _replace_blocks(node.arg, values)
        return fm.Truth(not a.value) if isinstance(a, fm.Truth) else fm.Not(a)
    if isinstance(node, (fm.And, fm.Or)):
        a, b = _replace_blocks(node.left, values), _replace_blocks(node.right, values)
        absorbing = isinstance(node, fm.Or)
        for x, y in ((a, b), (b, a)):
            if isinstance(x, fm.Truth):
                return x if x.value == absorbing else y
        return type(node)(a, b)
    if isinstance(node, fm.Quant):
        body = _replace_blocks(node.body, values)
        if isinstance(body, fm.Truth):
            return body
        return fm.Quant(node.kind, node.sort, node.var, body)
    return node
