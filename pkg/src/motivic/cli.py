"""Command line front end: ``motivic <command> ...``.

Exit codes: 0 success, 2 NotPrepared, 3 NotSummable, 4 PrecisionExhausted,
5 BudgetExceeded, 1 any other error.
"""

import argparse
import json
import os
import sys
from fractions import Fraction

from . import formula as fm
from . import localoracle as lo
from . import presburger as pb
from . import vfcells as vc
from .errors import MotivicError, ParseError, PrecisionExhausted
from .lefring import parse_element
from .resfield import FiniteField, ResidueClass, parse_field


def _text(arg):
    """A formula given inline or as a path to a file holding it."""
    if os.path.isfile(arg):
        with open(arg) as fh:
            return " ".join(line.strip() for line in fh if not line.lstrip().startswith("#")).strip()
    return arg


def _in_unit_polydisc(text):
    """The formula conjoined with ord(v) >= 0 for every VF variable."""
    names = fm.parse(text).names(fm.Sort.VF)
    head, _, body = text.rpartition(";")
    bounds = "".join(f" & ord({v}) >= 0" for v in names)
    return f"{head}; ({body.strip()}){bounds}"


def _frac(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _primes(spec):
    return tuple(int(p) for p in spec.split(",") if p.strip())


def _emit(args, lines, record):
    if args.json:
        print(json.dumps(record, sort_keys=True))
    else:
        for line in lines:
            print(line)


def _thetas(elem, qs):
    return [(q, elem.theta(Fraction(q))) for q in qs]


# -------------------------------------------------------------- commands

def cmd_integrate(args):
    f = _text(args.formula)
    order = tuple(args.order.split(",")) if args.order else None
    trace = []
    phi = vc.integrate(f, args.weight, order, trace=trace)
    elem = vc.value_of(phi)
    shown = str(elem) if elem is not None else str(phi)
    lines = [shown] + [f"  {t}" for t in trace]
    record = {"command": "integrate", "formula": f, "weight": args.weight, "result": shown, "trace": trace}
    if elem is not None and args.q:
        vals = _thetas(elem, args.q)
        lines += [f"theta_{q} = {_frac(v)}" for q, v in vals]
        record["theta"] = {q: _frac(v) for q, v in vals}
    if args.primes:
        vals = [(p, phi.value(FiniteField(p))) for p in _primes(args.primes)]
        lines += [f"theta_{p} = {_frac(v)}" for p, v in vals]
        record["theta_p"] = {str(p): _frac(v) for p, v in vals}
    status = 0
    if args.check_fubini:
        ok, results = vc.check_fubini(f, args.weight)
        lines.append(f"fubini: {'agree' if ok else 'DISAGREE'} over {len(results)} orders")
        record["fubini"] = ok
        status = 0 if ok else 1
    _emit(args, lines, record)
    return status


def cmd_sum(args):
    elem = pb.parse_sum(args.expr).sum()
    lines = [str(elem)]
    vals = _thetas(elem, args.q or ())
    lines += [f"theta_{q} = {_frac(v)}" for q, v in vals]
    _emit(args, lines, {"command": "sum", "expr": args.expr, "result": str(elem),
                        "theta": {q: _frac(v) for q, v in vals}})
    return 0


def cmd_count(args):
    F = parse_field(args.field)
    params = {}
    for item in args.param or ():
        name, _, val = item.partition("=")
        params[name.strip()] = F.from_int(int(val))
    klass = ResidueClass.parse(_text(args.formula), params=tuple(params))
    n = klass.count_points(F, params)
    _emit(args, [str(n)], {"command": "count", "formula": args.formula, "field": str(F), "count": n})
    return 0


def cmd_specialize(args):
    text = _text(args.expr)
    try:
        elem, phi = parse_element(text), None
    except ParseError:
        phi = vc.integrate(text, args.weight)
        elem = vc.value_of(phi)
    rows = []
    if elem is not None:
        rows += [(f"q={q}", elem.theta(Fraction(q))) for q in args.q or ()]
    fields = [parse_field(s) for s in args.field or ()] + [FiniteField(p) for p in _primes(args.primes or "")]
    for F in fields:
        rows.append((f"field={F}", (phi or vc.ConstructibleFunction.constant(elem)).value(F)))
    if not rows:
        raise ValueError("give at least one --q, --field or --primes")
    _emit(args, [f"{k} {_frac(v)}" for k, v in rows],
          {"command": "specialize", "expr": text, "values": {k: _frac(v) for k, v in rows}})
    return 0


def cmd_compare(args):
    f = _text(args.formula)
    primes = _primes(args.primes)
    try:
        phi = vc.integrate(_in_unit_polydisc(f), args.weight)
    except MotivicError as e:
        phi, why = None, type(e).__name__
    rep = lo.ake_compare(f, primes, args.level, args.weight)
    lines = [f"# {f}", "p | motivic | Qp | Fp((t)) | agree"]
    rows = []
    for r in rep.rows:
        mot = None if phi is None else phi.value(FiniteField(r.p))
        cells = ["-" if mot is None else _frac(mot)]
        for res in (r.qp, r.laurent):
            cells.append("-" if res is None else
                         (_frac(res.value) if res.status != "lower-bound-only" else "PrecisionExhausted"))
        decided = [c for c in cells if c not in ("-", "PrecisionExhausted")]
        agree = len(set(decided)) == 1 and r.agree is True
        lines.append(f"{r.p} | {' | '.join(cells)} | {'yes' if agree else 'no'}")
        rows.append({"p": r.p, "motivic": cells[0], "qp": cells[1], "laurent": cells[2], "agree": agree})
    bad = [row["p"] for row in rows if not row["agree"]]
    n = max(bad, default=0)
    lines.append(f"N = {n}")
    if phi is None:
        lines.append(f"motivic column unavailable: {why}")
    _emit(args, lines, {"command": "compare", "formula": f, "rows": rows, "N": n})
    undecided = any(r.agree is None for r in rep.rows)
    return PrecisionExhausted.exit_code if undecided else 0


def cmd_oracle_vol(args):
    f = _text(args.formula)
    fields = [lo.LocalField.parse(s) for s in args.field or ()]
    fields += [lo.LocalField.qp(p) for p in _primes(args.primes or "")]
    if not fields:
        fields = [lo.LocalField.qp(5)]
    results = [lo.volume(f, K, args.level, args.weight) for K in fields]
    lines = [r.report_line() for r in results]
    _emit(args, lines, {"command": "oracle-vol", "formula": f, "reports": lines})
    if any(r.status == "lower-bound-only" for r in results):
        return PrecisionExhausted.exit_code
    return 0


def cmd_artin(args):
    rep = lo.terjanian_verify()
    _emit(args, [rep.line()], {"command": "artin", "ok": rep.ok, "zero_classes": rep.zero_classes,
                               "witness": rep.witness})
    return 0 if rep.ok else 1


def cmd_decompose(args):
    dom = _text(args.domain) if args.domain else None
    D = vc.linear_cell_decompose(args.centers, dom, var=args.var)
    text = D.text()
    _emit(args, text.splitlines(), {"command": "decompose", "cells": text,
                                    "gaps": {f"{i},{j}": g for (i, j), g in sorted(D.gaps.items())}})
    return 0


# ---------------------------------------------------------------- parser

def build_parser():
    ap = argparse.ArgumentParser(prog="motivic", description="Exact motivic and p-adic integration.")
    ap.add_argument("--json", action="store_true", help="emit one JSON record instead of text")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, weight=True):
        p.add_argument("--json", action="store_true", default=argparse.SUPPRESS)
        if weight:
            p.add_argument("--weight", help="VG term w; integrates L^(-w)")

    p = sub.add_parser("integrate", help="symbolic integral of a formula")
    p.add_argument("formula", help="formula text or file")
    common(p)
    p.add_argument("--order", help="comma separated VF integration order")
    p.add_argument("--q", action="append", help="evaluate theta_q (repeatable)")
    p.add_argument("--primes", help="specialize at these prime fields, e.g. 3,5,7")
    p.add_argument("--check-fubini", action="store_true")
    p.set_defaults(run=cmd_integrate)

    p = sub.add_parser("sum", help="closed form of an exponential sum")
    p.add_argument("expr", help='e.g. "L^-i on i>=0"')
    common(p, weight=False)
    p.add_argument("--q", action="append")
    p.set_defaults(run=cmd_sum)

    p = sub.add_parser("count", help="count points of a residue field formula")
    p.add_argument("formula")
    common(p, weight=False)
    p.add_argument("--field", required=True, help="e.g. Fq(p=5,e=1) or F9")
    p.add_argument("--param", action="append", help="name=value for a parameter")
    p.set_defaults(run=cmd_count)

    p = sub.add_parser("specialize", help="evaluate an element of A or an integral")
    p.add_argument("expr", help="element text, or formula text or file")
    common(p)
    p.add_argument("--q", action="append")
    p.add_argument("--field", action="append")
    p.add_argument("--primes")
    p.set_defaults(run=cmd_specialize)

    p = sub.add_parser("compare", help="motivic value against Q_p and F_p((t))")
    p.add_argument("formula")
    common(p)
    p.add_argument("--primes", default="2,3,5,7")
    p.add_argument("--level", type=int, default=3)
    p.set_defaults(run=cmd_compare)

    p = sub.add_parser("oracle-vol", help="certified volume by residue classes")
    p.add_argument("formula")
    common(p)
    p.add_argument("--field", action="append", help="Q5, Qp(5) or F5((t)) (repeatable)")
    p.add_argument("--primes")
    p.add_argument("--level", type=int, default=3)
    p.set_defaults(run=cmd_oracle_vol)

    p = sub.add_parser("artin", help="verify the Terjanian quartic")
    common(p, weight=False)
    p.set_defaults(run=cmd_artin)

    p = sub.add_parser("decompose", help="closest-center cells for given centers")
    p.add_argument("centers", nargs="+")
    common(p, weight=False)
    p.add_argument("--domain", help="formula restricting the cells")
    p.add_argument("--var", default="x")
    p.set_defaults(run=cmd_decompose)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except MotivicError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except (ValueError, TypeError, KeyError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
