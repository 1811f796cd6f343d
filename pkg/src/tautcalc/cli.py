"""Command-line front end.

Exit codes: 0 success, 2 expression parse error, 3 degree/space error,
4 verification failure, 5 unsupported operation (genus gate, unresolved
decoration, missing generator formula).  The TAUTCALC_WK_MEMO_LIMIT
environment variable caps the psi-number memo table.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .errors import (
    CalcError,
    DegreeError,
    ExprParseError,
    SpaceError,
    UnsupportedError,
)
from .expressions import (
    TautExpr,
    expr_to_json_dict,
    integrate,
    multiply,
    normalize,
    pullback_forget,
    pushforward_forget,
)
from .exprlang import format_expression, format_rational, parse_expression
from .graphs import graph_to_json_dict
from .hyperelliptic import HypClassId, class_of, class_source
from .moving_curves import b_curve_pairing, conj_pair_family, pair, pair_termwise
from .psi_numbers import wk
from .spaces import MarkedSpace
from .verify import report_lines, run_verification

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DEGREE = 3
EXIT_VERIFY = 4
EXIT_UNSUPPORTED = 5


def _space_from_args(args) -> MarkedSpace:
    markings = ()
    if args.markings:
        markings = tuple(m.strip() for m in args.markings.split(",") if m.strip())
    return MarkedSpace(args.g, markings)


def _print_expression(expr: TautExpr, args) -> None:
    if getattr(args, "json", False):
        print(json.dumps(expr_to_json_dict(expr), sort_keys=True))
        return
    try:
        print(format_expression(expr))
    except UnsupportedError:
        print(json.dumps(expr_to_json_dict(expr), sort_keys=True))
    if getattr(args, "dump_graph", False):
        for mono in sorted(expr.terms, key=str):
            for factor in mono.strata:
                if hasattr(factor, "graph"):
                    print(json.dumps(graph_to_json_dict(factor.graph), sort_keys=True))


def _cmd_wk(args) -> int:
    exps = tuple(int(x) for x in args.exps.split(",") if x.strip() != "")
    print(format_rational(wk(args.g, exps)))
    return EXIT_OK


def _cmd_integrate(args) -> int:
    sp = _space_from_args(args)
    expr = parse_expression(sp, args.expression)
    print(format_rational(integrate(expr)))
    return EXIT_OK


def _cmd_multiply(args) -> int:
    sp = _space_from_args(args)
    a = parse_expression(sp, args.left)
    b = parse_expression(sp, args.right)
    _print_expression(multiply(a, b), args)
    return EXIT_OK


def _cmd_push(args) -> int:
    sp = _space_from_args(args)
    expr = parse_expression(sp, args.expression)
    _print_expression(pushforward_forget(expr, args.label), args)
    return EXIT_OK


def _cmd_pull(args) -> int:
    sp = _space_from_args(args)
    expr = parse_expression(sp, args.expression)
    _print_expression(normalize(pullback_forget(expr, args.label)), args)
    return EXIT_OK


def _cmd_pair(args) -> int:
    if args.curve == "b-curve":
        res = b_curve_pairing(args.free)
        if args.json:
            print(json.dumps({
                "value": format_rational(res.value),
                "up_to_positive_power_of_two": res.up_to_positive_power_of_two,
                "sign": res.sign,
            }))
        else:
            print(f"{format_rational(res.value)} (up to a positive power of two)")
        return EXIT_OK
    family = conj_pair_family(args.free)
    expr = parse_expression(family.space, args.expression)
    value = pair(family, expr)
    if args.termwise:
        rows = [(m, format_rational(v)) for m, v in pair_termwise(family, expr)]
        if args.json:
            print(json.dumps({"value": format_rational(value), "termwise": rows}))
        else:
            for mono, v in rows:
                print(f"  {mono}: {v}")
            print(format_rational(value))
    elif args.json:
        print(json.dumps({"value": format_rational(value)}))
    else:
        print(format_rational(value))
    return EXIT_OK


def _cmd_class(args) -> int:
    id_ = HypClassId(args.l, args.m, args.n, genus=args.genus)
    expr = class_of(id_)
    if args.json:
        payload = expr_to_json_dict(expr)
        payload["source"] = class_source(id_)
        print(json.dumps(payload, sort_keys=True))
    else:
        _print_expression(expr, args)
        print(f"source: {class_source(id_)}", file=sys.stderr)
    return EXIT_OK


def _cmd_verify(args) -> int:
    results = run_verification(only=args.only)
    if args.json:
        print(json.dumps([res.__dict__ for res in results]))
    else:
        for line in report_lines(results):
            print(line)
        passed = sum(res.ok for res in results)
        print(f"{passed}/{len(results)} checks passed")
    if not results:
        print("no checks matched the filter", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK if all(res.ok for res in results) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tautcalc",
        description="Exact intersection calculus on moduli of stable curves, genus <= 2.",
        epilog="Set TAUTCALC_WK_MEMO_LIMIT to cap the psi-number memo table.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_space(p):
        p.add_argument("--g", type=int, required=True, help="genus (0..2)")
        p.add_argument("--markings", default="", help="comma-separated marking labels")

    def add_output(p):
        p.add_argument("--json", action="store_true", help="structured JSON output")
        p.add_argument("--dump-graph", action="store_true",
                       help="also dump stratum graphs as JSON")

    p = sub.add_parser("wk", help="psi intersection number")
    p.add_argument("--g", type=int, required=True)
    p.add_argument("--exps", required=True, help="comma-separated exponents a1,a2,...")
    p.set_defaults(fn=_cmd_wk)

    p = sub.add_parser("integrate", help="integrate a top-degree expression")
    add_space(p)
    p.add_argument("expression")
    p.set_defaults(fn=_cmd_integrate)

    p = sub.add_parser("multiply", help="product of two expressions, canonical form")
    add_space(p)
    add_output(p)
    p.add_argument("left")
    p.add_argument("right")
    p.set_defaults(fn=_cmd_multiply)

    p = sub.add_parser("push", help="pushforward along a forgetful map")
    add_space(p)
    add_output(p)
    p.add_argument("--label", required=True, help="marking to forget")
    p.add_argument("expression")
    p.set_defaults(fn=_cmd_push)

    p = sub.add_parser("pull", help="pullback along a forgetful map")
    add_space(p)
    add_output(p)
    p.add_argument("--label", required=True, help="fresh marking to add")
    p.add_argument("expression")
    p.set_defaults(fn=_cmd_pull)

    p = sub.add_parser("pair", help="pair a divisor expression with a moving family")
    p.add_argument("--curve", choices=["conj-pair", "b-curve"], required=True)
    p.add_argument("--free", type=int, default=0, help="number of free points")
    p.add_argument("--termwise", action="store_true", help="report per-term values")
    p.add_argument("--json", action="store_true")
    p.add_argument("expression", nargs="?")
    p.set_defaults(fn=_cmd_pair)

    p = sub.add_parser("class", help="registered hyperelliptic class expression")
    p.add_argument("--l", type=int, required=True, help="marked Weierstrass points")
    p.add_argument("--m", type=int, required=True, help="marked conjugate pairs")
    p.add_argument("--n", type=int, required=True, help="free points")
    p.add_argument("--genus", type=int, default=2, choices=[1, 2])
    add_output(p)
    p.set_defaults(fn=_cmd_class)

    p = sub.add_parser("verify", help="re-run every anchored computation")
    p.add_argument("--only", default=None, help="substring filter on group/name")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "curve", None) == "conj-pair" and not args.expression:
        print("error: the conj-pair curve needs an expression", file=sys.stderr)
        return EXIT_PARSE
    try:
        return args.fn(args)
    except ExprParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DegreeError, SpaceError) as exc:
        print(f"degree/space error: {exc}", file=sys.stderr)
        return EXIT_DEGREE
    except UnsupportedError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except CalcError as exc:  # pragma: no cover - residual calculator errors
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGREE


if __name__ == "__main__":
    sys.exit(main())
