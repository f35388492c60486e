"""Command-line front end: trajhedge <command> ...

Exit status: 0 on success / PASS verdicts, 1 on FAIL verdicts, 2 on input or
hypothesis errors.  ``--json`` mirrors every text field machine-readably.
"""

from __future__ import annotations

import argparse
import json
import sys

from .analysis import analyze, render_report, report_json
from .corpus import render_corpus, run_corpus
from .decomposition import (
    DecompositionError,
    HypothesisError,
    doob_decompose,
    verify_decomposition,
)
from .fileformat import (
    ParseError,
    parse_decomposition,
    parse_payoff,
    parse_process,
    parse_tree,
    render_decomposition,
)
from .model import MINUS_INF, ModelError
from .oracle import OracleError, dual_price, grid_superhedge
from .poly import parse_rat, rat_str
from .pricing import (
    DEFAULT_TOLERANCE,
    Interval,
    PricingError,
    UnconvergedError,
    i_bar,
    sigma_bar,
)


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(str(exc), 0)


def _value_fields(v):
    if v == MINUS_INF:
        return {"value": "-inf"}
    if isinstance(v, Interval):
        return {"value_lo": rat_str(v.lo), "value_hi": rat_str(v.hi)}
    return {"value": rat_str(v)}


def _print_price(result, as_json: bool) -> None:
    if as_json:
        payload = dict(_value_fields(result.value))
        payload["attained"] = result.attained
        payload["active"] = result.active
        payload["note"] = result.note
        if result.hedge is not None:
            payload["certificate"] = {
                "initial_capital": rat_str(result.hedge.initial_capital),
                "positions": [
                    {"t": t, "node": nid, "h": rat_str(h)}
                    for (t, nid), h in result.hedge.hedge.items()
                ],
            }
        print(json.dumps(payload, indent=2, sort_keys=True))
        return
    if result.value == MINUS_INF:
        print("-inf")
    elif isinstance(result.value, Interval):
        print(f"[{rat_str(result.value.lo)}, {rat_str(result.value.hi)}]")
    else:
        attain = "attained" if result.attained else "not attained"
        print(f"{rat_str(result.value)} ({attain})")
    if result.note:
        print(f"note: {result.note}")
    if result.hedge is not None:
        print(f"certificate: V={rat_str(result.hedge.initial_capital)}")
        for (t, nid), h in result.hedge.hedge.items():
            if h != 0:
                print(f"  hedge t={t} at {nid} = {rat_str(h)}")
    if result.active:
        print("active constraints:")
        for a in result.active:
            print(f"  {a}")


def cmd_classify(args) -> int:
    tree = parse_tree(_read(args.tree))
    a = analyze(tree)
    if args.json:
        print(json.dumps(report_json(a)["nodes"], indent=2, sort_keys=True))
    else:
        sys.stdout.write(render_report(a, full=False))
    return 0


def cmd_analyze(args) -> int:
    tree = parse_tree(_read(args.tree))
    a = analyze(tree)
    if args.json:
        print(json.dumps(report_json(a), indent=2, sort_keys=True))
    else:
        sys.stdout.write(render_report(a, full=True))
    return 0


def cmd_price(args) -> int:
    tree = parse_tree(_read(args.tree))
    payoff = parse_payoff(_read(args.payoff), tree)
    tol = parse_rat(args.tolerance) if args.tolerance else DEFAULT_TOLERANCE
    node = args.node if args.node else tree.root
    if args.op == "sigma":
        result = sigma_bar(tree, payoff, node, tol)
    else:
        result = i_bar(tree, payoff, node, tol)
    _print_price(result, args.json)
    return 0


def cmd_decompose(args) -> int:
    tree = parse_tree(_read(args.tree))
    proc = parse_process(_read(args.process), tree)
    deltas = [parse_rat(part) for part in args.delta.split(",")]
    d = doob_decompose(tree, proc, deltas)
    text = render_decomposition(d)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"decomposition written to {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_verify_decomp(args) -> int:
    tree = parse_tree(_read(args.tree))
    proc = parse_process(_read(args.process), tree)
    d = parse_decomposition(_read(args.decomposition), tree)
    ok, why = verify_decomposition(tree, proc, d)
    if args.json:
        print(json.dumps({"pass": ok, "witness": why}))
    else:
        print("PASS" if ok else f"FAIL: {why}")
    return 0 if ok else 1


def cmd_oracle(args) -> int:
    tree = parse_tree(_read(args.tree))
    payoff = parse_payoff(_read(args.payoff), tree)
    if args.check == "dual":
        dual = dual_price(tree, payoff)
        lp = sigma_bar(tree, payoff)
        ok = lp.value == dual
        if args.json:
            print(
                json.dumps(
                    {
                        "pass": ok,
                        "dual": rat_str(dual),
                        **{f"lp_{k}": v for k, v in _value_fields(lp.value).items()},
                    }
                )
            )
        else:
            lpv = _value_fields(lp.value)
            print(f"dual={rat_str(dual)} lp={lpv.get('value', lp.value)}")
            print("PASS" if ok else "FAIL")
        return 0 if ok else 1
    bound, step = parse_rat(args.bound), parse_rat(args.step)
    upper, _ = grid_superhedge(tree, payoff, bound, step)
    lp = sigma_bar(tree, payoff)
    ok = lp.value == MINUS_INF or upper >= lp.value
    if args.json:
        print(
            json.dumps(
                {
                    "pass": ok,
                    "grid_upper": rat_str(upper),
                    **{f"lp_{k}": v for k, v in _value_fields(lp.value).items()},
                }
            )
        )
    else:
        print(f"grid upper bound={rat_str(upper)}")
        print("PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_corpus(args) -> int:
    rows = run_corpus()
    if args.json:
        print(
            json.dumps(
                [
                    {
                        "name": r.name,
                        "expected": r.expected,
                        "computed": r.computed,
                        "pass": r.ok,
                    }
                    for r in rows
                ],
                indent=2,
            )
        )
    else:
        sys.stdout.write(render_corpus(rows))
    return 0 if all(r.ok for r in rows) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="trajhedge",
        description="Superhedging operators and supermartingale decompositions "
        "on finitely-described trajectory sets",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("classify", help="one line per node: class, L, good")
    sp.add_argument("tree")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_classify)

    sp = sub.add_parser("analyze", help="full report incl. hypotheses and null cover")
    sp.add_argument("tree")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_analyze)

    sp = sub.add_parser("price", help="evaluate a superhedging operator")
    sp.add_argument("tree")
    sp.add_argument("payoff")
    sp.add_argument("--op", choices=("sigma", "ibar"), required=True)
    sp.add_argument("--node", default=None)
    sp.add_argument("--tolerance", default=None)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_price)

    sp = sub.add_parser("decompose", help="hedge/compensator split of a process")
    sp.add_argument("tree")
    sp.add_argument("process")
    sp.add_argument("--delta", required=True, help="comma-separated slacks")
    sp.add_argument("-o", "--output", default=None)
    sp.set_defaults(fn=cmd_decompose)

    sp = sub.add_parser("verify-decomp", help="check a decomposition document")
    sp.add_argument("tree")
    sp.add_argument("process")
    sp.add_argument("decomposition")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_verify_decomp)

    sp = sub.add_parser("oracle", help="cross-check the engine on explicit trees")
    sp.add_argument("tree")
    sp.add_argument("payoff")
    sp.add_argument("--check", choices=("dual", "grid"), required=True)
    sp.add_argument("--bound", default="8")
    sp.add_argument("--step", default="1/8")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_oracle)

    sp = sub.add_parser("corpus", help="recompute every bundled example value")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=cmd_corpus)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, ModelError, HypothesisError, OracleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PricingError, DecompositionError, UnconvergedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
