"""A healthy-looking up-down node where continuity from below still fails.

Run:  python demos/04_failure_of_continuity.py
"""

import importlib.resources as resources
from fractions import Fraction as Q

from trajhedge import (
    EventSet,
    HypothesisError,
    NodeAtom,
    analyze,
    decomposition_feasible,
    doob_decompose,
    i_bar,
    is_null,
    parse_payoff,
    parse_process,
    parse_tree,
    render_report,
    sigma_bar,
)


def corpus(name):
    return (resources.files("trajhedge") / "corpus_data" / name).read_text()


tree = parse_tree(corpus("example-l-failure.txt"))
print(render_report(analyze(tree)))

print("the value-2 node 'u' is up-down, yet continuity fails there: its up")
print("continuation is a sure-win node, so losses on a short position are")
print("recoverable for free, and the down continuation is the single step")
print("-1/2 - a sure thing off a null set.")
print()

null, res = is_null(tree, EventSet([NodeAtom("ud")]))
print(f"the down-step singleton is NOT null: cover cost = {res.value} "
      f"(>= 1/6), null = {null}")
print("so the failure set is not negligible and the a.e. assumption breaks.")
print()

f1 = parse_payoff(corpus("payoff-l-failure-f1.txt"), tree)
s = sigma_bar(tree, f1)
print(f"outer price of the time-1 claim (1 constant path / 2 elsewhere): "
      f"{s.value} ({'attained' if s.attained else 'not attained'})")
print("the whole value-2 cylinder is waived by the failure, leaving only the")
print("constant path and the drop to hedge: V=1, h=-1 does it.")
print()

proc = parse_process(corpus("process-l-failure.txt"), tree)
for d0 in (Q(1, 4), Q(1, 2), Q(3, 4), Q(1)):
    feas, where = decomposition_feasible(tree, proc, [d0, Q(1, 10), Q(1, 10)])
    print(f"slack0 = {d0}: decomposition system feasible = {feas}"
          + (f" (blocked at {where!r})" if not feas else ""))
try:
    doob_decompose(tree, proc, [Q(1, 2), Q(1, 10), Q(1, 10)])
except HypothesisError as exc:
    print(f"constructive decomposition refuses outright: {exc}")
