"""Hedge/compensator decomposition of the staircase supermartingale.

Run:  python demos/03_supermartingale_decomposition.py
"""

import importlib.resources as resources
from fractions import Fraction as Q

from trajhedge import (
    HypothesisError,
    SimpleStrategy,
    check_supermartingale,
    decomposition_feasible,
    doob_decompose,
    martingale_floor_check,
    parse_process,
    parse_tree,
    render_decomposition,
    verify_decomposition,
    wealth,
)


def corpus(name):
    return (resources.files("trajhedge") / "corpus_data" / name).read_text()


tree = parse_tree(corpus("example-6-2.txt"))
proc = parse_process(corpus("process-6-2-b.txt"), tree)

print("the staircase sequence: 0 at time 0, then the claim (0 up / 1/n down)")
ok, _ = check_supermartingale(tree, proc)
print(f"supermartingale check: {ok}")
print("(despite every path being nondecreasing! the one-step price of the")
print(" next value is 0 at the root because the hedge can drift)")
print()

for delta0 in (Q(1, 10), Q(1, 1000)):
    d = doob_decompose(tree, proc, [delta0, delta0])
    ok, why = verify_decomposition(tree, proc, d)
    print(f"slack {delta0}: root hedge {d.hedge.at(0, 'r')}, verified: {ok}")
    print(f"  exception set: {d.exception_set.atoms_sorted()}")
print("the exception set does not move with the slack, exactly as promised.")
print()

print("decomposition document for slack 1/10:")
print(render_decomposition(doob_decompose(tree, proc, [Q(1, 10), Q(1, 10)])))

feas, where = decomposition_feasible(tree, proc, [Q(0), Q(1, 10)])
print(f"zero opening slack: feasible = {feas} (blocked at node {where!r})")
print("with slack 0 the root would need h <= -n for every n: no finite")
print("position works, which is why the slack sequence cannot be dropped.")
print()

d = doob_decompose(tree, proc, [Q(1, 10), Q(1, 10)])
try:
    martingale_floor_check(tree, proc, d)
except HypothesisError as exc:
    print(f"floor check refuses: {exc}")
v0 = d.base + sum(d.deltas, Q(0))
print(
    "and rightly so - the floor really fails on the explicit up move: "
    f"{wealth(tree, SimpleStrategy(v0, d.hedge), 'u')} < 0"
)
