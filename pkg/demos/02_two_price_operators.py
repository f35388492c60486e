"""The two superhedging operators disagree: outer price 0, null-operator 1/2.

Run:  python demos/02_two_price_operators.py
"""

import importlib.resources as resources
from fractions import Fraction as Q

from trajhedge import (
    EventSet,
    NodeAtom,
    PayoffSpec,
    Poly,
    i_bar,
    is_null,
    parse_payoff,
    parse_tree,
    sigma_bar,
    wealth_on_member,
)


def corpus(name):
    return (resources.files("trajhedge") / "corpus_data" / name).read_text()


tree = parse_tree(corpus("example-6-2.txt"))
f = parse_payoff(corpus("payoff-6-2-f.txt"), tree)
print("claim: 0 on the up branch, 1/n on the n-th down trajectory")
print()

s = sigma_bar(tree, f)
print(f"outer price     sigma(f) = {s.value}   attained: {s.attained}")
print(f"                ({s.note})")
print("The up branch is waived (sure-win shadow), so only the down family")
print("constrains the hedge: V + h*(-1/n^2) >= 1/n for every n.  Any finite")
print("short position leaves a small uncovered bump near n ~ |h|, but the")
print("bump vanishes as h -> -inf: the infimum 0 is approached, never hit.")
print()

r = i_bar(tree, f)
print(f"null operator   ibar(f)  = {r.value}   attained: {r.attained}")
print(f"certificate: V = {r.hedge.initial_capital}, "
      f"h0 = {r.hedge.hedge.at(0, 'r')}")
poly = wealth_on_member(tree, r.hedge, "down")
print(f"certificate wealth on down members: {poly.format_coeffs()} "
      "(= 1/2 + t^2/2 >= t = claim)")
print("The nonnegative-wealth constraint at the up node (V + h >= 0) blocks")
print("the hedge drift, so the two operators genuinely differ: 0 < 1/2.")
print()

print("tail indicators all cost 1, no matter how far out the tail starts:")
for n0 in (1, 5, 50):
    pieces = []
    if n0 > 1:
        pieces.append((1, n0 - 1, Poly.constant(0)))
    pieces.append((n0, None, Poly.constant(1)))
    ind = PayoffSpec(1, {"u": Q(0)}, {"down": tuple(pieces)})
    print(f"  ibar(1[down tail n >= {n0:2d}]) = {i_bar(tree, ind).value}")
print()

null, res = is_null(tree, EventSet([NodeAtom("u")]))
print(f"the whole up branch is null: cover cost {res.value} -> null = {null}")

tree_r = parse_tree(corpus("example-6-2-remark.txt"))
for name, doc in (
    ("constant path", "payoff maturity=1\nat z = 1\nat u = 0\nat m = 0\n"),
    ("drop path", "payoff maturity=1\nat z = 0\nat u = 0\nat m = 1\n"),
):
    val = i_bar(tree_r, parse_payoff(doc, tree_r)).value
    print(f"point-mass variant: cover cost of the {name} singleton = {val}")
print("so the classical point-mass measure calls the drop path negligible,")
print("while the null operator prices it at 1/2: the hedging notion of")
print("null sets is strictly finer here.")
