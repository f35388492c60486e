"""Independent cross-checks for the pricing engine on explicit trees.

The oracles deliberately avoid the LP machinery: a gridded backward search
bounds the superhedging price from above, and classical one-step martingale
measures (probability weights with zero mean increment) give the dual price
by backward maximization over local vertex measures.  Agreement with the
pricing module on arbitrage-free trees is asserted by the test suite; any
mismatch is an engine bug, not a modeling discrepancy.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .analysis import NodeClass, analyze
from .model import MINUS_INF, PayoffSpec, TrajectoryTree
from .poly import rat


class OracleError(ValueError):
    pass


def _require_explicit(tree: TrajectoryTree) -> None:
    if tree.families:
        raise OracleError("oracles run on explicit trees only")


# ---------------------------------------------------------------------------
# gridded superhedging search


def grid_superhedge(
    tree: TrajectoryTree,
    f: PayoffSpec,
    bound: Fraction,
    step: Fraction,
    nid: Optional[str] = None,
) -> tuple[Fraction, dict[str, Fraction]]:
    """Upper bound on the superhedging price from positions on a grid.

    Searches h in {-bound, ..., -step, 0, step, ..., bound} at every node by
    exhaustive backward recursion; refines towards the exact price as the
    step shrinks (Lipschitz in h with constant max |increment|).
    """
    _require_explicit(tree)
    nid = nid if nid is not None else tree.root
    bound, step = rat(bound), rat(step)
    if step <= 0 or bound <= 0:
        raise OracleError("grid bound and step must be positive")
    analysis = analyze(tree)
    f.validate(tree)
    ticks = []
    k = -bound
    while k <= bound:
        ticks.append(k)
        k += step
    best_h: dict[str, Fraction] = {}

    def ev(cur: str):
        node = tree.node(cur)
        if analysis.l_fails(cur):
            return MINUS_INF
        if node.time >= f.maturity:
            return f.node_values[tree.ancestor_at(cur, f.maturity)]
        child_vals = {child: ev(child) for _, child in node.children}
        best = None
        arg = Fraction(0)
        for h in ticks:
            worst = None
            for inc, child in node.children:
                v = child_vals[child]
                if v == MINUS_INF:
                    continue
                r = v - h * inc
                worst = r if worst is None else max(worst, r)
            if worst is None:
                return MINUS_INF
            if best is None or worst < best:
                best, arg = worst, h
        best_h[cur] = arg
        return best

    value = ev(nid)
    return value, best_h


# ---------------------------------------------------------------------------
# martingale measures


@dataclass(frozen=True)
class LocalVertex:
    """Extreme one-step measure at a node: support of at most two children."""

    weights: tuple[tuple[str, Fraction], ...]

    def items(self):
        return self.weights


@dataclass
class MeasureSet:
    feasible: bool
    local_vertices: dict[str, list[LocalVertex]]
    measures: list[dict[str, Fraction]]  # leaf -> probability, per global vertex
    truncated: bool = False

    @property
    def unique(self) -> bool:
        return self.feasible and len(self.measures) == 1 and not self.truncated


def _local_vertices(tree: TrajectoryTree, nid: str, feasible_children: set[str]):
    node = tree.node(nid)
    out: list[LocalVertex] = []
    kids = [(inc, c) for inc, c in sorted(node.children, key=lambda c: c[1])
            if c in feasible_children]
    for inc, c in kids:
        if inc == 0:
            out.append(LocalVertex(((c, Fraction(1)),)))
    for i, (inc_a, a) in enumerate(kids):
        for inc_b, b in kids[i + 1 :]:
            if inc_a > 0 > inc_b or inc_b > 0 > inc_a:
                pa = -inc_b / (inc_a - inc_b)
                pb = inc_a / (inc_a - inc_b)
                if pa > 0 and pb > 0:
                    out.append(LocalVertex(((a, pa), (b, pb))))
    return out


def martingale_measures(
    tree: TrajectoryTree, max_measures: int = 512
) -> MeasureSet:
    """All extreme martingale measures (vertex description), exactly.

    A measure exists iff every reachable node supports a zero-mean one-step
    distribution on children that themselves admit continuations; nodes with
    one-sided moves (arbitrage nodes with no zero increment) are infeasible.
    """
    _require_explicit(tree)
    feasible: set[str] = set()
    for nd in sorted(tree.nodes.values(), key=lambda n: -n.time):
        if nd.is_leaf:
            feasible.add(nd.nid)
            continue
        kids = [(inc, c) for inc, c in nd.children if c in feasible]
        has_zero = any(inc == 0 for inc, _ in kids)
        has_pos = any(inc > 0 for inc, _ in kids)
        has_neg = any(inc < 0 for inc, _ in kids)
        if has_zero or (has_pos and has_neg):
            feasible.add(nd.nid)

    if tree.root not in feasible:
        return MeasureSet(False, {}, [])

    local = {
        nd.nid: _local_vertices(tree, nd.nid, feasible)
        for nd in tree.internal_nodes()
        if nd.nid in feasible
    }

    measures: list[dict[str, Fraction]] = []
    truncated = False

    def expand(frontier: dict[str, Fraction]) -> list[dict[str, Fraction]]:
        # frontier: node -> prob mass sitting at that (non-leaf) node
        outs = [dict()]  # partial leaf measures
        for nid2, mass in sorted(frontier.items()):
            node = tree.node(nid2)
            if node.is_leaf:
                for o in outs:
                    o[nid2] = o.get(nid2, Fraction(0)) + mass
                continue
            branched = []
            for o in outs:
                for vert in local[nid2]:
                    sub = {c: mass * p for c, p in vert.items()}
                    child_leaves = expand(sub)
                    for extra in child_leaves:
                        merged = dict(o)
                        for leaf, p in extra.items():
                            merged[leaf] = merged.get(leaf, Fraction(0)) + p
                        branched.append(merged)
            outs = branched
            if len(outs) > max_measures:
                return outs[:max_measures]
        return outs

    measures = expand({tree.root: Fraction(1)})
    uniq: list[dict[str, Fraction]] = []
    seen = set()
    for m in measures:
        key = tuple(sorted((k, v) for k, v in m.items()))
        if key not in seen:
            seen.add(key)
            uniq.append(m)
    if len(uniq) > max_measures:
        uniq, truncated = uniq[:max_measures], True
    return MeasureSet(True, local, uniq, truncated)


def dual_price(
    tree: TrajectoryTree, f: PayoffSpec, nid: Optional[str] = None
) -> Fraction:
    """Best expected payoff over one-step measure vertices, by backward max.

    The maximum over all martingale measures of the expectation decomposes
    node by node, so no global enumeration is needed.
    """
    _require_explicit(tree)
    nid = nid if nid is not None else tree.root
    analysis = analyze(tree)
    f.validate(tree)
    for cls in analysis.node_class.values():
        if cls is NodeClass.ARBITRAGE_II:
            raise OracleError("no martingale measure: sure-win node present")
    if not all(analysis.l_holds.values()):
        raise OracleError("dual pricing requires continuity at every node")

    def ev(cur: str) -> Fraction:
        node = tree.node(cur)
        if node.time >= f.maturity:
            return f.node_values[tree.ancestor_at(cur, f.maturity)]
        verts = _local_vertices(tree, cur, {c for _, c in node.children})
        if not verts:
            raise OracleError(f"no one-step measure at {cur!r}")
        return max(
            sum(p * ev(child) for child, p in vert.items()) for vert in verts
        )

    return ev(nid)


def expectation(
    tree: TrajectoryTree, measure: dict[str, Fraction], f: PayoffSpec
) -> Fraction:
    """Expected payoff of a leaf measure (exact)."""
    total = Fraction(0)
    for leaf, p in measure.items():
        total += p * f.node_values[tree.ancestor_at(leaf, f.maturity)]
    return total


def explicit_reduction(tree: TrajectoryTree, members: int = 1) -> TrajectoryTree:
    """Replace each family by its first members as explicit branches."""
    out = TrajectoryTree(tree.root_value, tree.horizon, root_id=tree.root)

    def copy(nid: str) -> None:
        node = tree.node(nid)
        for inc, child in sorted(node.children, key=lambda c: c[1]):
            out.add_child(nid, inc, child)
            copy(child)
        for fid in sorted(node.families):
            fam = tree.family(fid)
            for n in range(fam.n0, fam.n0 + members):
                mid = f"{fid}.m{n}"
                out.add_child(nid, fam.increment(n), mid)
                cur = mid
                for t in range(tree.node(nid).time + 2, tree.horizon + 1):
                    nxt = f"{mid}.c{t}"
                    out.add_child(cur, 0, nxt)
                    cur = nxt

    copy(tree.root)
    out.validate()
    return out
