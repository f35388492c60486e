"""Constructive supermartingale decompositions and their verification.

A supermartingale splits, off an exception set contained in the null cover
and up to per-period slacks, into a buy-and-hold gains process minus a
nondecreasing compensator.  The hedge at each healthy up-down node is any
finite position whose one-step cost stays within the period's slack of the
running value; an unattained one-step infimum is repaired by exactly that
slack.  Positions vanish at non-up-down nodes and after the first exception.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .analysis import (
    Analysis,
    EventSet,
    FamilyAtom,
    NodeAtom,
    NodeClass,
    analyze,
)
from .model import (
    HedgeSequence,
    PayoffSpec,
    Piece,
    ProcessSequence,
    SimpleStrategy,
    TrajectoryTree,
    wealth,
    wealth_on_member,
)
from .poly import Poly, grid_member_above, grid_summary, rat, ranges_excluding
from .pricing import (
    MINUS_INF,
    PricingError,
    one_step_feasible_hedge,
    one_step_price_of_next,
    check_supermartingale,
    value_bounds,
)


class DecompositionError(ValueError):
    pass


class HypothesisError(DecompositionError):
    """A required hypothesis was not verified by the analysis layer."""


@dataclass
class Decomposition:
    """base + hedge gains - compensator + accumulated slacks, off exceptions."""

    base: Fraction
    hedge: HedgeSequence
    alphas: list[PayoffSpec]  # compensator increments; entry j has maturity j+1
    deltas: list[Fraction]
    exception_set: EventSet

    def compensator_at_node(self, tree: TrajectoryTree, nid: str) -> Fraction:
        """A_i at an explicit node (sum of increments along the path)."""
        node = tree.node(nid)
        path = tree.path_to(nid)
        total = Fraction(0)
        for j in range(node.time):
            total += self.alphas[j].node_values[path[j + 1]]
        return total


# ---------------------------------------------------------------------------
# construction


def _violation_nodes(tree: TrajectoryTree, f: ProcessSequence, analysis: Analysis):
    """Nodes where the one-step price strictly exceeds the running value."""
    out: set[str] = set()
    for j in range(tree.horizon):
        for nd in tree.nodes_at_time(j):
            if nd.is_leaf:
                continue
            step = one_step_price_of_next(tree, f, nd.nid, analysis)
            lo, hi = value_bounds(step.value)
            if hi == MINUS_INF:
                continue
            target = f[j].node_values[nd.nid]
            if lo > target:
                out.add(nd.nid)
            elif hi > target:
                raise PricingError("one-step price undecided against running value")
    return out


def _member_violation_ranges(tree, f, fid, j) -> list[tuple[int, Optional[int]]]:
    """Member windows where f_{j+1} > f_j strictly (flat continuations)."""
    from .pricing import _member_diff

    fam = tree.family(fid)
    diff = _member_diff(f, fid, j, fam.n0, None)
    if diff is None:
        return []
    windows: list[tuple[int, Optional[int]]] = []
    for lo, hi, poly in diff:
        if poly.is_zero():
            continue
        s = grid_summary(poly, lo, hi)
        if not s.has_pos:
            continue
        zeros = list(s.zeros)
        segs = _positive_segments(poly, lo, hi)
        windows.extend(segs)
    return windows


def _positive_segments(poly: Poly, lo: int, hi: Optional[int]):
    from .model import _sign_segments

    out = []
    for seg_lo, seg_hi, nonneg in _sign_segments(poly, lo, hi):
        if not nonneg:
            continue
        zeros = grid_summary(poly, seg_lo, seg_hi).zeros
        out.extend(ranges_excluding(seg_lo, seg_hi, list(zeros)))
    return out


def _exception_set(tree: TrajectoryTree, f: ProcessSequence, analysis: Analysis) -> EventSet:
    """Failure cylinders, one-step violations and arbitrage moves.

    Independent of the slack sequence by construction."""
    ev = EventSet()
    for nid, ok in analysis.l_holds.items():
        if not ok:
            ev.add(NodeAtom(nid))
    for nid in _violation_nodes(tree, f, analysis):
        ev.add(NodeAtom(nid))
    for nd in tree.nodes.values():
        if analysis.node_class.get(nd.nid) in (
            NodeClass.ARBITRAGE_I,
            NodeClass.ARBITRAGE_II,
        ):
            for inc, child in nd.children:
                if inc != 0:
                    ev.add(NodeAtom(child))
            for fid in nd.families:
                fam = tree.family(fid)
                zeros = grid_summary(fam.poly, fam.n0, None).zeros
                ranges = ranges_excluding(fam.n0, None, list(zeros))
                if ranges:
                    ev.add(FamilyAtom(fid, tuple(ranges)))
    for j in range(tree.horizon):
        for fam in tree.families_born_by(j):
            wins = _member_violation_ranges(tree, f, fam.fid, j)
            if wins:
                ev.add(FamilyAtom(fam.fid, tuple(wins)))
    return ev


def _first_exception_time(tree, ev: EventSet, nid: str) -> Optional[int]:
    for t, anc in enumerate(tree.path_to(nid)):
        if anc in ev.node_atoms:
            return t
    return None


def doob_decompose(
    tree: TrajectoryTree, f: ProcessSequence, deltas: Sequence
) -> Decomposition:
    """Hedge + compensator split of a supermartingale for the given slacks."""
    analysis = analyze(tree)
    deltas = [rat(d) for d in deltas]
    if len(deltas) != tree.horizon:
        raise DecompositionError("need one positive slack per period")
    if any(d <= 0 for d in deltas):
        raise DecompositionError("slacks must be strictly positive")
    if not analysis.l_ae.holds:
        raise HypothesisError(
            "decomposition requires the a.e. continuity assumption: "
            + "; ".join(analysis.l_ae.witnesses)
        )
    ok, witness = check_supermartingale(tree, f)
    if not ok:
        raise DecompositionError(f"not a supermartingale: violation at {witness}")

    exceptions = _exception_set(tree, f, analysis)
    hedge = HedgeSequence()
    for j in range(tree.horizon):
        for nd in tree.nodes_at_time(j):
            if nd.is_leaf:
                continue
            h = Fraction(0)
            triggered = _first_exception_time(tree, exceptions, nd.nid) is not None
            if not triggered and analysis.node_class[nd.nid] is NodeClass.UP_DOWN:
                target = f[j].node_values[nd.nid] + deltas[j]
                child_values = {}
                for _, child in nd.children:
                    if analysis.l_fails(child):
                        child_values[child] = MINUS_INF
                    else:
                        child_values[child] = f[j + 1].node_values[child]
                pieces = {fid: f[j + 1].family_values[fid] for fid in nd.families}
                found = one_step_feasible_hedge(
                    tree, nd.nid, child_values, pieces, target, analysis
                )
                if found is None:
                    raise DecompositionError(
                        f"no finite hedge within the slack at node {nd.nid!r}"
                    )
                h = found
            hedge.set(j, nd.nid, h)

    d = decomposition_from_hedge(tree, f, deltas, hedge)
    ok, why = verify_decomposition(tree, f, d)
    if not ok:  # pragma: no cover - construction is verified on the way out
        raise DecompositionError(f"internal verification failed: {why}")
    return d


def _mask_exceptions(tree, exceptions, fid, lo, hi, poly) -> list[Piece]:
    """Zero the increment polynomial on excepted member windows."""
    fam = tree.family(fid)
    if exceptions.covers_path(tree, fam.parent):
        return [(lo, hi, Poly.constant(0))]
    covered = exceptions.member_ranges(fid)
    pieces: list[Piece] = []
    alive = [(lo, hi)]
    for c_lo, c_hi in covered:
        nxt = []
        for a_lo, a_hi in alive:
            i_lo = max(a_lo, c_lo)
            i_hi = a_hi if c_hi is None else (c_hi if a_hi is None else min(a_hi, c_hi))
            if i_hi is not None and i_lo > i_hi:
                nxt.append((a_lo, a_hi))
                continue
            if a_lo < i_lo:
                nxt.append((a_lo, i_lo - 1))
            pieces.append((i_lo, i_hi, Poly.constant(0)))
            if i_hi is not None and (a_hi is None or i_hi < a_hi):
                nxt.append((i_hi + 1, a_hi))
        alive = nxt
    pieces.extend((a_lo, a_hi, poly) for a_lo, a_hi in alive)
    return pieces


def _common_refinement(f: ProcessSequence, fid: str, j: int):
    from .model import _piece_grid

    birth = f.tree.family_birth(fid)
    return _piece_grid(f, fid, j + 1, birth)


def _restrict(pieces: tuple[Piece, ...], lo: int, hi: Optional[int]) -> Poly:
    from .model import _restrict_piece

    return _restrict_piece(pieces, lo, hi)


def decomposition_from_hedge(
    tree: TrajectoryTree,
    f: ProcessSequence,
    deltas: Sequence,
    hedge: HedgeSequence,
) -> Decomposition:
    """Fill in compensator increments for a given hedge (not verified here)."""
    analysis = analyze(tree)
    deltas = [rat(d) for d in deltas]
    exceptions = _exception_set(tree, f, analysis)
    base = f[0].node_values[tree.root]
    alphas: list[PayoffSpec] = []
    for j in range(tree.horizon):
        alpha_nodes: dict[str, Fraction] = {}
        alpha_fams: dict[str, tuple[Piece, ...]] = {}
        for nd in tree.nodes_at_time(j):
            if nd.is_leaf:
                continue
            h = hedge.at(j, nd.nid)
            fj = f[j].node_values[nd.nid]
            for inc, child in nd.children:
                if exceptions.covers_path(tree, child):
                    alpha_nodes[child] = Fraction(0)
                else:
                    alpha_nodes[child] = (
                        deltas[j] + h * inc - (f[j + 1].node_values[child] - fj)
                    )
            for fid in nd.families:
                fam = tree.family(fid)
                pieces: list[Piece] = []
                for lo, hi, vpoly in f[j + 1].family_values[fid]:
                    alpha_poly = fam.poly.scale(h).shift(deltas[j] + fj) - vpoly
                    pieces.extend(
                        _mask_exceptions(tree, exceptions, fid, lo, hi, alpha_poly)
                    )
                alpha_fams[fid] = tuple(sorted(pieces))
        for fam in tree.families_born_by(j):
            if fam.fid in alpha_fams:
                continue
            pieces = []
            for lo, hi in _common_refinement(f, fam.fid, j):
                nxt = _restrict(f[j + 1].family_values[fam.fid], lo, hi)
                prv = _restrict(f[j].family_values[fam.fid], lo, hi)
                alpha_poly = Poly.constant(deltas[j]) - (nxt - prv)
                pieces.extend(
                    _mask_exceptions(tree, exceptions, fam.fid, lo, hi, alpha_poly)
                )
            alpha_fams[fam.fid] = tuple(sorted(pieces))
        spec = PayoffSpec(j + 1, alpha_nodes, alpha_fams)
        spec.validate(tree)
        alphas.append(spec)
    return Decomposition(base, hedge, alphas, deltas, exceptions)


# ---------------------------------------------------------------------------
# verification


def verify_decomposition(
    tree: TrajectoryTree, f: ProcessSequence, d: Decomposition
) -> tuple[bool, str]:
    """Exact check of nonnegativity, reconstruction and exception containment."""
    analysis = analyze(tree)
    ok, why = d.exception_set.subset_of(tree, analysis.null_cover)
    if not ok:
        return False, f"exception set not null: {why}"
    if len(d.deltas) != tree.horizon or any(x <= 0 for x in d.deltas):
        return False, "slack sequence invalid"
    if d.base != f[0].node_values[tree.root]:
        return False, "base differs from the initial value"

    # compensator increments nonnegative off exceptions
    for j in range(tree.horizon):
        alpha = d.alphas[j]
        for nd in tree.nodes_at_time(j + 1):
            if d.exception_set.covers_path(tree, nd.nid):
                continue
            if nd.nid not in alpha.node_values:
                return False, f"missing compensator increment at {nd.nid!r}"
            if alpha.node_values[nd.nid] < 0:
                return False, f"negative compensator increment at {nd.nid!r}"
        for fam in tree.families_born_by(j + 1):
            if fam.fid not in alpha.family_values:
                return False, f"missing compensator increments on {fam.fid!r}"
            for lo, hi, poly in alpha.family_values[fam.fid]:
                for w_lo, w_hi in _alive_windows(tree, d.exception_set, fam.fid, lo, hi):
                    s = grid_summary(poly, w_lo, w_hi)
                    if s.has_neg:
                        n = grid_member_above(-poly, Fraction(0), w_lo, w_hi)
                        return (
                            False,
                            f"negative compensator increment on {fam.fid!r} n={n}",
                        )

    # reconstruction identity, path by path
    for i in range(tree.horizon + 1):
        cum_delta = sum(d.deltas[:i], Fraction(0))
        strat = SimpleStrategy(d.base + cum_delta, d.hedge)
        for nd in tree.nodes_at_time(i):
            if d.exception_set.covers_path(tree, nd.nid):
                continue
            gains = wealth(tree, strat, nd.nid)
            a_i = d.compensator_at_node(tree, nd.nid)
            if f[i].node_values[nd.nid] != gains - a_i:
                return False, f"reconstruction fails at {nd.nid!r} time {i}"
        for fam in tree.families_born_by(i):
            base_gain = wealth_on_member(tree, strat, fam.fid)
            a_path = _member_compensator(tree, d, fam.fid, i)
            for lo, hi, a_poly in a_path:
                for w_lo, w_hi in _alive_windows(tree, d.exception_set, fam.fid, lo, hi):
                    target = _piece_value(f[i].family_values[fam.fid], w_lo, w_hi)
                    diff = (base_gain - a_poly) - target
                    if diff.is_zero():
                        continue
                    s = grid_summary(diff, w_lo, w_hi)
                    if s.has_pos or s.has_neg:
                        return (
                            False,
                            f"reconstruction fails on {fam.fid!r} "
                            f"members {w_lo}..{w_hi} time {i}",
                        )
    # spot re-derivation of one-step domination off exceptions
    for j in range(tree.horizon):
        for nd in tree.nodes_at_time(j):
            if nd.is_leaf or d.exception_set.covers_path(tree, nd.nid):
                continue
            h = d.hedge.at(j, nd.nid)
            fj = f[j].node_values[nd.nid]
            for inc, child in nd.children:
                if d.exception_set.covers_path(tree, child):
                    continue
                if f[j + 1].node_values[child] > fj + d.deltas[j] + h * inc:
                    return False, f"one-step domination fails into {child!r}"
    return True, ""


def _alive_windows(tree, exceptions: EventSet, fid: str, lo: int, hi: Optional[int]):
    fam = tree.family(fid)
    if exceptions.covers_path(tree, fam.parent):
        return []
    alive = [(lo, hi)]
    from .analysis import _subtract_many

    return _subtract_many(alive, exceptions.member_ranges(fid))


def _member_compensator(tree, d: Decomposition, fid: str, i: int):
    """Compensator A_i on members of fid as pieces (exact polynomials)."""
    fam = tree.family(fid)
    birth = tree.family_birth(fid)
    parent_path = tree.path_to(fam.parent)
    const = Fraction(0)
    for j in range(min(birth - 1, i)):
        const += d.alphas[j].node_values[parent_path[j + 1]]
    pieces: list[tuple[int, Optional[int], Poly]] = [(fam.n0, None, Poly.constant(const))]
    for j in range(birth - 1, i):
        refined: list[tuple[int, Optional[int], Poly]] = []
        for lo, hi, acc in pieces:
            for p_lo, p_hi, inc_poly in d.alphas[j].family_values[fid]:
                s_lo = max(lo, p_lo)
                s_hi = p_hi if hi is None else (hi if p_hi is None else min(hi, p_hi))
                if s_hi is not None and s_lo > s_hi:
                    continue
                if s_hi is None or s_lo <= s_hi:
                    refined.append((s_lo, s_hi, acc + inc_poly))
        pieces = sorted(refined)
    return pieces


def _piece_value(pieces: tuple[Piece, ...], lo: int, hi: Optional[int]) -> Poly:
    for p_lo, p_hi, poly in pieces:
        if p_lo <= lo and (p_hi is None or (hi is not None and hi <= p_hi)):
            return poly
    raise DecompositionError("piece grids do not align")


# ---------------------------------------------------------------------------
# feasibility of the linear system (used for impossibility certificates)


def decomposition_feasible(
    tree: TrajectoryTree, f: ProcessSequence, deltas: Sequence
) -> tuple[bool, Optional[str]]:
    """Does any hedge satisfy the per-period inequalities off the null cover?

    The reconstruction with nonnegative compensator increments demands
    f_{j+1} - f_j <= delta_j + h * increment on all non-null children; this
    solves the resulting one-position system node by node, exactly.  Unlike
    the pricing kernel, only null-cover cylinders are waived: failure of
    continuity from below at a non-null node does not excuse that node.
    """
    from .pricing import ScanGroup, StepProblem, _step_feasible, solve_step, _member_diff
    from .lp import AffinePiece

    analysis = analyze(tree)
    deltas = [rat(x) for x in deltas]
    cover = analysis.null_cover
    for j in range(tree.horizon):
        for nd in tree.nodes_at_time(j):
            if nd.is_leaf or analysis.fully_covered(nd.nid):
                continue
            target = f[j].node_values[nd.nid] + deltas[j]
            fixed: list[AffinePiece] = []
            groups: list[ScanGroup] = []
            for inc, child in sorted(nd.children, key=lambda c: c[1]):
                if analysis.fully_covered(child):
                    continue
                fixed.append(
                    AffinePiece(inc, f[j + 1].node_values[child], f"node:{child}")
                )
            for fid in sorted(nd.families):
                fam = tree.family(fid)
                for w_lo, w_hi in analysis.alive_member_ranges(fid):
                    for p_lo, p_hi, vpoly in f[j + 1].family_values[fid]:
                        s_lo = max(w_lo, p_lo)
                        s_hi = (
                            p_hi
                            if w_hi is None
                            else (w_hi if p_hi is None else min(w_hi, p_hi))
                        )
                        if s_hi is not None and s_lo > s_hi:
                            continue
                        groups.append(ScanGroup(fid, fam.poly, vpoly, s_lo, s_hi))
            problem = StepProblem(fixed, groups)
            if not fixed and not groups:
                continue
            if not _hedge_exists(problem, target):
                return False, nd.nid
        for fam in tree.families_born_by(j):
            for w_lo, w_hi in analysis.alive_member_ranges(fam.fid):
                for lo, hi, poly in _member_diff(f, fam.fid, j, w_lo, w_hi) or []:
                    shifted = poly.shift(-deltas[j])
                    s = grid_summary(shifted, lo, hi)
                    if s.has_pos or (s.limit is not None and s.limit > 0):
                        return False, f"family:{fam.fid}"
    return True, None


def _hedge_exists(problem, target: Fraction) -> bool:
    from .pricing import _asymptotic_value, _step_feasible, solve_step, value_bounds

    step = solve_step(problem)
    lo, hi = value_bounds(step.value)
    if hi == MINUS_INF:
        return True
    if hi > target:
        if lo == hi:
            return False
        raise PricingError("feasibility undecided: interval-valued one-step price")
    if step.attained:
        return True
    if lo == target:
        return False
    for direction in (-1, 1):
        a = _asymptotic_value(problem, direction)
        if a is None or (a != MINUS_INF and a >= target):
            continue
        h = Fraction(direction)
        for _ in range(200):
            if _step_feasible(problem, target, h):
                return True
            h *= 2
    return False


# ---------------------------------------------------------------------------
# martingale-part floor and convergence


def martingale_floor_check(
    tree: TrajectoryTree, f: ProcessSequence, d: Decomposition
) -> tuple[bool, Optional[str]]:
    """base + all slacks + hedge gains stays nonnegative on every trajectory."""
    analysis = analyze(tree)
    if not analysis.h1.holds:
        raise HypothesisError(
            "floor lemma needs the healthy-straddle hypothesis: "
            + "; ".join(analysis.h1.witnesses)
        )
    for spec in f.specs:
        if not spec.is_nonnegative(tree):
            raise DecompositionError("floor lemma applies to nonnegative processes")
    v0 = d.base + sum(d.deltas, Fraction(0))
    strat = SimpleStrategy(v0, d.hedge)
    for nd in sorted(tree.nodes.values(), key=lambda n: (n.time, n.nid)):
        if wealth(tree, strat, nd.nid) < 0:
            return False, nd.nid
    for fid in sorted(tree.families):
        poly = wealth_on_member(tree, strat, fid)
        fam = tree.family(fid)
        s = grid_summary(poly, fam.n0, None)
        if s.has_neg:
            n = grid_member_above(-poly, Fraction(0), fam.n0, None)
            return False, f"family:{fid}:n={n}"
    return True, None


@dataclass
class ConvergenceReport:
    limits_exist_off: str
    divergence_cover: list[str]
    l_ae_holds: bool
    h1_holds: bool
    warnings: list[str] = field(default_factory=list)

    def render(self) -> str:
        lines = [
            f"limits: {self.limits_exist_off}",
            "divergence cover:" if self.divergence_cover else "divergence cover: (empty)",
        ]
        lines.extend(f"  {a}" for a in self.divergence_cover)
        for w in self.warnings:
            lines.append(f"warning: {w}")
        return "\n".join(lines) + "\n"


def convergence_report(tree: TrajectoryTree, f: ProcessSequence) -> ConvergenceReport:
    """Pointwise limits of a nonnegative supermartingale on this model class.

    Every trajectory is constant from the horizon on, so limits exist
    everywhere; the report certifies that plus the hypothesis verdicts, and
    records the null cover as the divergence cover.
    """
    analysis = analyze(tree)
    if not analysis.l_ae.holds:
        raise HypothesisError(
            "convergence requires the a.e. continuity assumption: "
            + "; ".join(analysis.l_ae.witnesses)
        )
    ok, witness = check_supermartingale(tree, f)
    if not ok:
        raise DecompositionError(f"not a supermartingale: violation at {witness}")
    for spec in f.specs:
        if not spec.is_nonnegative(tree):
            raise DecompositionError("convergence applies to nonnegative processes")
    warnings = []
    if not analysis.h1.holds:
        warnings.append(
            "healthy-straddle hypothesis fails: the floor bound on the hedge "
            "gains is not guaranteed (limits below certified by eventual "
            "constancy instead)"
        )
    return ConvergenceReport(
        limits_exist_off="every trajectory (constant from the horizon on)",
        divergence_cover=analysis.null_cover.atoms_sorted(),
        l_ae_holds=analysis.l_ae.holds,
        h1_holds=analysis.h1.holds,
        warnings=warnings,
    )
