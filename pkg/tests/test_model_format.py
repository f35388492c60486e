from fractions import Fraction as Q

import pytest

from trajhedge.fileformat import (
    ParseError,
    parse_payoff,
    parse_process,
    parse_tree,
    render_payoff,
    render_process,
    render_tree,
)
from trajhedge.model import (
    HedgeSequence,
    ModelError,
    PayoffSpec,
    SimpleStrategy,
    StoppingTime,
    TrajectoryTree,
    abs_payoff,
    first_time_value_geq,
    stopped_process,
    stopping_indicator,
    supermartingale_transform,
    uniform_positions,
    wealth,
    wealth_on_member,
)
from trajhedge.poly import Poly

from conftest import corpus_text


def test_parse_example_6_2(tree_6_2):
    t = tree_6_2
    assert t.root_value == 1 and t.horizon == 2
    assert t.node("u").value == 2
    assert set(t.families) == {"down", "uptail"}
    assert t.family("down").increment(2) == Q(-1, 4)
    assert t.member_value("down", 2) == Q(3, 4)
    assert t.family_birth("down") == 1 and t.family_birth("uptail") == 2


def test_tree_round_trip(tree_lfail):
    again = parse_tree(render_tree(tree_lfail))
    assert render_tree(again) == render_tree(tree_lfail)


def test_parse_single_constant_trajectory():
    t = parse_tree("tree s0=5 horizon=0\nnode only t=0\n")
    assert t.horizon == 0 and t.node("only").value == 5
    assert t.node("only").is_leaf


def test_duplicate_increment_rejected():
    doc = (
        "tree s0=0 horizon=1\nnode r t=0\nnode a t=1\nnode b t=1\n"
        "child r inc=1 -> a\nchild r inc=1 -> b\n"
    )
    with pytest.raises(ParseError, match="duplicate increment"):
        parse_tree(doc)


def test_explicit_family_collision_rejected():
    doc = (
        "tree s0=0 horizon=1\nnode r t=0\nnode a t=1\n"
        "child r inc=1/4 -> a\nfamily r poly=0,0,1 n0=1\n"  # 1/n^2 hits 1/4 at n=2
    )
    with pytest.raises(ParseError, match="collides with member n=2"):
        parse_tree(doc)


def test_dangling_internal_node_rejected():
    doc = "tree s0=0 horizon=2\nnode r t=0\nnode a t=1\nchild r inc=1 -> a\n"
    with pytest.raises(ParseError, match="no children"):
        parse_tree(doc)


def test_constant_family_rejected():
    doc = "tree s0=0 horizon=1\nnode r t=0\nfamily r poly=2 n0=1\n"
    with pytest.raises(ParseError, match="constant increment polynomial"):
        parse_tree(doc)


def test_family_degree_cap():
    doc = "tree s0=0 horizon=1\nnode r t=0\nfamily r poly=0,1,0,0,0,1 n0=1\n"
    with pytest.raises(ParseError, match="degree"):
        parse_tree(doc)


def test_payoff_round_trip(tree_6_2, payoff_6_2_f):
    again = parse_payoff(render_payoff(payoff_6_2_f), tree_6_2)
    assert render_payoff(again) == render_payoff(payoff_6_2_f)
    assert payoff_6_2_f.value_at_member("down", 3) == Q(1, 3)
    assert payoff_6_2_f.value_at_node("u") == 0


def test_payoff_coverage_checked(tree_6_2):
    with pytest.raises(ParseError, match="misses"):
        parse_payoff("payoff maturity=1\nat u = 0\n", tree_6_2)
    with pytest.raises(ModelError, match="gap"):
        spec = PayoffSpec(1, {"u": Q(0)}, {"down": ((3, None, Poly.parse("0,1")),)})
        spec.validate(tree_6_2)


def test_tail_indicator_pieces(tree_6_2):
    doc = (
        "payoff maturity=1\nat u = 0\n"
        "at-family down poly=0 from=1 to=4\nat-family down poly=1 from=5\n"
    )
    spec = parse_payoff(doc, tree_6_2)
    assert spec.value_at_member("down", 4) == 0
    assert spec.value_at_member("down", 5) == 1


# ---------------------------------------------------------------------------
# wealth


def test_wealth_direct_sum():
    t = TrajectoryTree(1, 2)
    a = t.add_child(t.root, 1, "a")
    b = t.add_child("a", -2, "b")
    h = HedgeSequence()
    h.set(0, t.root, 1)
    h.set(1, "a", 1)
    strat = SimpleStrategy(Q(1), h)
    assert wealth(t, strat, "b") == 0
    zero = SimpleStrategy(Q(0), HedgeSequence())
    for nid in t.nodes:
        assert wealth(t, zero, nid) == 0


def test_wealth_on_member_polynomial(tree_6_2):
    h = HedgeSequence()
    h.set(0, "r", Q(-1, 2))
    strat = SimpleStrategy(Q(1, 2), h)
    poly = wealth_on_member(tree_6_2, strat, "down")
    assert poly == Poly.parse("1/2,0,1/2")  # 1/2 + t^2/2
    assert wealth(tree_6_2, strat, "u") == 0


def test_wealth_before_start_rejected(tree_6_2):
    strat = SimpleStrategy(Q(0), HedgeSequence(), start_time=1, start_node="u")
    with pytest.raises(ModelError, match="precedes"):
        wealth(tree_6_2, strat, "r")


# ---------------------------------------------------------------------------
# stopping and transforms


def test_stopped_process_trivial_rules(process_6_2_b, tree_6_2):
    f = process_6_2_b
    now = StoppingTime(frozenset({"r"}))  # tau == 0
    g = stopped_process(f, now)
    for j in range(3):
        for nd in tree_6_2.nodes_at_time(j):
            assert g[j].node_values[nd.nid] == f[0].node_values["r"]
    never = StoppingTime()
    h = stopped_process(f, never)
    for j in range(3):
        assert h[j].node_values == f[j].node_values
        assert h[j].family_values == f[j].family_values


def test_stopped_freezes_up_branch(tree_6_2):
    # coordinate process, stopped at first time the price reaches 2
    coords = []
    from trajhedge.model import ProcessSequence

    for j in range(3):
        nodes = {nd.nid: nd.value for nd in tree_6_2.nodes_at_time(j)}
        fams = {}
        for fam in tree_6_2.families_born_by(j):
            parent_val = tree_6_2.node(fam.parent).value
            fams[fam.fid] = ((fam.n0, None, fam.poly.shift(parent_val)),)
        coords.append(PayoffSpec(j, nodes, fams))
    f = ProcessSequence(tree_6_2, coords)
    tau = first_time_value_geq(tree_6_2, 2)
    g = stopped_process(f, tau)
    # up members are frozen at the time-1 value 2 instead of 2 + 1/n
    assert g[2].family_values["uptail"] == ((1, None, Poly.constant(Q(2))),)
    # down members never stop
    assert g[2].family_values["down"] == f[2].family_values["down"]


def test_transform_identity_and_frozen(process_6_2_b, tree_6_2):
    f = process_6_2_b
    ones = uniform_positions(tree_6_2, 1)
    g = supermartingale_transform(f, ones)
    for j in range(3):
        assert g[j].node_values == f[j].node_values
        for fid in f[j].family_values:
            for lo, hi, poly in g[j].family_values[fid]:
                for n in (lo, lo + 1):
                    assert poly.at_index(n) == f[j].value_at_member(fid, n)
    zero = uniform_positions(tree_6_2, 0)
    z = supermartingale_transform(f, zero)
    base = f[0].node_values["r"]
    for j in range(3):
        assert all(v == base for v in z[j].node_values.values())


def test_transform_with_indicator_matches_stopped(process_6_2_b, tree_6_2):
    f = process_6_2_b
    tau = StoppingTime(frozenset({"u"}))
    d = stopping_indicator(tree_6_2, tau)
    lhs = supermartingale_transform(f, d)
    rhs = stopped_process(f, tau)
    for j in range(3):
        assert lhs[j].node_values == rhs[j].node_values
        for fid in rhs[j].family_values:
            for lo, hi, poly in rhs[j].family_values[fid]:
                for n in (lo, lo + 3):
                    assert poly.at_index(n) == lhs[j].value_at_member(fid, n)


def test_transform_rejects_negative_positions(process_6_2_b, tree_6_2):
    d = uniform_positions(tree_6_2, -1)
    with pytest.raises(ModelError, match="nonnegative"):
        supermartingale_transform(process_6_2_b, d)


def test_abs_payoff_splits_sign(tree_6_2):
    doc = "payoff maturity=1\nat u = -3\nat-family down poly=-1/7,2\n"
    spec = parse_payoff(doc, tree_6_2)
    a = abs_payoff(tree_6_2, spec)
    assert a.node_values["u"] == 3
    assert a.value_at_member("down", 1) == abs(Q(2) - Q(1, 7))
    assert a.value_at_member("down", 20) == abs(Q(2, 20) - Q(1, 7))
    for n in (1, 2, 13, 14, 15, 50):
        assert a.value_at_member("down", n) == abs(spec.value_at_member("down", n))


def test_process_parse_render(tree_lfail):
    proc = parse_process(corpus_text("process-l-failure.txt"), tree_lfail)
    again = parse_process(render_process(proc), tree_lfail)
    assert render_process(again) == render_process(proc)
