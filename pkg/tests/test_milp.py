from collections import Counter

import pytest

from flowwalks.errors import AntichainLargerThanK, ConflictingFix, EdgeNotInGraph, EmptySubset, InvalidBound, NegativeBound
from flowwalks.graph import build_graph, condense, reachability
from flowwalks.milp import (
    FixingPlan,
    add_subset_constraints,
    add_walk_block,
    apply_fixing,
    binary_expansion,
    linearize_product,
    plan_fixing,
)
from flowwalks.safety import edge_safe_sequences, longest_covering_sequence
from flowwalks.solver import Model, Status, enumerate_feasible, solve
from flowwalks.widths import max_weight_antichain

from oracles import cycle_graph, diamond, enumerate_walks, walk_edges


def feasible_counts(graph, B):
    m = Model()
    wk = add_walk_block(m, graph, 0, B)
    xs = [wk.x[e] for e in graph.edges]
    return {tuple(p[x.name] for x in xs) for p in enumerate_feasible(m, xs)}


def walk_counts(graph, B):
    out = set()
    for walk in enumerate_walks(graph, max_len=B * graph.m, bound=B):
        c = Counter(walk_edges(walk))
        out.add(tuple(c[e] for e in graph.edges))
    return out


def test_diamond_walk_block():
    g = diamond()
    assert feasible_counts(g, 1) == {(1, 1, 0, 0), (0, 0, 1, 1)}


@pytest.mark.parametrize("B", [1, 2, 3])
def test_cycle_walk_block(B):
    g = cycle_graph()
    assert feasible_counts(g, B) == walk_counts(g, B)


def test_cycle_witness_and_detached_cycle():
    g = cycle_graph()
    m = Model()
    wk = add_walk_block(m, g, 0, 1)
    for e in g.edges:
        m.add_constraint(wk.x[e], "==", 1)
    res = solve(m, backend="exhaustive")
    assert res.status == Status.OPTIMAL
    tree = {e for e in g.edges if res.value(wk.y[e])}
    assert tree == {("s", "a"), ("a", "b"), ("a", "t")}
    assert all(res.value(wk.d[v]) > res.value(wk.d[u]) for u, v in tree)
    m = Model()
    wk = add_walk_block(m, g, 0, 1)
    m.add_constraint(wk.x[("a", "b")], "==", 1)
    m.add_constraint(wk.x[("b", "a")], "==", 1)
    m.add_constraint(wk.x[("s", "a")], "==", 0)
    assert solve(m, backend="exhaustive").status == Status.INFEASIBLE


def test_self_loop_walk_block():
    g = build_graph([("s", "a", 1), ("a", "a", 1), ("a", "t", 1)], "s", "t")
    assert feasible_counts(g, 2) == walk_counts(g, 2)


def test_zero_bound_forbids_edge():
    g = diamond()
    bounds = {e: (0 if e == ("s", "a") else 1) for e in g.edges}
    assert feasible_counts(g, bounds) == {(0, 0, 1, 1)}
    with pytest.raises(InvalidBound):
        add_walk_block(Model(), g, 0, -1)
    with pytest.raises(InvalidBound):
        add_walk_block(Model(), g, 0, 1.5)


def test_binary_expansion_sizes():
    m = Model()
    x = m.add_var("x", 0, 5, "I")
    assert len(binary_expansion(m, x, 5, "x")) == 3
    b = m.add_var("b", vtype="B")
    assert binary_expansion(m, b, 1, "b") == [b]
    with pytest.raises(NegativeBound):
        binary_expansion(m, x, -1, "x")


@pytest.mark.parametrize("x_ub,y_lo,y_hi", [(5, 0, 8), (1, 0, 3), (8, 0, 8), (3, 1, 4)])
def test_linearization_exact(x_ub, y_lo, y_hi):
    m = Model()
    x = m.add_var("x", 0, x_ub, "B" if x_ub == 1 else "I")
    y = m.add_var("y", y_lo, y_hi, "I")
    expr = linearize_product(m, x, x_ub, y, y_lo, y_hi)
    seen = set()
    for p in enumerate_feasible(m):
        value = expr.const + sum(c * p[m.names[i]] for i, c in expr.terms.items())
        assert value == p["x"] * p["y"]
        seen.add((p["x"], p["y"]))
    assert seen == {(a, b) for a in range(x_ub + 1) for b in range(y_lo, y_hi + 1)}


def test_linearization_fixed_and_zero():
    m = Model()
    x = m.add_var("x", 0, 0, "I")
    y = m.add_var("y", 0, 4, "I")
    assert not linearize_product(m, x, 0, y, 0, 4).terms
    m2 = Model()
    x2 = m2.add_var("x", 3, 3, "I")
    y2 = m2.add_var("y", 0, 4, "I")
    assert linearize_product(m2, x2, 3, y2, 0, 4).terms == {y2.index: 3}
    with pytest.raises(NegativeBound):
        linearize_product(m2, x2, -1, y2, 0, 4)


def _subset_status(graph, k, subsets):
    m = Model()
    walks = [add_walk_block(m, graph, i, 1) for i in range(k)]
    add_subset_constraints(m, walks, subsets)
    return m, walks, solve(m, backend="exhaustive")


def test_subset_constraints():
    g = diamond()
    m, walks, res = _subset_status(g, 2, [[("s", "a"), ("a", "t")]])
    assert any(res.value(w.x[("s", "a")]) and res.value(w.x[("a", "t")]) for w in walks)
    _, _, res = _subset_status(g, 1, [[("s", "a")], [("s", "b")]])
    assert res.status == Status.INFEASIBLE
    _, walks, res = _subset_status(cycle_graph(), 1, [[("a", "b"), ("a", "t")]])
    assert res.status == Status.OPTIMAL and res.value(walks[0].x[("a", "b")]) == 1
    with pytest.raises(EmptySubset):
        _subset_status(g, 1, [[]])
    with pytest.raises(EdgeNotInGraph):
        _subset_status(g, 1, [[("a", "b")]])


def _plan(graph, k, C=None):
    C = list(graph.edges) if C is None else C
    seqs = edge_safe_sequences(graph, C)
    weight, witness = longest_covering_sequence(seqs, graph.edges)
    cond = condense(graph)
    reach = reachability(graph, cond)
    antichain = max_weight_antichain(graph, weight, reach)
    return plan_fixing(graph, cond, reach, antichain, witness, k), antichain


def test_plan_diamond():
    plan, antichain = _plan(diamond(), 2)
    assert len(antichain.edges) == 2 and antichain.total_weight == 4
    pinned = {i: {e for e, j, _, exact in plan.fix_one if j == i and exact} for i in (0, 1)}
    assert sorted(map(sorted, pinned.values())) == [[("a", "t"), ("s", "a")], [("b", "t"), ("s", "b")]]
    other = {0: pinned[1], 1: pinned[0]}
    assert set(plan.fix_zero) == {(e, i) for i in (0, 1) for e in other[i]}
    assert plan.size == (4, 4)
    with pytest.raises(AntichainLargerThanK):
        _plan(diamond(), 1)


def test_plan_cycle():
    plan, _ = _plan(cycle_graph(), 1)
    assert set(plan.fix_one) == {
        (("s", "a"), 0, 1, True), (("a", "t"), 0, 1, True),
        (("a", "b"), 0, 1, False), (("b", "a"), 0, 1, False)}
    assert plan.fix_zero == ()


def test_plan_unrelated_branch_fixed_to_zero():
    g = build_graph([("s", "a", 3), ("a", "b", 3), ("b", "t", 3), ("s", "j", 1), ("j", "h", 1),
                     ("h", "t", 1)], "s", "t")
    plan, antichain = _plan(g, 2)
    walk = [i for e, i, _, _ in plan.fix_one if e == ("a", "b")][0]
    assert (("j", "h"), walk) in plan.fix_zero


def test_apply_fixing_conflicts():
    g = diamond()
    m = Model()
    walks = [add_walk_block(m, g, 0, 1)]
    bad = FixingPlan(((("s", "a"), 0, 1, True),), ((("s", "a"), 0),), frozenset())
    with pytest.raises(ConflictingFix):
        apply_fixing(m, walks, bad)
    with pytest.raises(ConflictingFix):
        apply_fixing(m, walks, FixingPlan(((("s", "a"), 3, 1, True),), (), frozenset()))
    m = Model()
    walks = [add_walk_block(m, g, 0, 1)]
    apply_fixing(m, walks, FixingPlan(((("s", "a"), 0, 1, True),), (), frozenset()))
    with pytest.raises(ConflictingFix):
        apply_fixing(m, walks, FixingPlan((), ((("s", "a"), 0),), frozenset()))


def test_requirement_above_bound_is_infeasible():
    g = cycle_graph()
    m = Model()
    walks = [add_walk_block(m, g, 0, 1)]
    apply_fixing(m, walks, FixingPlan(((("a", "b"), 0, 2, False),), (), frozenset()))
    assert solve(m).status == Status.INFEASIBLE


def test_fixing_keeps_two_loops_feasible():
    from oracles import two_loops
    g = two_loops()
    plan, antichain = _plan(g, 2)
    m = Model()
    walks = [add_walk_block(m, g, i, 2) for i in range(2)]
    apply_fixing(m, walks, plan)
    for e in g.edges:
        m.add_constraint(walks[0].x[e] + walks[1].x[e], ">=", 1)
    assert solve(m).status == Status.OPTIMAL
