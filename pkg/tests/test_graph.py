import random

import pytest

from flowwalks.errors import (
    DuplicateEdge,
    EdgeNotInGraph,
    EmptyEndSet,
    EmptyStartSet,
    GraphFormatError,
    NegativeWeight,
    SinkHasOutEdge,
    SourceHasInEdge,
)
from flowwalks.graph import (
    build_graph,
    compact_unitigs,
    condense,
    expand_walk,
    format_graph,
    graph_stats,
    is_acyclic,
    midpoint_transform,
    normalize_sources_sinks,
    parse_edge_token,
    parse_graph,
    read_edge_list,
    read_subsets,
    reachability,
    useful_vertices,
)

from oracles import TWO_LOOPS, adjacency, two_loops, bfs, cycle_graph, diamond, random_st_graph


def test_build_keeps_input_order():
    g = diamond((2, 2, 3, 3))
    assert g.edges == (("s", "a"), ("a", "t"), ("s", "b"), ("b", "t"))
    assert g.vertices == ("s", "a", "t", "b")
    assert g.weight[("s", "b")] == 3
    assert g.successors("s") == ["a", "b"]
    assert g.in_degree("t") == 2


@pytest.mark.parametrize("edges,err", [
    ([("s", "a", 1), ("s", "a", 2)], DuplicateEdge),
    ([("a", "s", 1)], SourceHasInEdge),
    ([("t", "a", 1)], SinkHasOutEdge),
    ([("s", "t", -1)], NegativeWeight),
])
def test_build_rejects(edges, err):
    with pytest.raises(err):
        build_graph(edges, "s", "t")


def test_self_loop_allowed_inside():
    g = build_graph([("s", "a", 1), ("a", "a", 2), ("a", "t", 1)], "s", "t")
    assert g.has_edge("a", "a")
    with pytest.raises(SourceHasInEdge):
        build_graph([("s", "s", 1), ("s", "t", 1)], "s", "t")


def test_normalize_sources_sinks():
    g, aux = normalize_sources_sinks({("a", "b"): 3, ("c", "b"): 2, ("b", "d"): 5}, ["a", "c"], ["d"])
    assert aux == {("s", "a"), ("s", "c"), ("d", "t")}
    assert all(g.weight[e] == 0 for e in aux)
    assert g.source == "s" and g.sink == "t"
    with pytest.raises(EmptyStartSet):
        normalize_sources_sinks({("a", "b"): 1}, [], ["b"])
    with pytest.raises(EmptyEndSet):
        normalize_sources_sinks({("a", "b"): 1}, ["a"], [])


def test_condensation_topological():
    g = two_loops()
    cond = condense(g)
    comps = cond.components()
    assert {"b", "c", "d", "e", "f"} in comps
    assert {"a"} in comps
    a = cond.scc_id("a")
    assert cond.nontrivial[a]  # self-loop
    for c, succ in enumerate(cond.dag_succ):
        assert all(d > c for d in succ)
    assert cond.is_inter_scc(("s", "a")) and not cond.is_inter_scc(("c", "d"))


def test_is_acyclic():
    assert is_acyclic(3, [(0, 1), (1, 2)])
    assert not is_acyclic(2, [(0, 1), (1, 0)])
    assert not is_acyclic(1, [(0, 0)])


def test_reachability_matches_bfs():
    rng = random.Random(3)
    for _ in range(30):
        g = random_st_graph(rng, rng.randint(3, 12), 2.0)
        reach = reachability(g)
        adj = adjacency(g)
        for u in g.vertices:
            got = bfs(adj, u)
            for v in g.vertices:
                assert reach.reaches(u, v) == (v in got)


def test_edge_reaches_on_cycle():
    g = cycle_graph()
    reach = reachability(g)
    assert reach.edge_reaches(("a", "b"), ("b", "a"))
    assert reach.edge_reaches(("b", "a"), ("a", "b"))
    assert not reach.edge_reaches(("a", "t"), ("s", "a"))


def test_useful_vertices():
    g = build_graph([("s", "a", 1), ("a", "t", 1), ("s", "x", 1), ("y", "t", 1)], "s", "t")
    useful = useful_vertices(g)
    assert [g.vertices[i] for i, ok in enumerate(useful) if not ok] == ["x", "y"]


def test_midpoint_transform():
    g = cycle_graph((1, 2, 3, 4))
    mg, mids = midpoint_transform(g, [("a", "b")])
    (mid,) = mids
    assert mids[mid] == ("a", "b")
    assert mg.weight[("a", mid)] == 2 and mg.weight[(mid, "b")] == 0
    assert mg.m == g.m + 1
    with pytest.raises(EdgeNotInGraph):
        midpoint_transform(g, [("s", "t")])


def test_compact_unitigs():
    g = build_graph([("s", "a", 2), ("a", "b", 2), ("b", "c", 2), ("c", "t", 2)], "s", "t")
    cg, exp = compact_unitigs(g)
    assert cg.edges == (("s", "t"),)
    assert exp[("s", "t")] == ("s", "a", "b", "c", "t")
    assert expand_walk(["s", "t"], exp) == ["s", "a", "b", "c", "t"]
    cg, exp = compact_unitigs(g, protected={"b"})
    assert set(cg.edges) == {("s", "b"), ("b", "t")}


def test_compact_unitigs_no_parallel_edges():
    g = build_graph([("s", "a", 1), ("a", "t", 1), ("s", "t", 1)], "s", "t")
    cg, _ = compact_unitigs(g)
    assert cg.m == 3


def test_parse_round_trip():
    g = two_loops()
    again = parse_graph(format_graph(g))
    assert again == g
    assert graph_stats(g).self_loops == 1


@pytest.mark.parametrize("text,line", [
    ("#source s\n#sink t\ns\ta\t1\na\tt\n", 4),
    ("#source s\n#sink t\ns\ta\tx\n", 3),
    ("#source s\n#sink t\ns\ta\t1\ns\ta\t2\n", 4),
    ("#source s\n#sink t\ns\ta\t-2\n", 3),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(GraphFormatError) as info:
        parse_graph(text, path="g.txt")
    assert info.value.lineno == line
    assert f"g.txt:{line}:" in str(info.value)


def test_parse_missing_header():
    with pytest.raises(GraphFormatError):
        parse_graph("s\tt\t1\n")


def test_edge_files(tmp_path):
    p = tmp_path / "sub.txt"
    p.write_text("s>a,a>t\n\nb>t\n")
    assert read_subsets(p) == [(("s", "a"), ("a", "t")), (("b", "t"),)]
    q = tmp_path / "e.txt"
    q.write_text("s>a\na\tt\n")
    assert read_edge_list(q) == [("s", "a"), ("a", "t")]
    with pytest.raises(GraphFormatError):
        parse_edge_token("a>b>c")


def test_two_loops_conserves_flow():
    g = two_loops()
    for v in g.vertices:
        if v in ("s", "t"):
            continue
        inflow = sum(w for (a, b), w in TWO_LOOPS.items() if b == v)
        outflow = sum(w for (a, b), w in TWO_LOOPS.items() if a == v)
        assert inflow == outflow
