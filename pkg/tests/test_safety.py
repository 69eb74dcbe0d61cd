import random

import pytest

from flowwalks.errors import EmptyC, UnreachableCVertex
from flowwalks.graph import build_graph, midpoint_transform
from flowwalks.safety import (
    build_blue_trees,
    edge_safe_sequences,
    longest_covering_sequence,
    maximal_safe_sequences,
    vertex_safe_sequences,
)

from oracles import two_loops, cycle_graph, diamond, univocal_graph, maximal_safe_oracle, random_st_graph


def edges_of(seqs):
    return {s.edges for s in seqs}


def test_diamond_vertices():
    assert set(vertex_safe_sequences(diamond())) == {("s", "a", "t"), ("s", "b", "t")}
    trees = build_blue_trees(diamond(), ["s", "a", "b", "t"])
    assert trees.collapsed == {}


def test_diamond_edges():
    g = diamond()
    assert edges_of(edge_safe_sequences(g, g.edges)) == {
        (("s", "a"), ("a", "t")), (("s", "b"), ("b", "t"))}


def test_cycle_edges():
    g = cycle_graph()
    (seq,) = edge_safe_sequences(g, g.edges)
    assert seq.edges == (("s", "a"), ("a", "b"), ("b", "a"), ("a", "t"))


def test_univocal_sequences_and_collapse():
    trees = build_blue_trees(univocal_graph(), ["a", "e", "g", "u", "w"])
    assert trees.chains["u"] == ("u", "w")
    assert trees.collapsed["u"] == ("v", "w")
    assert trees.group["e"] == "e" and trees.group["a"] == "a"
    assert set(maximal_safe_sequences(trees)) == {
        ("s", "u", "v", "w", "t"), ("s", "a", "d", "e", "a", "d", "f", "t"), ("s", "a", "g", "d", "f", "t")}


def test_two_loops_sequence_at_de():
    g = two_loops()
    seqs = {s.anchor: s for s in edge_safe_sequences(g, g.edges)}
    # (a,c) is not forced: s,a,b,c reaches c as well
    assert seqs[("d", "e")].edges == (("s", "a"), ("c", "d"), ("d", "e"), ("e", "c"), ("c", "d"))
    assert seqs[("d", "e")].vertices == ("s", "a", "c", "d", "e", "c", "d", "t")


def test_edge_sequences_match_oracle():
    rng = random.Random(5)
    for _ in range(25):
        g = random_st_graph(rng, rng.randint(3, 9), 2.0)
        C = rng.sample(list(g.edges), max(1, g.m // 3))
        mg, mids = midpoint_transform(g, C)
        want = {tuple(mids[v] for v in x if v in mids) for x in maximal_safe_oracle(mg, list(mids))}
        assert edges_of(edge_safe_sequences(g, C)) == want


def test_longest_covering_sequence():
    g = diamond()
    seqs = edge_safe_sequences(g, g.edges)
    w, witness = longest_covering_sequence(seqs, g.edges)
    assert w[("s", "a")] == 2
    assert witness[("s", "a")].edges == (("s", "a"), ("a", "t"))
    g = cycle_graph()
    w, _ = longest_covering_sequence(edge_safe_sequences(g, g.edges), g.edges)
    assert w[("a", "b")] == 4
    g = build_graph([("s", "a", 1), ("a", "t", 1), ("s", "t", 1)], "s", "t")
    w, witness = longest_covering_sequence(edge_safe_sequences(g, [("s", "t")]), g.edges)
    assert w[("a", "t")] == 0 and ("a", "t") not in witness


def test_errors():
    g = diamond()
    with pytest.raises(EmptyC):
        edge_safe_sequences(g, [])
    h = build_graph([("s", "a", 1), ("a", "t", 1), ("s", "x", 1)], "s", "t")
    with pytest.raises(UnreachableCVertex):
        vertex_safe_sequences(h, ["x"])
    with pytest.raises(UnreachableCVertex):
        edge_safe_sequences(h, [("s", "x")])


def test_collapse_invariance():
    rng = random.Random(8)
    for _ in range(40):
        g = random_st_graph(rng, rng.randint(3, 15), 2.0)
        C = rng.sample(list(g.vertices), max(1, g.n // 3))
        trees = build_blue_trees(g, C)
        fast = set(maximal_safe_sequences(trees))
        slow = set(maximal_safe_sequences(build_blue_trees(g, C, collapse=False)))
        # a univocal chain has no vertex that is a leaf in both uncollapsed trees
        if not trees.collapsed:
            assert fast == slow
        assert slow <= fast
        assert fast == maximal_safe_oracle(g, C)


def test_no_univocal_pair_left():
    rng = random.Random(9)
    for _ in range(40):
        g = random_st_graph(rng, rng.randint(3, 25), 2.0, acyclic=True)
        C = rng.sample(list(g.vertices), max(1, g.n // 2))
        trees = build_blue_trees(g, C)
        s_kids, t_kids = trees.collapsed_children()
        for x in trees.chains:
            if len(s_kids[x]) == 1:
                (y,) = s_kids[x]
                assert t_kids[y] != {x}
