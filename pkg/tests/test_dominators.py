import random

import pytest

from flowwalks.dominators import build_s_dominator_tree, build_t_dominator_tree, dom_k, extension, semi_nca
from flowwalks.errors import VertexNotInTree
from flowwalks.graph import build_graph

from oracles import cycle_graph, diamond, random_st_graph, removal_idom

# two-cycle between v20 and v21 behind a bypass v0 -> v1 -> v24
BYPASS = [("v0", "v20"), ("v20", "v21"), ("v21", "v20"), ("v20", "v23"), ("v23", "v24"),
        ("v0", "v1"), ("v1", "v24")]


def bypass_graph():
    return build_graph([(u, v, 1) for u, v in BYPASS], "v0", "v24")


def test_diamond_trees():
    s_tree = build_s_dominator_tree(diamond())
    assert s_tree.parent == {"a": "s", "b": "s", "t": "s"}
    t_tree = build_t_dominator_tree(diamond())
    assert t_tree.parent["a"] == "t" and t_tree.parent["s"] == "t"


def test_cycle_trees():
    g = cycle_graph()
    s_tree = build_s_dominator_tree(g)
    assert s_tree.parent["b"] == "a" and s_tree.parent["t"] == "a"
    t_tree = build_t_dominator_tree(g)
    assert t_tree.parent["b"] == "a" and t_tree.parent["s"] == "a"


def test_bypass_paths():
    g = bypass_graph()
    s_tree = build_s_dominator_tree(g)
    t_tree = build_t_dominator_tree(g)
    assert s_tree.path_to_root("v21")[::-1] == ["v0", "v20", "v21"]
    assert t_tree.path_to_root("v21") == ["v21", "v20", "v23", "v24"]
    assert extension(s_tree, t_tree, "v21") == ("v0", "v20", "v21", "v20", "v23", "v24")


def test_dom_k():
    tree = build_s_dominator_tree(cycle_graph())
    assert dom_k(tree, "b", 1) == "a"
    assert dom_k(tree, "b", 99) == "s"
    assert dom_k(tree, "s", 1) == "s"
    with pytest.raises(ValueError):
        dom_k(tree, "b", 0)
    with pytest.raises(VertexNotInTree):
        dom_k(tree, "zz", 1)


def test_extensions_small():
    g = diamond()
    s_tree, t_tree = build_s_dominator_tree(g), build_t_dominator_tree(g)
    assert extension(s_tree, t_tree, "a") == ("s", "a", "t")
    g = cycle_graph()
    s_tree, t_tree = build_s_dominator_tree(g), build_t_dominator_tree(g)
    assert extension(s_tree, t_tree, "b") == ("s", "a", "b", "a", "t")


def test_pruned_vertices_absent():
    g = build_graph([("s", "a", 1), ("a", "t", 1), ("s", "x", 1)], "s", "t")
    tree = build_s_dominator_tree(g)
    assert "x" not in tree
    assert tree.pruned == {"x"}
    with pytest.raises(VertexNotInTree):
        tree.path_to_root("x")


def test_disconnected_source_sink():
    g = build_graph([("s", "a", 1), ("b", "t", 1)], "s", "t")
    tree = build_s_dominator_tree(g)
    assert tree.vertices == []


def test_semi_nca_textbook():
    # flowgraph from the classic dominator literature
    succ = [[1, 2], [3], [3, 4], [5], [5], [1]]
    pred = [[] for _ in succ]
    for u, vs in enumerate(succ):
        for v in vs:
            pred[v].append(u)
    assert semi_nca(6, 0, succ, pred) == [0, 0, 0, 0, 2, 0]


def test_matches_removal_oracle():
    rng = random.Random(11)
    for _ in range(60):
        g = random_st_graph(rng, rng.randint(2, 20), rng.uniform(1.5, 3))
        for reverse, build in ((False, build_s_dominator_tree), (True, build_t_dominator_tree)):
            assert build(g).parent == removal_idom(g, reverse)


def test_dot_output():
    dot = build_s_dominator_tree(diamond()).to_dot()
    assert dot.startswith("digraph") and '"s" -> "a";' in dot
