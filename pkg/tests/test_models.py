from collections import Counter

import pytest

from flowwalks.errors import EmptyEdgeSet, InfeasibleCover, NotAWalkMultiset
from flowwalks.graph import build_graph
from flowwalks.models import (
    DecompositionSpec,
    Solution,
    auto_k,
    decompose,
    extract_walk,
    solve_k,
    validate_solution,
    walk_counts,
)
from flowwalks.solver import Status

from oracles import two_loops, cycle_graph, diamond

SAFETY = [True, False]


@pytest.mark.parametrize("safety", SAFETY)
def test_fd_diamond(safety):
    sol = decompose(DecompositionSpec(diamond((2, 2, 3, 3)), model="fd", safety=safety))
    assert sol.status == Status.OPTIMAL and sol.k == 2
    assert sol.weights == [3, 2]
    assert sol.walks == [("s", "b", "t"), ("s", "a", "t")]
    assert validate_solution(DecompositionSpec(diamond((2, 2, 3, 3))), sol)["ok"]


@pytest.mark.parametrize("safety", SAFETY)
def test_fd_cycle_k1_infeasible(safety):
    sol = decompose(DecompositionSpec(cycle_graph((2, 1, 1, 2)), model="fd", k=1, safety=safety))
    assert sol.status == Status.INFEASIBLE and not sol.walks


@pytest.mark.parametrize("safety", SAFETY)
def test_fd_two_loops(safety):
    spec = DecompositionSpec(two_loops(), model="fd", safety=safety)
    sol = decompose(spec)
    assert sol.k == 2 and sorted(sol.weights) == [1, 3]
    light = sol.walks[sol.weights.index(1)]
    assert walk_counts(light)[("c", "d")] == 2
    assert light == ("s", "a", "a", "c", "d", "e", "c", "d", "t")
    assert validate_solution(spec, sol)["ok"]


def test_fd_single_path():
    g = build_graph([("s", "a", 5), ("a", "t", 5)], "s", "t")
    sol = decompose(DecompositionSpec(g))
    assert sol.k == 1 and sol.weights == [5] and sol.objective == 1


@pytest.mark.parametrize("safety", SAFETY)
def test_lae_examples(safety):
    g = diamond((2, 2, 3, 3))
    sol = decompose(DecompositionSpec(g, model="lae", k=2, safety=safety))
    assert sol.objective == 0
    sol = decompose(DecompositionSpec(diamond((2, 2, 3, 4)), model="lae", k=2, safety=safety))
    assert sol.objective == 1
    subsets = [[("s", "a")], [("s", "b")]]
    sol = decompose(DecompositionSpec(diamond((2, 2, 3, 3)), model="lae", k=1, subsets=subsets, safety=safety))
    assert sol.status == Status.INFEASIBLE


@pytest.mark.parametrize("safety", SAFETY)
def test_mpe_examples(safety):
    sol = decompose(DecompositionSpec(diamond((2, 2, 3, 3)), model="mpe", k=2, safety=safety))
    assert sol.objective == 0 and sol.slacks == [0, 0]
    spec = DecompositionSpec(diamond((2, 2, 3, 4)), model="mpe", k=2, safety=safety)
    sol = decompose(spec)
    assert sol.objective == 1 and sum(sol.slacks) == 1
    assert validate_solution(spec, sol)["ok"]
    g = diamond((2, 2, 3, 4))
    ep = [e for e in g.edges if e != ("b", "t")]
    assert decompose(DecompositionSpec(g, eprime=ep, model="mpe", k=2, safety=safety)).objective == 0


def test_lae_auto_grows_k_for_subsets():
    g = diamond((2, 2, 3, 3))
    subsets = [[("s", "a"), ("a", "t")], [("s", "b"), ("b", "t")]]
    sol = decompose(DecompositionSpec(g, model="lae", subsets=subsets))
    assert sol.status == Status.OPTIMAL and sol.k == 2 and sol.objective == 0
    assert sol.stats["tried"] == [2]


def test_strict_positive_and_zero_weight_walks():
    g = diamond((2, 2, 3, 3))
    sol = decompose(DecompositionSpec(g, model="lae", k=3, keep_zero_weights=True))
    assert len(sol.walks) == 3 and sol.objective == 0
    sol = decompose(DecompositionSpec(g, model="lae", k=3))
    assert all(w > 0 for w in sol.weights)
    sol = decompose(DecompositionSpec(g, model="lae", k=3, strict_positive_weights=True, keep_zero_weights=True))
    assert all(w > 0 for w in sol.weights)


def test_auto_k_and_errors():
    assert auto_k(DecompositionSpec(two_loops())) == 2
    g = build_graph([("s", "a", 1), ("a", "t", 1), ("s", "x", 1)], "s", "t")
    with pytest.raises(InfeasibleCover):
        decompose(DecompositionSpec(g, model="mpe", k=1))
    with pytest.raises(EmptyEdgeSet):
        decompose(DecompositionSpec(diamond(), eprime=[]))
    with pytest.raises(ValueError):
        DecompositionSpec(diamond(), eprime=[("a", "b")])
    with pytest.raises(ValueError):
        DecompositionSpec(diamond(), k=0)
    with pytest.raises(ValueError):
        DecompositionSpec(diamond(), model="xyz")


def test_safety_stats():
    sol = decompose(DecompositionSpec(two_loops()))
    assert sol.stats["antichain"] == 2
    assert sol.stats["fixedOne"] > 0
    assert sol.stats["prepSeconds"] < 0.5
    assert set(sol.to_json()) == {"status", "k", "objective", "walks", "weights", "slacks", "stats"}


def test_antichain_larger_than_k_is_infeasible():
    spec = DecompositionSpec(diamond((2, 2, 3, 3)))
    from flowwalks.models import safety_preprocess
    sol = solve_k(spec, 1, safety_preprocess(spec))
    assert sol.status == Status.INFEASIBLE and sol.stats["antichain"] == 2


def test_extract_walk():
    g = cycle_graph()
    counts = {("s", "a"): 1, ("a", "b"): 1, ("b", "a"): 1, ("a", "t"): 1}
    assert extract_walk(g, counts) == ("s", "a", "b", "a", "t")
    loop = build_graph([("s", "a", 1), ("a", "a", 1), ("a", "t", 1)], "s", "t")
    assert extract_walk(loop, {("s", "a"): 1, ("a", "a"): 1, ("a", "t"): 1}) == ("s", "a", "a", "t")
    with pytest.raises(NotAWalkMultiset):
        extract_walk(g, {("a", "b"): 1, ("b", "a"): 1})
    with pytest.raises(NotAWalkMultiset):
        extract_walk(g, {("s", "a"): 1, ("a", "t"): 2})
    g2 = build_graph([("s", "a", 1), ("a", "t", 1), ("a", "b", 1), ("b", "c", 1), ("c", "b", 1)], "s", "t")
    with pytest.raises(NotAWalkMultiset):
        extract_walk(g2, {("s", "a"): 1, ("a", "t"): 1, ("b", "c"): 1, ("c", "b"): 1})
    walk = extract_walk(two_loops(), Counter({("s", "a"): 1, ("a", "a"): 1, ("a", "c"): 1, ("c", "d"): 2,
                                                ("d", "e"): 1, ("e", "c"): 1, ("d", "t"): 1}))
    assert walk_counts(walk)[("c", "d")] == 2


def test_validate_flags_corruption():
    spec = DecompositionSpec(diamond((2, 2, 3, 3)))
    sol = decompose(spec)
    bad = Solution(sol.status, sol.k, sol.walks, [sol.weights[0] + 1, sol.weights[1]], [], sol.objective)
    report = validate_solution(spec, bad)
    assert not report["ok"]
    assert report["residuals"][("s", "b")] == -1
    bogus = Solution(sol.status, 1, [("s", "b", "a", "t")], [1], [], 1)
    assert any("not an s-t walk" in p for p in validate_solution(spec, bogus)["problems"])


def test_exhaustive_backend_agrees():
    spec = DecompositionSpec(diamond((1, 1, 1, 1)), model="fd", backend="exhaustive")
    sol = decompose(spec)
    assert sol.k == 2 and sol.weights == [1, 1]
