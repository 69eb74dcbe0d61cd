"""Maximal C-safe sequences from blue-dominator trees.

A vertex sequence is C-safe when every C-walk cover has a walk containing it
as a subsequence.  The maximal ones are the extensions of the vertices that
are leaves in both blue-dominator trees, once every C-univocal chain has been
collapsed into a single node.  Edge sets are handled by subdividing each edge
with a midpoint vertex and running the vertex machinery on the midpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dominators import (
    DominatorTree,
    build_s_dominator_tree,
    build_t_dominator_tree,
    extension,
)
from .errors import EmptyC, UnreachableCVertex
from .graph import Edge, Graph, midpoint_transform


def _nearest_blue_ancestor(tree: DominatorTree, relevant: set[str], blue) -> dict[str, str | None]:
    """Closest strict blue ancestor of every relevant vertex (None if none)."""
    order = sorted(relevant, key=tree.depth.__getitem__)
    nba: dict[str, str | None] = {}
    for v in order:
        if v == tree.root:
            nba[v] = None
            continue
        p = tree.parent[v]
        nba[v] = p if p in blue else nba[p]
    return nba


def _ancestor_closure(tree: DominatorTree, seeds: Iterable[str]) -> set[str]:
    out: set[str] = set()
    for v in seeds:
        while v not in out:
            out.add(v)
            if v == tree.root:
                break
            v = tree.parent[v]
    return out


@dataclass(frozen=True)
class BlueTrees:
    """Dominator trees restricted to C and the vertices dominating some member
    of C, with C-univocal chains collapsed.

    ``group`` maps each blue vertex to the representative of its chain (the
    chain vertex deepest in the t-tree); ``collapsed`` maps a representative
    to the t-tree path stored for it (the chain minus the representative).
    """

    graph: Graph
    s_tree: DominatorTree
    t_tree: DominatorTree
    blue: frozenset[str]
    s_vertices: frozenset[str]
    t_vertices: frozenset[str]
    s_blue_children: dict[str, tuple[str, ...]]
    t_blue_children: dict[str, tuple[str, ...]]
    chains: dict[str, tuple[str, ...]]        # representative -> v_1..v_k
    group: dict[str, str]
    collapsed: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def vertices(self) -> frozenset[str]:
        return self.s_vertices | self.t_vertices

    def collapsed_children(self) -> tuple[dict[str, set[str]], dict[str, set[str]]]:
        """Blue-children between representatives in the collapsed s- and t-trees."""
        s_kids, t_kids = {}, {}
        for rep, chain in self.chains.items():
            s_kids[rep] = {self.group[c] for c in self.s_blue_children[chain[-1]]}
            t_kids[rep] = {self.group[c] for c in self.t_blue_children[chain[0]]}
        return s_kids, t_kids

    def common_leaves(self) -> list[str]:
        s_kids, t_kids = self.collapsed_children()
        order = self.graph.index
        return sorted((r for r in self.chains if not s_kids[r] and not t_kids[r]),
                      key=order.__getitem__)


def build_blue_trees(graph: Graph, C: Iterable[str], s_tree: DominatorTree | None = None,
                     t_tree: DominatorTree | None = None, collapse: bool = True) -> BlueTrees:
    blue = frozenset(C)
    if not blue:
        raise EmptyC("C must be non-empty")
    s_tree = s_tree or build_s_dominator_tree(graph)
    t_tree = t_tree or build_t_dominator_tree(graph)
    missing = sorted(v for v in blue if v not in s_tree or v not in t_tree)
    if missing:
        raise UnreachableCVertex(f"C vertices not on any s-t walk: {', '.join(missing)}")
    s_rel = _ancestor_closure(s_tree, blue)
    t_rel = _ancestor_closure(t_tree, blue)
    nba_s = _nearest_blue_ancestor(s_tree, s_rel, blue)
    nba_t = _nearest_blue_ancestor(t_tree, t_rel, blue)
    index = graph.index
    s_kids: dict[str, list[str]] = {v: [] for v in blue}
    t_kids: dict[str, list[str]] = {v: [] for v in blue}
    for v in sorted(blue, key=index.__getitem__):
        if nba_s[v] is not None:
            s_kids[nba_s[v]].append(v)
        if nba_t[v] is not None:
            t_kids[nba_t[v]].append(v)

    # x -> y when y is the unique blue-child of x in the s-tree and x is the
    # unique blue-child of y in the t-tree
    nxt: dict[str, str] = {}
    if collapse:
        for x in blue:
            if len(s_kids[x]) == 1:
                y = s_kids[x][0]
                if t_kids[y] == [x]:
                    nxt[x] = y
    has_prev = set(nxt.values())
    chains: dict[str, tuple[str, ...]] = {}
    group: dict[str, str] = {}
    collapsed: dict[str, tuple[str, ...]] = {}
    for v in sorted(blue, key=index.__getitem__):
        if v in has_prev:
            continue
        chain = [v]
        while chain[-1] in nxt:
            chain.append(nxt[chain[-1]])
        chains[v] = tuple(chain)
        for c in chain:
            group[c] = v
        if len(chain) > 1:
            up = t_tree.path_to_root(v)
            collapsed[v] = tuple(up[1:up.index(chain[-1]) + 1])
    return BlueTrees(
        graph=graph, s_tree=s_tree, t_tree=t_tree, blue=blue,
        s_vertices=frozenset(s_rel), t_vertices=frozenset(t_rel),
        s_blue_children={v: tuple(k) for v, k in s_kids.items()},
        t_blue_children={v: tuple(k) for v, k in t_kids.items()},
        chains=chains, group=group, collapsed=collapsed,
    )


def maximal_safe_sequences(trees: BlueTrees) -> list[tuple[str, ...]]:
    """Extensions of the common leaves, ordered by anchor vertex."""
    return [extension(trees.s_tree, trees.t_tree, rep) for rep in trees.common_leaves()]


def safe_sequences_with_anchors(trees: BlueTrees) -> list[tuple[str, tuple[str, ...]]]:
    return [(rep, extension(trees.s_tree, trees.t_tree, rep)) for rep in trees.common_leaves()]


@dataclass(frozen=True)
class SafeSequence:
    """Ordered edges every C-walk cover contains within a single walk."""

    edges: tuple[Edge, ...]
    anchor: Edge
    vertices: tuple[str, ...] = ()  # guaranteed original vertices, in order

    def __len__(self):
        return len(self.edges)

    def count(self, edge: Edge) -> int:
        return self.edges.count(edge)

    @property
    def first_vertex(self) -> str:
        return self.edges[0][0]

    @property
    def last_vertex(self) -> str:
        return self.edges[-1][1]


def edge_safe_sequences(graph: Graph, C: Iterable[Edge]) -> list[SafeSequence]:
    C = [tuple(e) for e in C]
    if not C:
        raise EmptyC("C must be non-empty")
    mid_graph, mid_to_edge = midpoint_transform(graph, C)
    try:
        trees = build_blue_trees(mid_graph, mid_to_edge)
    except UnreachableCVertex as exc:
        raise UnreachableCVertex(f"C edges not on any s-t walk ({exc})") from None
    out = []
    for rep, ext in safe_sequences_with_anchors(trees):
        edges = tuple(mid_to_edge[v] for v in ext if v in mid_to_edge)
        verts = tuple(v for v in ext if v not in mid_to_edge)
        out.append(SafeSequence(edges=edges, anchor=mid_to_edge[rep], vertices=verts))
    order = graph.edge_index
    out.sort(key=lambda seq: order[seq.anchor])
    return out


def vertex_safe_sequences(graph: Graph, C: Iterable[str] | None = None) -> list[tuple[str, ...]]:
    """Maximal C-safe vertex sequences; C defaults to all vertices on s-t walks."""
    s_tree = build_s_dominator_tree(graph)
    t_tree = build_t_dominator_tree(graph)
    if C is None:
        C = s_tree.vertices
    return maximal_safe_sequences(build_blue_trees(graph, C, s_tree, t_tree))


def longest_covering_sequence(sequences: Sequence[SafeSequence], edges: Iterable[Edge] = ()):
    """Per edge, the length of a longest sequence containing it and one such
    sequence.  Edges in no sequence get weight 0 and no witness."""
    weight: dict[Edge, int] = {tuple(e): 0 for e in edges}
    witness: dict[Edge, SafeSequence] = {}
    for seq in sequences:
        for e in set(seq.edges):
            if len(seq) > weight.get(e, 0):
                weight[e] = len(seq)
                witness[e] = seq
    return weight, witness
