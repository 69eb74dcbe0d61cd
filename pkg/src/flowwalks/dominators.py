"""s- and t-dominator trees (semi-NCA) and the dom/extension helpers.

Vertices that lie on no s-t walk are pruned before construction: dominance is
undefined for them and no solution walk can touch them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .errors import VertexNotInTree
from .graph import Graph, useful_vertices

log = logging.getLogger(__name__)


def semi_nca(n: int, root: int, succ, pred) -> list[int]:
    """Immediate dominators of a flowgraph given as index adjacency lists.

    Returns ``idom`` with ``idom[root] == root`` and ``-1`` for vertices not
    reachable from ``root``.
    """
    pre = [-1] * n          # vertex -> preorder number
    order: list[int] = []   # preorder number -> vertex
    dfs_parent: list[int] = []
    stack = [(root, -1)]
    while stack:
        v, p = stack.pop()
        if pre[v] != -1:
            continue
        pre[v] = len(order)
        order.append(v)
        dfs_parent.append(p)
        for w in reversed(succ[v]):
            if pre[w] == -1:
                stack.append((w, pre[v]))
    size = len(order)
    semi = list(range(size))
    label = list(range(size))
    anc: list[int | None] = [None] * size
    idom = [0] * size

    def evaluate(v: int) -> int:
        if anc[v] is None:
            return v
        path = []
        u = v
        while anc[anc[u]] is not None:
            path.append(u)
            u = anc[u]
        while path:
            x = path.pop()
            a = anc[x]
            if semi[label[a]] < semi[label[x]]:
                label[x] = label[a]
            anc[x] = anc[a]
        return label[v]

    for w in range(size - 1, 0, -1):
        for pv in pred[order[w]]:
            v = pre[pv]
            if v == -1:
                continue
            u = evaluate(v)
            if semi[u] < semi[w]:
                semi[w] = semi[u]
        label[w] = w
        anc[w] = dfs_parent[w]
    for w in range(1, size):
        d = dfs_parent[w]
        while d > semi[w]:
            d = idom[d]
        idom[w] = d
    result = [-1] * n
    result[root] = root
    for w in range(1, size):
        result[order[w]] = order[idom[w]]
    return result


@dataclass(frozen=True)
class DominatorTree:
    """Dominator tree over the vertices that lie on some s-t walk."""

    graph: Graph
    root: str
    parent: dict[str, str]          # immediate dominator, root absent
    depth: dict[str, int]
    pruned: frozenset[str] = field(default=frozenset())

    def __contains__(self, v) -> bool:
        return v in self.depth

    @property
    def vertices(self) -> list[str]:
        return [v for v in self.graph.vertices if v in self.depth]

    def children(self) -> dict[str, list[str]]:
        kids: dict[str, list[str]] = {v: [] for v in self.vertices}
        for v in self.vertices:
            if v in self.parent:
                kids[self.parent[v]].append(v)
        return kids

    def path_to_root(self, v: str) -> list[str]:
        if v not in self.depth:
            raise VertexNotInTree(f"vertex {v!r} not in the {self.root}-dominator tree")
        out = [v]
        while v != self.root:
            v = self.parent[v]
            out.append(v)
        return out

    def is_ancestor(self, u: str, v: str) -> bool:
        """Non-strict: every vertex is its own ancestor."""
        if u not in self.depth or v not in self.depth:
            return False
        while self.depth[v] > self.depth[u]:
            v = self.parent[v]
        return u == v

    def to_dot(self, name: str | None = None) -> str:
        lines = [f'digraph "{name or self.root + "_dominator_tree"}" {{']
        for v in self.vertices:
            lines.append(f'  "{v}";')
        for v in self.vertices:
            if v in self.parent:
                lines.append(f'  "{self.parent[v]}" -> "{v}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _build(graph: Graph, reverse: bool) -> DominatorTree:
    keep = useful_vertices(graph)
    pruned = frozenset(graph.vertices[v] for v in range(graph.n) if not keep[v])
    if pruned:
        log.warning("pruned %d vertices not on any s-t walk: %s",
                    len(pruned), ", ".join(sorted(pruned)))
    succ = [[] for _ in range(graph.n)]
    pred = [[] for _ in range(graph.n)]
    for u, v in zip(graph.tails, graph.heads):
        if u == v or not (keep[u] and keep[v]):
            continue
        if reverse:
            u, v = v, u
        succ[u].append(v)
        pred[v].append(u)
    root = graph.t if reverse else graph.s
    if not keep[root]:
        # s and t are disconnected: no vertex lies on an s-t walk
        return DominatorTree(graph, graph.vertices[root], {}, {}, pruned)
    idom = semi_nca(graph.n, root, succ, pred)
    names = graph.vertices
    parent = {names[v]: names[idom[v]] for v in range(graph.n)
              if idom[v] != -1 and v != root}
    depth = {names[root]: 0}
    # idom chains are short for most graphs; memoize by walking up
    for v in range(graph.n):
        if idom[v] == -1:
            continue
        chain = []
        x = names[v]
        while x not in depth:
            chain.append(x)
            x = parent[x]
        d = depth[x]
        for y in reversed(chain):
            d += 1
            depth[y] = d
    return DominatorTree(graph, names[root], parent, depth, pruned)


def build_s_dominator_tree(graph: Graph) -> DominatorTree:
    return _build(graph, reverse=False)


def build_t_dominator_tree(graph: Graph) -> DominatorTree:
    return _build(graph, reverse=True)


def dom_k(tree: DominatorTree, v: str, k: int) -> str:
    """k-th ancestor of ``v``; the root once ``k`` exceeds the depth."""
    if v not in tree.depth:
        raise VertexNotInTree(f"vertex {v!r} not in the {tree.root}-dominator tree")
    if k < 1:
        raise ValueError("k must be a positive integer")
    if k >= tree.depth[v]:
        return tree.root
    for _ in range(k):
        v = tree.parent[v]
    return v


def extension(s_tree: DominatorTree, t_tree: DominatorTree, v: str) -> tuple[str, ...]:
    """Root-to-v path in the s-tree followed by the v-to-root path in the t-tree."""
    if v not in s_tree.depth or v not in t_tree.depth:
        raise VertexNotInTree(f"vertex {v!r} missing from a dominator tree")
    down = s_tree.path_to_root(v)[::-1]
    up = t_tree.path_to_root(v)
    return tuple(down + up[1:])
