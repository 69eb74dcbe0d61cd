"""Directed s-t graphs: validation, SCC condensation, reachability and the
structural transformations used by the safety and width machinery.

Vertex ids are opaque strings at the boundary.  Internally every vertex gets
a dense index (its position in ``Graph.vertices``) and every edge a dense
index (its position in ``Graph.edges``); algorithms run on those indices.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (
    DuplicateEdge,
    EdgeNotInGraph,
    EmptyEndSet,
    EmptyStartSet,
    GraphError,
    GraphFormatError,
    NegativeWeight,
    SinkHasOutEdge,
    SourceHasInEdge,
)

Edge = tuple[str, str]


class Graph:
    """Immutable edge-weighted s-t graph.

    ``edges`` keeps input order; that order is the tie-breaking order used by
    every deterministic choice downstream.
    """

    __slots__ = (
        "vertices", "edges", "weight", "source", "sink",
        "index", "edge_index", "tails", "heads", "out_edges", "in_edges",
    )

    def __init__(self, vertices, edges, weights, source, sink):
        self.vertices: tuple[str, ...] = tuple(vertices)
        self.edges: tuple[Edge, ...] = tuple(edges)
        self.weight: dict[Edge, int] = dict(zip(self.edges, weights))
        self.source: str = source
        self.sink: str = sink
        self.index: dict[str, int] = {v: i for i, v in enumerate(self.vertices)}
        self.edge_index: dict[Edge, int] = {e: i for i, e in enumerate(self.edges)}
        self.tails = [self.index[u] for u, _ in self.edges]
        self.heads = [self.index[v] for _, v in self.edges]
        self.out_edges: list[list[int]] = [[] for _ in self.vertices]
        self.in_edges: list[list[int]] = [[] for _ in self.vertices]
        for ei, (u, v) in enumerate(zip(self.tails, self.heads)):
            self.out_edges[u].append(ei)
            self.in_edges[v].append(ei)

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def s(self) -> int:
        return self.index[self.source]

    @property
    def t(self) -> int:
        return self.index[self.sink]

    def successors(self, v: str) -> list[str]:
        return [self.edges[e][1] for e in self.out_edges[self.index[v]]]

    def predecessors(self, v: str) -> list[str]:
        return [self.edges[e][0] for e in self.in_edges[self.index[v]]]

    def succ_idx(self, v: int) -> list[int]:
        return [self.heads[e] for e in self.out_edges[v]]

    def pred_idx(self, v: int) -> list[int]:
        return [self.tails[e] for e in self.in_edges[v]]

    def in_degree(self, v: str) -> int:
        return len(self.in_edges[self.index[v]])

    def out_degree(self, v: str) -> int:
        return len(self.out_edges[self.index[v]])

    def has_edge(self, u: str, v: str) -> bool:
        return (u, v) in self.edge_index

    def weighted_edges(self) -> dict[Edge, int]:
        return {e: self.weight[e] for e in self.edges}

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m}, source={self.source!r}, sink={self.sink!r})"

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.vertices == other.vertices and self.edges == other.edges
                and self.weight == other.weight and self.source == other.source
                and self.sink == other.sink)

    __hash__ = None


def _as_weighted_edges(edges) -> list[tuple[str, str, int]]:
    if isinstance(edges, Mapping):
        return [(u, v, w) for (u, v), w in edges.items()]
    out = []
    for item in edges:
        if len(item) == 3:
            out.append(tuple(item))
        else:
            (u, v), w = item
            out.append((u, v, w))
    return out


def build_graph(edges, source: str, sink: str, vertices: Iterable[str] = ()) -> Graph:
    """Validate a weighted edge list and return a :class:`Graph`.

    ``edges`` is either a mapping ``(tail, head) -> weight`` or an iterable of
    ``(tail, head, weight)`` triples.  Extra isolated ``vertices`` may be given.
    """
    triples = _as_weighted_edges(edges)
    if source == sink:
        raise GraphError(f"source and sink must differ (both {source!r})")
    order: list[str] = []
    seen: set[str] = set()

    def add_vertex(v):
        if v not in seen:
            seen.add(v)
            order.append(v)

    add_vertex(source)
    for v in vertices:
        add_vertex(v)
    edge_list: list[Edge] = []
    weights: list[int] = []
    present: set[Edge] = set()
    for u, v, w in triples:
        e = (u, v)
        if e in present:
            raise DuplicateEdge(f"duplicate edge {u}->{v}")
        if isinstance(w, bool) or not isinstance(w, int):
            if isinstance(w, float) and w.is_integer():
                w = int(w)
            else:
                raise GraphError(f"weight of {u}->{v} must be an integer, got {w!r}")
        if w < 0:
            raise NegativeWeight(f"edge {u}->{v} has negative weight {w}")
        if v == source:
            raise SourceHasInEdge(f"source {source!r} has in-coming edge {u}->{v}")
        if u == sink:
            raise SinkHasOutEdge(f"sink {sink!r} has out-going edge {u}->{v}")
        present.add(e)
        edge_list.append(e)
        weights.append(w)
        add_vertex(u)
        add_vertex(v)
    add_vertex(sink)
    return Graph(order, edge_list, weights, source, sink)


def normalize_sources_sinks(edges, starts, ends, vertices: Iterable[str] = (),
                            source: str = "s", sink: str = "t"):
    """Wrap a multi-source/multi-sink graph with a global source and sink.

    Returns ``(graph, auxiliary_edges)``.  Auxiliary edges carry weight 0 and
    must be kept out of E'.
    """
    starts = list(dict.fromkeys(starts))
    ends = list(dict.fromkeys(ends))
    if not starts:
        raise EmptyStartSet("start set S is empty")
    if not ends:
        raise EmptyEndSet("end set T is empty")
    triples = _as_weighted_edges(edges)
    names = set(vertices) | {u for u, _, _ in triples} | {v for _, v, _ in triples}
    names |= set(starts) | set(ends)
    for fresh in (source, sink):
        if fresh in names:
            raise GraphError(f"new terminal {fresh!r} collides with an existing vertex")
    aux = [(source, a) for a in starts] + [(b, sink) for b in ends]
    all_edges = [(source, a, 0) for a in starts] + triples + [(b, sink, 0) for b in ends]
    vertex_order = list(dict.fromkeys(list(vertices) + starts))
    graph = build_graph(all_edges, source, sink, vertices=vertex_order)
    return graph, frozenset(aux)


# --------------------------------------------------------------------------
# strongly connected components


def _tarjan_scc(n: int, succ: list[list[int]]) -> list[list[int]]:
    """Iterative Tarjan; components come out in reverse topological order."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            nbrs = succ[v]
            if i < len(nbrs):
                work[-1] = (v, i + 1)
                w = nbrs[i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


@dataclass(frozen=True)
class Condensation:
    """SCC condensation.  Component ids are numbered in topological order."""

    graph: Graph
    component: tuple[int, ...]           # vertex index -> component id
    members: tuple[tuple[int, ...], ...]  # component id -> vertex indices
    dag_succ: tuple[frozenset[int], ...]  # merged inter-component edges
    nontrivial: tuple[bool, ...]         # component contains at least one edge
    internal_edges: tuple[tuple[int, ...], ...]  # component id -> edge indices inside it

    @property
    def size(self) -> int:
        return len(self.members)

    def scc_id(self, v: str) -> int:
        return self.component[self.graph.index[v]]

    def is_trivial(self, comp: int) -> bool:
        return not self.nontrivial[comp]

    def is_inter_scc(self, edge: Edge) -> bool:
        u, v = edge
        return self.scc_id(u) != self.scc_id(v)

    def dag_edges(self) -> list[tuple[int, int]]:
        return [(c, d) for c in range(self.size) for d in sorted(self.dag_succ[c])]

    def components(self) -> list[set[str]]:
        return [{self.graph.vertices[v] for v in comp} for comp in self.members]


def condense(graph: Graph) -> Condensation:
    succ = [graph.succ_idx(v) for v in range(graph.n)]
    comps = _tarjan_scc(graph.n, succ)
    comps.reverse()  # topological order
    component = [0] * graph.n
    for cid, comp in enumerate(comps):
        for v in comp:
            component[v] = cid
    dag_succ = [set() for _ in comps]
    internal: list[list[int]] = [[] for _ in comps]
    for ei in range(graph.m):
        cu, cv = component[graph.tails[ei]], component[graph.heads[ei]]
        if cu == cv:
            internal[cu].append(ei)
        else:
            dag_succ[cu].add(cv)
    return Condensation(
        graph=graph,
        component=tuple(component),
        members=tuple(tuple(sorted(c)) for c in comps),
        dag_succ=tuple(frozenset(s) for s in dag_succ),
        nontrivial=tuple(bool(e) for e in internal),
        internal_edges=tuple(tuple(e) for e in internal),
    )


def is_acyclic(n: int, edges: Iterable[tuple[int, int]]) -> bool:
    """Kahn's algorithm; self-loops count as cycles."""
    succ = [[] for _ in range(n)]
    indeg = [0] * n
    for u, v in edges:
        succ[u].append(v)
        indeg[v] += 1
    queue = deque(v for v in range(n) if indeg[v] == 0)
    seen = 0
    while queue:
        u = queue.popleft()
        seen += 1
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return seen == n


# --------------------------------------------------------------------------
# reachability


class ReachabilityIndex:
    """Exact reachability: per-SCC collapse plus closure bitsets on the DAG.

    ``reaches(u, v)`` is reflexive (the empty path counts).
    """

    def __init__(self, condensation: Condensation):
        self.condensation = condensation
        self.graph = condensation.graph
        closure = [0] * condensation.size
        for c in reversed(range(condensation.size)):
            bits = 1 << c
            for d in condensation.dag_succ[c]:
                bits |= closure[d]
            closure[c] = bits
        self._closure = closure

    def reaches_idx(self, u: int, v: int) -> bool:
        comp = self.condensation.component
        return bool((self._closure[comp[u]] >> comp[v]) & 1)

    def reaches(self, u: str, v: str) -> bool:
        index = self.graph.index
        return self.reaches_idx(index[u], index[v])

    def edge_reaches(self, e: Edge, f: Edge) -> bool:
        """True iff some walk traverses ``e`` and later ``f``."""
        return self.reaches(e[1], f[0])


def reachability(graph: Graph, condensation: Condensation | None = None) -> ReachabilityIndex:
    return ReachabilityIndex(condensation or condense(graph))


def forward_reachable(graph: Graph, start: int, reverse: bool = False) -> list[bool]:
    seen = [False] * graph.n
    seen[start] = True
    queue = deque([start])
    while queue:
        u = queue.popleft()
        nbrs = graph.pred_idx(u) if reverse else graph.succ_idx(u)
        for v in nbrs:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return seen


def useful_vertices(graph: Graph) -> list[bool]:
    """Vertices lying on at least one s-t walk."""
    fwd = forward_reachable(graph, graph.s)
    bwd = forward_reachable(graph, graph.t, reverse=True)
    return [a and b for a, b in zip(fwd, bwd)]


# --------------------------------------------------------------------------
# transformations


def _fresh_name(base: str, taken: set[str]) -> str:
    name = base
    i = 1
    while name in taken:
        name = f"{base}#{i}"
        i += 1
    taken.add(name)
    return name


def midpoint_transform(graph: Graph, edges: Iterable[Edge]):
    """Subdivide every edge of ``edges`` by a fresh midpoint vertex.

    Returns ``(new_graph, midpoint -> original edge)``.  The first half keeps
    the weight, the second half gets 0.
    """
    chosen = []
    for e in edges:
        e = tuple(e)
        if e not in graph.edge_index:
            raise EdgeNotInGraph(f"edge {e[0]}->{e[1]} not in graph")
        chosen.append(e)
    chosen_set = set(chosen)
    taken = set(graph.vertices)
    midpoint_of = {}
    for e in graph.edges:
        if e in chosen_set:
            midpoint_of[e] = _fresh_name(f"{e[0]}>{e[1]}", taken)
    new_edges = []
    for e in graph.edges:
        u, v = e
        w = graph.weight[e]
        if e in midpoint_of:
            mid = midpoint_of[e]
            new_edges.append((u, mid, w))
            new_edges.append((mid, v, 0))
        else:
            new_edges.append((u, v, w))
    new_graph = build_graph(new_edges, graph.source, graph.sink, vertices=graph.vertices)
    return new_graph, {mid: e for e, mid in midpoint_of.items()}


def compact_unitigs(graph: Graph, protected: Iterable[str] = ()):
    """Contract every internal vertex with in-degree 1 and out-degree 1.

    Returns ``(compacted_graph, compacted edge -> original vertex path)``.
    A merge is skipped when it would create a parallel edge; ``protected``
    vertices (and s, t) are never removed.  The merged edge keeps the weight
    of the first edge of its path.
    """
    keep = set(protected) | {graph.source, graph.sink}
    succ: dict[str, dict[str, tuple[int, tuple[str, ...]]]] = {v: {} for v in graph.vertices}
    pred: dict[str, set[str]] = {v: set() for v in graph.vertices}
    for (u, v) in graph.edges:
        succ[u][v] = (graph.weight[(u, v)], (u, v))
        pred[v].add(u)
    alive = dict.fromkeys(graph.vertices)
    queue = deque(graph.vertices)
    while queue:
        x = queue.popleft()
        if x not in alive or x in keep:
            continue
        if len(pred[x]) != 1 or len(succ[x]) != 1:
            continue
        (u,) = pred[x]
        (w,) = succ[x]
        if u == x or w == x or w in succ[u]:
            continue
        wu, path_u = succ[u].pop(x)
        _, path_w = succ[x].pop(w)
        pred[w].discard(x)
        succ[u][w] = (wu, path_u + path_w[1:])
        pred[w].add(u)
        del alive[x]
        del succ[x], pred[x]
        queue.append(u)
        queue.append(w)
    triples = []
    expansion = {}
    # emit in order of each path's first original edge so output order is stable
    order = {e: i for i, e in enumerate(graph.edges)}
    records = []
    for u in alive:
        for w, (weight, path) in succ[u].items():
            records.append((order[(path[0], path[1])], u, w, weight, path))
    records.sort()
    for _, u, w, weight, path in records:
        triples.append((u, w, weight))
        expansion[(u, w)] = path
    new_graph = build_graph(triples, graph.source, graph.sink, vertices=list(alive))
    return new_graph, expansion


def expand_walk(walk: Iterable[str], expansion: Mapping[Edge, tuple[str, ...]]) -> list[str]:
    """Map a vertex walk of a compacted graph back to the original graph."""
    walk = list(walk)
    if not walk:
        return []
    out = [walk[0]]
    for u, v in zip(walk, walk[1:]):
        out.extend(expansion[(u, v)][1:])
    return out


# --------------------------------------------------------------------------
# text format


def read_graph(path) -> Graph:
    text = Path(path).read_text(encoding="utf-8")
    return parse_graph(text, path=str(path))


def parse_graph(text: str, path: str | None = None) -> Graph:
    """Parse ``tail<TAB>head<TAB>weight`` lines with ``#source``/``#sink`` headers."""
    source = sink = None
    triples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] in ("source", "sink"):
                if len(parts) != 2:
                    raise GraphFormatError(f"expected '#{parts[0]} <id>'", lineno, path)
                if parts[0] == "source":
                    source = parts[1]
                else:
                    sink = parts[1]
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise GraphFormatError(
                f"expected 3 tab-separated fields, got {len(fields)}", lineno, path)
        u, v, w = (f.strip() for f in fields)
        if not u or not v:
            raise GraphFormatError("empty vertex id", lineno, path)
        try:
            weight = int(w)
        except ValueError:
            raise GraphFormatError(f"weight {w!r} is not an integer", lineno, path) from None
        triples.append((u, v, weight, lineno))
    if source is None:
        raise GraphFormatError("missing '#source <id>' header", None, path)
    if sink is None:
        raise GraphFormatError("missing '#sink <id>' header", None, path)
    seen = {}
    for u, v, _, lineno in triples:
        if (u, v) in seen:
            raise GraphFormatError(
                f"duplicate edge {u}->{v} (first on line {seen[(u, v)]})", lineno, path)
        seen[(u, v)] = lineno
    try:
        return build_graph([(u, v, w) for u, v, w, _ in triples], source, sink)
    except GraphError as exc:
        lineno = None
        for u, v, _, ln in triples:
            if f"{u}->{v}" in str(exc):
                lineno = ln
                break
        raise GraphFormatError(str(exc), lineno, path) from exc


def format_graph(graph: Graph) -> str:
    lines = [f"#source {graph.source}", f"#sink {graph.sink}"]
    for u, v in graph.edges:
        lines.append(f"{u}\t{v}\t{graph.weight[(u, v)]}")
    return "\n".join(lines) + "\n"


def write_graph(graph: Graph, path) -> None:
    Path(path).write_text(format_graph(graph), encoding="utf-8", newline="\n")


def parse_edge_token(token: str, lineno=None, path=None) -> Edge:
    token = token.strip()
    if token.count(">") != 1:
        raise GraphFormatError(f"bad edge token {token!r}, expected 'u>v'", lineno, path)
    u, v = token.split(">")
    if not u or not v:
        raise GraphFormatError(f"bad edge token {token!r}", lineno, path)
    return (u, v)


def read_subsets(path) -> list[tuple[Edge, ...]]:
    """One subset per line, comma-separated ``u>v`` tokens."""
    subsets = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        subsets.append(tuple(parse_edge_token(tok, lineno, str(path))
                             for tok in line.split(",") if tok.strip()))
    return subsets


def read_edge_list(path) -> list[Edge]:
    """One ``u>v`` (or tab-separated ``u<TAB>v``) edge per line."""
    edges = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "\t" in line:
            u, v = line.split("\t")[:2]
            edges.append((u.strip(), v.strip()))
        else:
            edges.append(parse_edge_token(line, lineno, str(path)))
    return edges


def format_edge(e: Edge) -> str:
    return f"{e[0]}>{e[1]}"


@dataclass
class GraphStats:
    n: int
    m: int
    nontrivial_sccs: int
    self_loops: int = field(default=0)


def graph_stats(graph: Graph) -> GraphStats:
    cond = condense(graph)
    return GraphStats(graph.n, graph.m, sum(cond.nontrivial),
                      sum(1 for u, v in graph.edges if u == v))
