"""Maximum-weight edge antichains and minimum walk covers on graphs with cycles.

Both reduce to a minimum flow with lower bounds on an acyclic gadget graph:
every non-trivial SCC becomes one edge ``c_in -> c_out`` weighted by the
heaviest edge inside it, every inter-SCC edge becomes a two-edge path through
a private vertex (original weight first, 0 second).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import EmptyEdgeSet, InfeasibleCover
from .graph import Condensation, Edge, Graph, ReachabilityIndex, build_graph, condense

INF = 1 << 62


class Dinic:
    """Plain Dinic max-flow on integer capacities."""

    def __init__(self, n: int):
        self.n = n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []

    def add_arc(self, u: int, v: int, cap: int) -> int:
        self.adj[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(cap)
        self.adj[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(0)
        return len(self.to) - 2

    def _levels(self, s: int, t: int):
        level = [-1] * self.n
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for a in self.adj[u]:
                if self.cap[a] > 0 and level[self.to[a]] < 0:
                    level[self.to[a]] = level[u] + 1
                    queue.append(self.to[a])
        return level if level[t] >= 0 else None

    def _augment(self, s: int, t: int, level, it) -> int:
        # iterative blocking-flow DFS
        path: list[int] = []
        u = s
        pushed = 0
        while True:
            if u == t:
                f = min(self.cap[a] for a in path)
                for a in path:
                    self.cap[a] -= f
                    self.cap[a ^ 1] += f
                pushed += f
                path.clear()
                u = s
                continue
            advanced = False
            while it[u] < len(self.adj[u]):
                a = self.adj[u][it[u]]
                v = self.to[a]
                if self.cap[a] > 0 and level[v] == level[u] + 1:
                    path.append(a)
                    u = v
                    advanced = True
                    break
                it[u] += 1
            if advanced:
                continue
            if u == s:
                return pushed
            level[u] = -1  # dead end
            a = path.pop()
            u = self.to[a ^ 1]
            it[u] += 1

    def max_flow(self, s: int, t: int) -> int:
        total = 0
        while True:
            level = self._levels(s, t)
            if level is None:
                return total
            total += self._augment(s, t, level, [0] * self.n)

    def residual_reachable(self, s: int) -> list[bool]:
        seen = [False] * self.n
        seen[s] = True
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for a in self.adj[u]:
                if self.cap[a] > 0 and not seen[self.to[a]]:
                    seen[self.to[a]] = True
                    queue.append(self.to[a])
        return seen


def min_flow_lower_bounds(n: int, arcs, source: int, sink: int):
    """Minimum source-sink flow with lower bounds and unbounded capacities.

    ``arcs`` is a list of ``(u, v, lower)``; the arc set must be acyclic.
    Returns ``(value, flow, sink_side)`` where ``sink_side[v]`` marks the
    sink side of a minimum cut: arcs from the source side into the sink side
    are tight at their lower bound and, taken together, pairwise unreachable.
    """
    out = [[] for _ in range(n)]
    inn = [[] for _ in range(n)]
    for i, (u, v, _) in enumerate(arcs):
        out[u].append(i)
        inn[v].append(i)

    def bfs_tree(start, forward):
        via = [-1] * n
        seen = [False] * n
        seen[start] = True
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for i in (out[u] if forward else inn[u]):
                w = arcs[i][1] if forward else arcs[i][0]
                if not seen[w]:
                    seen[w] = True
                    via[w] = i
                    queue.append(w)
        return seen, via

    from_src, via_src = bfs_tree(source, True)
    to_snk, via_snk = bfs_tree(sink, False)
    flow = [0] * len(arcs)
    for i, (u, v, lb) in enumerate(arcs):
        if lb <= 0:
            continue
        if not (from_src[u] and to_snk[v]):
            raise InfeasibleCover(f"lower-bounded arc {u}->{v} lies on no source-sink path")
        flow[i] += lb
        x = u
        while x != source:
            j = via_src[x]
            flow[j] += lb
            x = arcs[j][0]
        x = v
        while x != sink:
            j = via_snk[x]
            flow[j] += lb
            x = arcs[j][1]
    value = sum(flow[i] for i in out[source]) - sum(flow[i] for i in inn[source])
    net = Dinic(n)
    back, fwd = [], []
    for i, (u, v, lb) in enumerate(arcs):
        back.append(net.add_arc(v, u, flow[i] - lb))
        fwd.append(net.add_arc(u, v, INF))
    cancelled = net.max_flow(sink, source)
    for i in range(len(arcs)):
        flow[i] += net.cap[fwd[i] ^ 1] - net.cap[back[i] ^ 1]
    return value - cancelled, flow, net.residual_reachable(sink)


@dataclass(frozen=True)
class GadgetDag:
    dag: Graph
    edge_weight: dict[Edge, int]
    back_map: dict[Edge, tuple]          # ("edge", e) | ("scc", component id) | ("link", e)
    lower_bound: dict[Edge, int]
    scc_edge: dict[int, Edge]            # non-trivial component -> its gadget edge
    first_half: dict[Edge, Edge]         # inter-SCC original edge -> gadget edge carrying it
    condensation: Condensation


def build_gadget_dag(graph: Graph, weights: Mapping[Edge, int] | None = None,
                     eprime: Iterable[Edge] = (), condensation: Condensation | None = None) -> GadgetDag:
    """Acyclic gadget graph; ``eprime`` edges get lower bound 1 on their gadget edge."""
    weights = graph.weight if weights is None else weights
    cond = condensation or condense(graph)
    eprime = set(map(tuple, eprime))

    def vin(c):
        return f"C{c}.in" if cond.nontrivial[c] else f"C{c}"

    def vout(c):
        return f"C{c}.out" if cond.nontrivial[c] else f"C{c}"

    triples = []
    back: dict[Edge, tuple] = {}
    lower: dict[Edge, int] = {}
    scc_edge: dict[int, Edge] = {}
    first_half: dict[Edge, Edge] = {}
    for c in range(cond.size):
        if not cond.nontrivial[c]:
            continue
        inside = [graph.edges[i] for i in cond.internal_edges[c]]
        w = max(weights.get(e, 0) for e in inside)
        ge = (vin(c), vout(c))
        triples.append((*ge, w))
        back[ge] = ("scc", c)
        lower[ge] = 1 if any(e in eprime for e in inside) else 0
        scc_edge[c] = ge
    for e in graph.edges:
        cu, cv = cond.scc_id(e[0]), cond.scc_id(e[1])
        if cu == cv:
            continue
        z = f"z:{e[0]}>{e[1]}"
        first, second = (vout(cu), z), (z, vin(cv))
        triples.append((*first, weights.get(e, 0)))
        triples.append((*second, 0))
        back[first] = ("edge", e)
        back[second] = ("link", e)
        lower[first] = 1 if e in eprime else 0
        lower[second] = 0
        first_half[e] = first
    cs, ct = cond.scc_id(graph.source), cond.scc_id(graph.sink)
    verts = []
    for c in range(cond.size):
        verts.extend([vin(c), vout(c)] if cond.nontrivial[c] else [vin(c)])
    dag = build_graph(triples, vin(cs), vout(ct), vertices=verts)
    return GadgetDag(dag, dict(dag.weight), back, lower, scc_edge, first_half, cond)


@dataclass(frozen=True)
class Antichain:
    edges: tuple[Edge, ...]
    total_weight: int


def _max_antichain_dag(dag: Graph, weight: Mapping[Edge, int]):
    """Max-weight antichain of a DAG via min flow with lower bound = weight."""
    n = dag.n
    S, T = n, n + 1
    arcs = [(dag.tails[i], dag.heads[i], weight.get(e, 0)) for i, e in enumerate(dag.edges)]
    for v in range(n):
        arcs.append((S, v, 0))
        arcs.append((v, T, 0))
    value, _, sink_side = min_flow_lower_bounds(n + 2, arcs, S, T)
    members = [dag.edges[i] for i in range(dag.m)
               if not sink_side[dag.tails[i]] and sink_side[dag.heads[i]]
               and weight.get(dag.edges[i], 0) > 0]
    return value, members


def _translate(gadget: GadgetDag, graph: Graph, weights, members) -> list[Edge]:
    out = []
    for ge in members:
        kind, ref = gadget.back_map[ge]
        if kind == "edge":
            out.append(ref)
        elif kind == "scc":
            inside = [graph.edges[i] for i in gadget.condensation.internal_edges[ref]]
            best = max(weights.get(e, 0) for e in inside)
            out.append(next(e for e in inside if weights.get(e, 0) == best))
    return out


def max_weight_antichain(graph: Graph, weights: Mapping[Edge, int] | None = None,
                         reach: ReachabilityIndex | None = None,
                         lexicographic: bool = False) -> Antichain:
    """Pairwise-unreachable edge set of maximum total weight.

    With ``lexicographic`` ties are broken towards the lexicographically
    smallest edge set (edges compared as ``(tail, head)`` id pairs); this costs
    one extra min-flow per candidate edge.
    """
    weights = graph.weight if weights is None else dict(weights)
    cond = reach.condensation if reach is not None else condense(graph)
    reach = reach or ReachabilityIndex(cond)
    gadget = build_gadget_dag(graph, weights, condensation=cond)
    best, members = _max_antichain_dag(gadget.dag, gadget.edge_weight)
    chosen = _translate(gadget, graph, weights, members)
    if lexicographic and best > 0:
        chosen = _lexicographic(graph, weights, reach, cond, best)
    total = sum(weights.get(e, 0) for e in chosen)
    assert total == best, (total, best)
    for i, e in enumerate(chosen):
        for f in chosen[i + 1:]:
            if reach.edge_reaches(e, f) or reach.edge_reaches(f, e):
                raise AssertionError(f"antichain members {e} and {f} are comparable")
    order = graph.edge_index
    return Antichain(tuple(sorted(chosen, key=order.__getitem__)), total)


def _lexicographic(graph, weights, reach, cond, best) -> list[Edge]:
    candidates = sorted(e for e in graph.edges if weights.get(e, 0) > 0)

    def comparable(e, f):
        return reach.edge_reaches(e, f) or reach.edge_reaches(f, e)

    chosen: list[Edge] = []
    acc = 0
    for e in candidates:
        if acc == best:
            break
        if any(comparable(e, c) for c in chosen):
            continue
        trial = chosen + [e]
        rest = {f: w for f, w in weights.items()
                if f not in trial and not any(comparable(f, c) for c in trial)}
        gadget = build_gadget_dag(graph, rest, condensation=cond)
        value, _ = _max_antichain_dag(gadget.dag, gadget.edge_weight)
        if acc + weights[e] + value == best:
            chosen.append(e)
            acc += weights[e]
    return chosen


def min_walk_cover_size(graph: Graph, eprime: Iterable[Edge],
                        condensation: Condensation | None = None) -> int:
    """Minimum number of s-t walks that together traverse every edge of ``eprime``."""
    eprime = [tuple(e) for e in eprime]
    if not eprime:
        raise EmptyEdgeSet("E' is empty")
    gadget = build_gadget_dag(graph, {}, eprime=eprime, condensation=condensation)
    dag = gadget.dag
    arcs = [(dag.tails[i], dag.heads[i], gadget.lower_bound[e]) for i, e in enumerate(dag.edges)]
    value, _, _ = min_flow_lower_bounds(dag.n, arcs, dag.s, dag.t)
    return value
