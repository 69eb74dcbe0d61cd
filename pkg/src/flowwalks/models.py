"""k-Flow Decomposition, k-Least Absolute Errors and k-Minimum Path Error on
s-t graphs with cycles, with optional safety-based variable fixing."""

from __future__ import annotations

import logging
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable

from .errors import EmptyEdgeSet, InfeasibleCover, NotAWalkMultiset
from .graph import Edge, Graph, condense, is_acyclic, reachability, useful_vertices
from .milp import (
    FixingPlan,
    WalkModelVars,
    add_subset_constraints,
    add_walk_block,
    apply_fixing,
    linearize_product,
    plan_fixing,
    walk_bits,
)
from .safety import edge_safe_sequences, longest_covering_sequence
from .solver import Model, Params, Status, quicksum, solve
from .widths import max_weight_antichain, min_walk_cover_size

log = logging.getLogger(__name__)

MODELS = ("fd", "lae", "mpe")


@dataclass
class DecompositionSpec:
    graph: Graph
    eprime: tuple[Edge, ...] | None = None      # None means every edge
    subsets: tuple[tuple[Edge, ...], ...] = ()
    model: str = "fd"
    k: int | str = "auto"
    safety: bool = True
    time_limit: float = 300.0
    gap: float = 1e-4
    traversal_cap: int = 8
    strict_positive_weights: bool = False
    keep_zero_weights: bool = False
    aux_edges: frozenset = frozenset()
    backend: str | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {', '.join(MODELS)}")
        self.eprime = tuple(self.graph.edges) if self.eprime is None else tuple(map(tuple, self.eprime))
        self.subsets = tuple(tuple(map(tuple, S)) for S in self.subsets)
        for e in self.eprime:
            if e not in self.graph.edge_index:
                raise ValueError(f"E' edge {e} is not in the graph")
        if self.k != "auto" and (not isinstance(self.k, int) or self.k < 1):
            raise ValueError("k must be a positive integer or 'auto'")

    @property
    def flow(self) -> dict[Edge, int]:
        return self.graph.weight

    def positive_eprime(self) -> list[Edge]:
        return [e for e in self.eprime if self.graph.weight[e] > 0]

    def safety_set(self) -> list[Edge]:
        """Edges every solution is guaranteed to cover."""
        if self.model == "lae":
            return list(dict.fromkeys(e for S in self.subsets for e in S))
        return self.positive_eprime()


@dataclass
class Solution:
    status: str
    k: int | None = None
    walks: list[tuple[str, ...]] = field(default_factory=list)
    weights: list[int] = field(default_factory=list)
    slacks: list[int] = field(default_factory=list)
    objective: int | None = None
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "k": self.k,
            "objective": self.objective,
            "walks": [list(w) for w in self.walks],
            "weights": list(self.weights),
            "slacks": list(self.slacks),
            "stats": dict(self.stats),
        }


# --------------------------------------------------------------------------
# walks from edge multisets


def extract_walk(graph: Graph, counts) -> tuple[str, ...]:
    """Order an edge multiset into an s-t walk (Euler-style), or raise
    NotAWalkMultiset if no such walk exists."""
    counts = {tuple(e): int(c) for e, c in dict(counts).items() if c}
    for e, c in counts.items():
        if e not in graph.edge_index:
            raise NotAWalkMultiset(f"edge {e} is not in the graph")
        if c < 0:
            raise NotAWalkMultiset(f"negative count on {e}")
    s, t = graph.source, graph.sink
    balance = Counter()
    for (u, v), c in counts.items():
        balance[u] += c
        balance[v] -= c
    for v, b in balance.items():
        want = 1 if v == s else (-1 if v == t else 0)
        if b != want:
            raise NotAWalkMultiset(f"flow conservation fails at {v!r}")
    if balance[s] != 1:
        raise NotAWalkMultiset("the edges do not leave the source")
    out: dict[str, list[str]] = {}
    for e in graph.edges:
        if e in counts:
            out.setdefault(e[0], []).extend([e[1]] * counts[e])
    # used edges must be reachable from s (no detached cycles)
    seen = {s}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for v in out.get(u, ()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    for (u, _v) in counts:
        if u not in seen:
            raise NotAWalkMultiset(f"edge leaving {u!r} is not reachable from the source")
    for lst in out.values():
        lst.reverse()
    stack, path = [s], []
    while stack:
        v = stack[-1]
        if out.get(v):
            stack.append(out[v].pop())
        else:
            path.append(stack.pop())
    return tuple(reversed(path))


def walk_counts(walk) -> Counter:
    return Counter(zip(walk, walk[1:]))


# --------------------------------------------------------------------------
# model assembly


@dataclass
class _Built:
    model: Model
    walks: list[WalkModelVars]
    w: list
    rho: list
    plan: FixingPlan | None


@dataclass
class SafetyPrep:
    antichain: object
    witness: dict
    sequences: list
    seconds: float
    cond: object
    reach: object


def safety_preprocess(spec: DecompositionSpec, cond=None, reach=None) -> SafetyPrep | None:
    C = spec.safety_set()
    if not C:
        return None
    t0 = time.perf_counter()
    graph = spec.graph
    cond = cond or condense(graph)
    reach = reach or reachability(graph, cond)
    seqs = edge_safe_sequences(graph, C)
    weight, witness = longest_covering_sequence(seqs, graph.edges)
    antichain = max_weight_antichain(graph, weight, reach)
    return SafetyPrep(antichain, witness, seqs, time.perf_counter() - t0, cond, reach)


def _traversal_bounds(spec: DecompositionSpec) -> dict[Edge, int]:
    f = spec.flow
    top = max((f[e] for e in spec.eprime), default=1)
    default = min(spec.traversal_cap, max(1, top))
    if spec.model == "fd":
        ep = set(spec.eprime)
        return {e: (f[e] if e in ep else default) for e in spec.graph.edges}
    return dict.fromkeys(spec.graph.edges, default)


def build_model(spec: DecompositionSpec, k: int, prep: SafetyPrep | None = None) -> _Built:
    graph = spec.graph
    f = spec.flow
    model = Model(f"{spec.model}_k{k}")
    bounds = _traversal_bounds(spec)
    walks = [add_walk_block(model, graph, i, bounds) for i in range(k)]
    plan = None
    if prep is not None and len(prep.antichain.edges) > 0:
        plan = plan_fixing(graph, prep.cond, prep.reach, prep.antichain, prep.witness, k,
                           protected=spec.aux_edges)
        apply_fixing(model, walks, plan)
    wbar = max((f[e] for e in spec.eprime), default=0) + 1
    w_lo = 1 if (spec.model == "fd" or spec.strict_positive_weights) else 0
    w = [model.add_var(f"w_{i}", w_lo, wbar, "I") for i in range(k)]
    rho = [model.add_var(f"rho_{i}", 0, wbar, "I") for i in range(k)] if spec.model == "mpe" else []
    if spec.subsets:
        add_subset_constraints(model, walks, spec.subsets)

    def products(e, var, lo, hi, tag):
        terms = []
        for wk in walks:
            x = wk.x[e]
            ub = int(model.ub[x.index])
            if ub <= 0 or model.lb[x.index] > model.ub[x.index]:
                continue
            bits = walk_bits(model, wk, e) if model.lb[x.index] != ub else None
            terms.append(linearize_product(model, x, ub, var[wk.i], lo, hi, bits=bits,
                                           name=f"{tag}_{graph.edge_index[e]}_{wk.i}"))
        return quicksum(terms)

    objective = []
    for e in spec.eprime:
        j = graph.edge_index[e]
        flow_sum = products(e, w, w_lo, wbar, "pw")
        if spec.model == "fd":
            model.add_constraint(flow_sum, "==", f[e], name=f"fd_{j}")
        elif spec.model == "lae":
            cap = f[e] + k * bounds[e] * wbar
            z = model.add_var(f"err_{j}", 0, cap, "I")
            model.add_constraint(flow_sum + z, ">=", f[e], name=f"lae_{j}a")
            model.add_constraint(flow_sum - z, "<=", f[e], name=f"lae_{j}b")
            objective.append(z)
        else:
            slack_sum = products(e, rho, 0, wbar, "pr")
            model.add_constraint(flow_sum + slack_sum, ">=", f[e], name=f"mpe_{j}a")
            model.add_constraint(flow_sum - slack_sum, "<=", f[e], name=f"mpe_{j}b")
    if spec.model == "lae":
        model.set_objective(quicksum(objective))
    elif spec.model == "mpe":
        model.set_objective(quicksum(rho))
    return _Built(model, walks, w, rho, plan)


def _read_solution(spec, built: _Built, result, k) -> Solution:
    graph = spec.graph
    walks, weights, slacks = [], [], []
    hits = 0
    for i, wk in enumerate(built.walks):
        counts = {}
        for e, x in wk.x.items():
            val = int(result.value(x))
            if val:
                counts[e] = val
                if spec.model != "fd" and val >= wk.bound[e]:
                    hits += 1
        tree = [(graph.index[u], graph.index[v]) for (u, v), y in wk.y.items() if result.value(y) > 0.5]
        if not is_acyclic(graph.n, tree):
            raise NotAWalkMultiset(f"tree indicators of walk {i} contain a cycle")
        walk = extract_walk(graph, counts)
        if walk_counts(walk) != Counter(counts):
            raise NotAWalkMultiset("walk extraction did not reproduce the solver counts")
        walks.append(walk)
        weights.append(int(result.value(built.w[i])))
        slacks.append(int(result.value(built.rho[i])) if built.rho else 0)
    if hits:
        log.warning("%d traversal variables reached their bound (cap %d); raise the cap if this is unexpected",
                    hits, spec.traversal_cap)
    rows = list(zip(weights, walks, slacks))
    if spec.model != "fd" and not spec.keep_zero_weights:
        rows = [r for r in rows if r[0] > 0 or r[2] > 0]
    rows.sort(key=lambda r: (-r[0], r[1]))
    if spec.model == "fd":
        objective = k
    else:
        objective = int(round(result.objective))
    return Solution(
        status=result.status, k=k,
        walks=[r[1] for r in rows], weights=[r[0] for r in rows],
        slacks=[r[2] for r in rows] if spec.model == "mpe" else [],
        objective=objective, stats={"boundHits": hits},
    )


def solve_k(spec: DecompositionSpec, k: int, prep: SafetyPrep | None = None) -> Solution:
    """One solve at a fixed k; ``prep`` carries the safety preprocessing (or None)."""
    stats = {"fixedOne": 0, "fixedZero": 0, "antichain": 0,
             "prepSeconds": prep.seconds if prep else 0.0, "solveSeconds": 0.0}
    if prep is not None:
        stats["antichain"] = len(prep.antichain.edges)
        if len(prep.antichain.edges) > k:
            return Solution(Status.INFEASIBLE, k=k, stats=stats)
    t0 = time.perf_counter()
    built = build_model(spec, k, prep)
    stats["buildSeconds"] = time.perf_counter() - t0
    if built.plan is not None:
        stats["fixedOne"], stats["fixedZero"] = built.plan.size
    result = solve(built.model, Params(spec.time_limit, spec.gap), backend=spec.backend)
    stats["solveSeconds"] = result.wall_seconds
    stats["variables"] = built.model.num_vars
    stats["constraints"] = len(built.model.constraints)
    if not result.has_solution:
        return Solution(result.status, k=k, stats=stats)
    sol = _read_solution(spec, built, result, k)
    sol.stats = {**stats, **sol.stats}
    return sol


def _prep(spec: DecompositionSpec):
    return safety_preprocess(spec) if spec.safety else None


def _check_cover_possible(spec: DecompositionSpec, edges: Iterable[Edge]):
    useful = useful_vertices(spec.graph)
    idx = spec.graph.index
    for u, v in edges:
        if not (useful[idx[u]] and useful[idx[v]]):
            raise InfeasibleCover(f"edge {(u, v)} lies on no s-t walk")


def auto_k(spec: DecompositionSpec) -> int:
    """Minimum number of walks covering the E' edges that carry flow (at least 1)."""
    need = spec.positive_eprime()
    if not need:
        return 1
    _check_cover_possible(spec, need)
    return max(1, min_walk_cover_size(spec.graph, need))


def solve_k_fd(spec: DecompositionSpec) -> Solution:
    k = auto_k(spec) if spec.k == "auto" else spec.k
    return solve_k(spec, k, _prep(spec))


def _search_k(spec: DecompositionSpec, start: int, limit: int) -> Solution:
    """Smallest feasible k in [start, limit]; a timeout at any k stops the search."""
    prep = _prep(spec)
    total = {"prepSeconds": prep.seconds if prep else 0.0, "solveSeconds": 0.0, "tried": []}
    last = None
    for k in range(start, max(start, limit) + 1):
        last = solve_k(spec, k, prep)
        total["solveSeconds"] += last.stats.get("solveSeconds", 0.0)
        total["tried"].append(k)
        if last.status != Status.INFEASIBLE:
            last.stats.update(total)
            return last
    last.stats.update(total)
    return Solution(Status.INFEASIBLE, k=None, stats=last.stats)


def solve_min_flow_decomp(spec: DecompositionSpec) -> Solution:
    """Smallest k admitting a k-FD, searching upward from the cover lower bound."""
    if not spec.eprime:
        raise EmptyEdgeSet("E' is empty")
    return _search_k(spec, auto_k(spec), spec.graph.m)


def solve_k_lae(spec: DecompositionSpec) -> Solution:
    """With k='auto' the search starts at the cover size and, when subset
    constraints make it infeasible, grows k (at most one walk per subset)."""
    if spec.k != "auto":
        return solve_k(spec, spec.k, _prep(spec))
    start = auto_k(spec)
    if not spec.subsets:
        return solve_k(spec, start, _prep(spec))
    return _search_k(spec, start, start + len(spec.subsets))


def solve_k_mpe(spec: DecompositionSpec) -> Solution:
    _check_cover_possible(spec, spec.positive_eprime())
    k = auto_k(spec) if spec.k == "auto" else spec.k
    return solve_k(spec, k, _prep(spec))


def decompose(spec: DecompositionSpec) -> Solution:
    if spec.model == "fd":
        return solve_min_flow_decomp(spec) if spec.k == "auto" else solve_k_fd(spec)
    if spec.model == "lae":
        return solve_k_lae(spec)
    return solve_k_mpe(spec)


# --------------------------------------------------------------------------
# independent validation


def validate_solution(spec: DecompositionSpec, sol: Solution) -> dict:
    """Recheck every constraint of the chosen problem from the walks alone."""
    graph = spec.graph
    f = spec.flow
    problems: list[str] = []
    counts = []
    for walk in sol.walks:
        ok = (len(walk) >= 2 and walk[0] == graph.source and walk[-1] == graph.sink
              and all(graph.has_edge(u, v) for u, v in zip(walk, walk[1:])))
        if not ok:
            problems.append(f"not an s-t walk: {walk}")
        counts.append(walk_counts(walk))
    slacks = sol.slacks or [0] * len(sol.walks)
    residual, allowance = {}, {}
    for e in spec.eprime:
        got = sum(c[e] * w for c, w in zip(counts, sol.weights))
        residual[e] = f[e] - got
        allowance[e] = sum(c[e] * r for c, r in zip(counts, slacks))
    if spec.model == "fd":
        if any(w < 1 for w in sol.weights):
            problems.append("flow decomposition weights must be positive")
        for e, r in residual.items():
            if r:
                problems.append(f"edge {e}: residual {r}")
        objective = len(sol.walks)
    elif spec.model == "lae":
        objective = sum(abs(r) for r in residual.values())
    else:
        for e, r in residual.items():
            if abs(r) > allowance[e]:
                problems.append(f"edge {e}: |residual| {abs(r)} exceeds slack {allowance[e]}")
        objective = sum(slacks)
    if spec.strict_positive_weights and any(w < 1 for w in sol.weights):
        problems.append("weights must be positive")
    for j, S in enumerate(spec.subsets):
        if not any(all(c[e] > 0 for e in S) for c in counts):
            problems.append(f"subset #{j} is not contained in any walk")
    if sol.objective is not None and objective != sol.objective:
        problems.append(f"objective recomputes to {objective}, reported {sol.objective}")
    return {"ok": not problems, "problems": problems, "objective": objective,
            "residuals": residual, "slackAllowance": allowance}
