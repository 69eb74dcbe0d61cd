"""MILP building blocks: one s-t walk per block, products of a bounded integer
with a weight, subset constraints and safety-based variable fixing."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import (
    AntichainLargerThanK,
    ConflictingFix,
    EdgeNotInGraph,
    EmptySubset,
    InvalidBound,
    NegativeBound,
)
from .graph import Condensation, Edge, Graph, ReachabilityIndex
from .solver import LinExpr, Model, Var, quicksum


@dataclass
class WalkModelVars:
    """Variables of walk ``i``: traversal counts ``x``, tree indicators ``y``,
    distance labels ``d`` and, once products are linearized, the bits of ``x``."""

    graph: Graph
    i: int
    x: dict[Edge, Var]
    y: dict[Edge, Var]
    d: dict[str, Var]
    bound: dict[Edge, int]
    bits: dict[Edge, list[Var]] = field(default_factory=dict)


def _bounds(graph: Graph, B) -> dict[Edge, int]:
    if isinstance(B, Mapping):
        bound = {e: B[e] for e in graph.edges}
    else:
        bound = dict.fromkeys(graph.edges, B)
    for e, b in bound.items():
        if not isinstance(b, int) or isinstance(b, bool) or b < 0:
            raise InvalidBound(f"traversal bound for {e} must be a non-negative integer, got {b!r}")
    return bound


def add_walk_block(model: Model, graph: Graph, i: int, B) -> WalkModelVars:
    """Constraints whose feasible x-vectors are exactly the edge counts of s-t walks.

    ``B`` is a per-edge traversal bound (int or mapping).  Every vertex with
    incoming traffic needs exactly one incoming tree edge, and the tree edges
    must increase the distance label, so the used edges are all reachable from s.
    """
    bound = _bounds(graph, B)
    names = graph.vertices
    x, y, d = {}, {}, {}
    for j, e in enumerate(graph.edges):
        b = bound[e]
        x[e] = model.add_var(f"x_{j}_{i}", 0, b, "B" if b == 1 else "I")
        y[e] = model.add_var(f"y_{j}_{i}", 0, 1, "B")
    m2 = graph.n
    for v in range(graph.n):
        lo_hi = (0, 0) if v == graph.s else (0, m2)
        d[names[v]] = model.add_var(f"d_{v}_{i}", *lo_hi, "I")
    max_b = max(bound.values(), default=0)
    for v in range(graph.n):
        outs = [graph.edges[k] for k in graph.out_edges[v]]
        ins = [graph.edges[k] for k in graph.in_edges[v]]
        rhs = 1 if v == graph.s else (-1 if v == graph.t else 0)
        model.add_constraint(quicksum(x[e] for e in outs) - quicksum(x[e] for e in ins), "==", rhs,
                             name=f"cons_{v}_{i}")
        if v == graph.s or not ins:
            continue
        m1 = len(ins) * max_b
        model.add_constraint(quicksum(x[e] for e in ins) - m1 * quicksum(y[e] for e in ins), "<=", 0,
                             name=f"reach_{v}_{i}")
        model.add_constraint(quicksum(y[e] for e in ins), "<=", 1, name=f"tree_{v}_{i}")
    for j, (u, v) in enumerate(graph.edges):
        e = (u, v)
        model.add_constraint(y[e] - x[e], "<=", 0, name=f"ylex_{j}_{i}")
        # d_v >= d_u + 1 - M2 (1 - y)
        model.add_constraint(d[v] - d[u] - m2 * y[e], ">=", 1 - m2, name=f"dist_{j}_{i}")
    return WalkModelVars(graph, i, x, y, d, bound)


def binary_expansion(model: Model, x: Var, x_ub: int, name: str) -> list[Var]:
    """Bits b_j with x = sum 2^j b_j; a 0/1 variable is its own single bit."""
    if x_ub < 0:
        raise NegativeBound(f"upper bound of {x.name} is negative")
    if x_ub == 0:
        return []
    if x_ub == 1 and model.vtype[x.index] == "B":
        return [x]
    t = int(math.floor(math.log2(x_ub))) + 1
    bits = [model.add_var(f"{name}_b{j}", 0, 1, "B") for j in range(t)]
    model.add_constraint(x - quicksum((1 << j) * b for j, b in enumerate(bits)), "==", 0,
                         name=f"{name}_bits")
    return bits


def linearize_product(model: Model, x: Var, x_ub: int, y: Var, y_lo: int, y_hi: int,
                      bits: list[Var] | None = None, name: str | None = None) -> LinExpr:
    """Linear expression equal to x*y at every feasible point."""
    if x_ub < 0:
        raise NegativeBound(f"upper bound of {x.name} is negative")
    name = name or f"p_{x.name}_{y.name}"
    if x_ub == 0:
        model.add_constraint(x, "==", 0, name=f"{name}_zero")
        return LinExpr()
    if model.lb[x.index] == model.ub[x.index]:
        return LinExpr.of(y) * model.lb[x.index]
    if bits is None:
        bits = binary_expansion(model, x, x_ub, name)
    out = LinExpr()
    for j, b in enumerate(bits):
        z = model.add_var(f"{name}_z{j}", min(0, y_lo), max(0, y_hi), "I")
        model.add_constraint(z - y_lo * b, ">=", 0, name=f"{name}_z{j}a")
        model.add_constraint(z - y_hi * b, "<=", 0, name=f"{name}_z{j}b")
        model.add_constraint(z - y - y_lo * b, "<=", -y_lo, name=f"{name}_z{j}c")
        model.add_constraint(z - y - y_hi * b, ">=", -y_hi, name=f"{name}_z{j}d")
        out.add_term(z, 1 << j)
    return out


def walk_bits(model: Model, walk: WalkModelVars, e: Edge) -> list[Var]:
    """Bits of x[e] for this walk, created once and shared by all products."""
    if e not in walk.bits:
        x = walk.x[e]
        walk.bits[e] = binary_expansion(model, x, int(model.ub[x.index]), f"{x.name}")
    return walk.bits[e]


def add_subset_constraints(model: Model, walks: Sequence[WalkModelVars],
                           subsets: Iterable[Iterable[Edge]]) -> dict:
    """Each subset must lie entirely inside one walk."""
    if not walks:
        return {}
    graph = walks[0].graph
    subsets = [list(dict.fromkeys(map(tuple, S))) for S in subsets]
    for j, S in enumerate(subsets):
        if not S:
            raise EmptySubset(f"subset #{j} is empty")
        for e in S:
            if e not in graph.edge_index:
                raise EdgeNotInGraph(e)
    m3 = max((max(w.bound.values(), default=0) for w in walks), default=0)
    presence: dict[tuple[Edge, int], Var] = {}
    chosen: dict[tuple[int, int], Var] = {}
    for w in walks:
        for e in dict.fromkeys(e for S in subsets for e in S):
            eid = graph.edge_index[e]
            p = model.add_var(f"p_{eid}_{w.i}", 0, 1, "B")
            model.add_constraint(p - w.x[e], "<=", 0, name=f"p_{eid}_{w.i}_lo")
            model.add_constraint(w.x[e] - m3 * p, "<=", 0, name=f"p_{eid}_{w.i}_hi")
            presence[(e, w.i)] = p
    for j, S in enumerate(subsets):
        for w in walks:
            s = model.add_var(f"s_{w.i}_{j}", 0, 1, "B")
            model.add_constraint(quicksum(presence[(e, w.i)] for e in S) - len(S) * s, ">=", 0,
                                 name=f"sub_{j}_{w.i}")
            chosen[(w.i, j)] = s
        model.add_constraint(quicksum(chosen[(w.i, j)] for w in walks), ">=", 1, name=f"sub_{j}")
    return {"presence": presence, "chosen": chosen}


@dataclass(frozen=True)
class FixingPlan:
    fix_one: tuple[tuple[Edge, int, int, bool], ...]   # (edge, walk, value, exact)
    fix_zero: tuple[tuple[Edge, int], ...]
    inter_scc: frozenset[Edge]

    @property
    def size(self) -> tuple[int, int]:
        return len(self.fix_one), len(self.fix_zero)


def _sequence_edges(seq) -> tuple[Edge, ...]:
    return tuple(getattr(seq, "edges", seq))


def plan_fixing(graph: Graph, cond: Condensation, reach: ReachabilityIndex, antichain,
                witness: Mapping[Edge, object], k: int, protected: Iterable[Edge] = ()) -> FixingPlan:
    """Pin the witness sequence of the i-th antichain edge to walk i and rule
    out the edges walk i can never use alongside it."""
    members = list(getattr(antichain, "edges", antichain))
    if len(members) > k:
        raise AntichainLargerThanK(f"antichain of size {len(members)} needs at least that many walks, k={k}")
    protected = set(map(tuple, protected))
    inter = frozenset(e for e in graph.edges if cond.is_inter_scc(e))
    fix_one, fix_zero = [], []
    idx = graph.index
    for i, a in enumerate(members):
        seq = _sequence_edges(witness[a])
        counts = Counter(seq)
        for e in dict.fromkeys(seq):
            if e in inter:
                fix_one.append((e, i, 1, True))
            else:
                fix_one.append((e, i, counts[e], False))
        first, last = idx[seq[0][0]], idx[seq[-1][1]]
        gaps = [(idx[b], idx[c]) for (_, b), (c, _) in zip(seq, seq[1:])]
        for e in graph.edges:
            if e in counts or e in protected:
                continue
            u, v = idx[e[0]], idx[e[1]]
            if reach.reaches_idx(v, first) or reach.reaches_idx(last, u):
                continue
            if any(reach.reaches_idx(b, u) and reach.reaches_idx(v, c) for b, c in gaps):
                continue
            fix_zero.append((e, i))
    return FixingPlan(tuple(fix_one), tuple(fix_zero), inter)


def apply_fixing(model: Model, walks: Sequence[WalkModelVars], plan: FixingPlan):
    """Turn the plan into variable bounds; call before building products."""
    k = len(walks)
    zero = set(plan.fix_zero)
    for e, i, value, exact in plan.fix_one:
        if i >= k:
            raise ConflictingFix(f"plan refers to walk {i} but only {k} walks exist")
        if (e, i) in zero:
            raise ConflictingFix(f"edge {e} is both required and forbidden on walk {i}")
        x = walks[i].x[e]
        # a requirement above the traversal bound leaves lb > ub: the model
        # is infeasible exactly as the unfixed one would be
        lo = max(model.lb[x.index], value)
        model.set_bounds(x, lb=lo, ub=value if exact else None)
    for e, i in plan.fix_zero:
        if i >= k:
            raise ConflictingFix(f"plan refers to walk {i} but only {k} walks exist")
        x = walks[i].x[e]
        if model.lb[x.index] > 0:
            raise ConflictingFix(f"edge {e} is both required and forbidden on walk {i}")
        model.set_bounds(x, ub=0)
        model.set_bounds(walks[i].y[e], ub=0)
    for w in walks:
        for e in plan.inter_scc:
            x = w.x[e]
            if model.ub[x.index] > 1:
                model.set_bounds(x, ub=1)
                model.set_type(x, "B")
