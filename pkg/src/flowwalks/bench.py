"""Solve every instance with and without safety preprocessing and compare."""

from __future__ import annotations

import csv
import io
import json
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .generate import Instance
from .graph import Edge, Graph
from .models import DecompositionSpec, decompose
from .solver import Status


def percentile_eprime(graph: Graph, edges, p: float = 25.0) -> list[Edge]:
    """Edges whose weight is strictly above the p-th percentile of ``edges``."""
    edges = list(edges)
    if not edges:
        return []
    cut = float(np.percentile([graph.weight[e] for e in edges], p))
    return [e for e in edges if graph.weight[e] > cut]


def instance_spec(inst: Instance, model: str, safety: bool, time_limit: float,
                  eprime_policy: str | None = None, backend: str | None = None, **extra) -> DecompositionSpec:
    """FD runs on the perfect weights with E' = all k-mer edges; LAE adds the
    read subsets; MPE keeps the edges above the 25th percentile."""
    graph = inst.graph if model == "fd" or inst.noisy is None else inst.noisy
    core = [e for e in graph.edges if e not in inst.aux_edges]
    policy = eprime_policy or ("percentile:25" if model == "mpe" else "all")
    if policy == "all":
        eprime = core
    elif policy.startswith("percentile:"):
        eprime = percentile_eprime(graph, core, float(policy.split(":", 1)[1]))
    else:
        raise ValueError(f"unknown E' policy {policy!r}")
    subsets = inst.subsets if model == "lae" else ()
    return DecompositionSpec(graph, eprime=eprime, subsets=subsets, model=model, safety=safety,
                             time_limit=time_limit, aux_edges=inst.aux_edges, backend=backend, **extra)


@dataclass
class BenchRow:
    name: str
    n: int
    m: int
    prepSeconds: float
    solveSecondsNoSafety: float
    solveSecondsSafety: float
    solvedNoSafety: bool
    solvedSafety: bool
    fixedOne: int
    fixedZero: int
    antichain: int
    kNoSafety: int | None
    kSafety: int | None
    objectiveNoSafety: int | None
    objectiveSafety: int | None
    objectiveEqual: bool | None


TIMING = ("prepSeconds", "solveSecondsNoSafety", "solveSecondsSafety")


@dataclass
class BenchReport:
    model: str
    time_limit: float
    rows: list[BenchRow] = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)

    def to_csv(self, timing: bool = True) -> str:
        buf = io.StringIO()
        names = [f for f in BenchRow.__dataclass_fields__ if timing or f not in TIMING]
        writer = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            d = asdict(row)
            writer.writerow({k: (f"{d[k]:.4f}" if isinstance(d[k], float) else d[k]) for k in names})
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"model": self.model, "timeLimit": self.time_limit,
                "rows": [asdict(r) for r in self.rows], "aggregate": self.aggregate}


def _timed(spec: DecompositionSpec):
    t0 = time.perf_counter()
    sol = decompose(spec)
    return sol, time.perf_counter() - t0


def run_instance(inst: Instance, model: str, time_limit: float = 300.0,
                 eprime_policy: str | None = None, backend: str | None = None) -> BenchRow:
    plain, t_plain = _timed(instance_spec(inst, model, False, time_limit, eprime_policy, backend))
    safe, t_safe = _timed(instance_spec(inst, model, True, time_limit, eprime_policy, backend))
    ok_plain = plain.status == Status.OPTIMAL
    ok_safe = safe.status == Status.OPTIMAL
    # unsolved runs count as the full limit
    t_plain = t_plain if ok_plain or plain.status == Status.INFEASIBLE else max(t_plain, time_limit)
    t_safe = t_safe if ok_safe or safe.status == Status.INFEASIBLE else max(t_safe, time_limit)
    equal = None
    if (ok_plain or plain.status == Status.INFEASIBLE) and (ok_safe or safe.status == Status.INFEASIBLE):
        equal = (plain.status, plain.objective, plain.k if model == "fd" else None) == \
                (safe.status, safe.objective, safe.k if model == "fd" else None)
    st = safe.stats
    return BenchRow(
        name=inst.name, n=inst.graph.n, m=inst.graph.m,
        prepSeconds=st.get("prepSeconds", 0.0),
        solveSecondsNoSafety=t_plain, solveSecondsSafety=t_safe,
        solvedNoSafety=ok_plain, solvedSafety=ok_safe,
        fixedOne=st.get("fixedOne", 0), fixedZero=st.get("fixedZero", 0), antichain=st.get("antichain", 0),
        kNoSafety=plain.k, kSafety=safe.k,
        objectiveNoSafety=plain.objective, objectiveSafety=safe.objective, objectiveEqual=equal,
    )


def aggregate(rows: list[BenchRow]) -> dict:
    if not rows:
        return {"instances": 0}
    plain = [r.solveSecondsNoSafety for r in rows]
    safe = [r.solveSecondsSafety for r in rows]
    ratios = [p / s for p, s in zip(plain, safe) if s > 0]
    compared = [r.objectiveEqual for r in rows if r.objectiveEqual is not None]
    return {
        "instances": len(rows),
        "solvedNoSafety": sum(r.solvedNoSafety for r in rows),
        "solvedSafety": sum(r.solvedSafety for r in rows),
        "meanSpeedup": statistics.fmean(ratios) if ratios else None,
        "totalTimeRatio": sum(plain) / sum(safe) if sum(safe) > 0 else None,
        "medianSecondsNoSafety": statistics.median(plain),
        "medianSecondsSafety": statistics.median(safe),
        "maxPrepSeconds": max(r.prepSeconds for r in rows),
        "compared": len(compared),
        "objectivesEqual": all(compared),
    }


def run_benchmark(instances: list[Instance], model: str, eprime_policy: str | None = None,
                  time_limit: float = 300.0, parallel: int = 1, backend: str | None = None,
                  progress=None) -> BenchReport:
    def one(inst):
        row = run_instance(inst, model, time_limit, eprime_policy, backend)
        if progress:
            progress(row)
        return row

    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            rows = list(pool.map(one, instances))
    else:
        rows = [one(inst) for inst in instances]
    return BenchReport(model, time_limit, rows, aggregate(rows))
