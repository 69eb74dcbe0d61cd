"""Synthetic multi-strain instances: windowed de Bruijn graphs with known
flow decompositions, optional Poisson noise and read-derived subset constraints."""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import WindowTooShort
from .graph import (
    Edge,
    Graph,
    build_graph,
    compact_unitigs,
    condense,
    format_edge,
    format_graph,
    normalize_sources_sinks,
    parse_edge_token,
    parse_graph,
)

ALPHABET = "ACGT"


@dataclass
class GeneratorConfig:
    genome_count: int = 5
    genome_length: int = 2000
    window_length: int = 1000
    kmer_size: int = 15
    mutation_rate: float = 0.002
    repeats_per_window: int = 1
    abundance_mean: float = 1.0      # of the lognormal itself
    abundance_variance: float = 1.0
    abundance_scale: int = 10
    noise: str = "none"              # "none" or "poisson"
    reads_per_window: int = 5
    read_length: int = 200
    keep_acyclic: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.kmer_size < 2:
            raise ValueError("k-mer size must be at least 2")
        if self.window_length < self.kmer_size:
            raise WindowTooShort(f"window length {self.window_length} is shorter than k={self.kmer_size}")
        if self.genome_count < 1 or self.reads_per_window < 0 or self.genome_length < 1:
            raise ValueError("counts must be positive")
        if self.noise not in ("none", "poisson"):
            raise ValueError("noise must be 'none' or 'poisson'")


@dataclass
class Instance:
    name: str
    graph: Graph                      # perfect weights
    aux_edges: frozenset
    subsets: list[tuple[Edge, ...]]
    truth_walks: list[tuple[str, ...]]
    truth_weights: list[int]
    noisy: Graph | None = None
    window: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def core_edges(self) -> list[Edge]:
        """Edges carrying k-mer flow (everything except the wrapper edges)."""
        return [e for e in self.graph.edges if e not in self.aux_edges]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "window": self.window,
            "aux": sorted(format_edge(e) for e in self.aux_edges),
            "subsets": [[format_edge(e) for e in S] for S in self.subsets],
            "truth": [{"walk": list(w), "weight": c} for w, c in zip(self.truth_walks, self.truth_weights)],
            "meta": self.meta,
        }


def random_genome(rng: np.random.Generator, length: int) -> str:
    return "".join(ALPHABET[i] for i in rng.integers(0, 4, size=length))


def inject_repeat(rng: np.random.Generator, seq: str, start: int, end: int, length: int) -> str:
    """Copy a random ``length`` substring of seq[start:end] to another spot in it."""
    span = end - start
    if span < 2 * length:
        return seq
    src = int(rng.integers(start, end - length + 1))
    dst = int(rng.integers(start, end - length + 1))
    tries = 0
    while abs(dst - src) < length and tries < 20:
        dst = int(rng.integers(start, end - length + 1))
        tries += 1
    if abs(dst - src) < length:
        return seq
    piece = seq[src:src + length]
    return seq[:dst] + piece + seq[dst + length:]


def mutate(rng: np.random.Generator, seq: str, rate: float) -> str:
    """Point substitutions only, so strain windows stay aligned."""
    chars = list(seq)
    for pos in np.flatnonzero(rng.random(len(chars)) < rate):
        old = chars[pos]
        chars[pos] = rng.choice([c for c in ALPHABET if c != old])
    return "".join(chars)


def abundances(rng: np.random.Generator, count: int, cfg: GeneratorConfig) -> list[int]:
    # parameters of the underlying normal giving the requested mean and variance
    m, v = cfg.abundance_mean, cfg.abundance_variance
    sigma2 = math.log(1 + v / (m * m))
    draws = rng.lognormal(math.log(m) - sigma2 / 2, math.sqrt(sigma2), size=count)
    return [max(1, math.ceil(x * cfg.abundance_scale)) for x in draws]


def synthetic_genomes(cfg: GeneratorConfig, rng: np.random.Generator) -> list[str]:
    ancestor = random_genome(rng, cfg.genome_length)
    rep = 3 * cfg.kmer_size
    for start in range(0, cfg.genome_length, cfg.window_length):
        end = min(start + cfg.window_length, cfg.genome_length)
        for _ in range(cfg.repeats_per_window):
            ancestor = inject_repeat(rng, ancestor, start, end, rep)
    return [mutate(rng, ancestor, cfg.mutation_rate) for _ in range(cfg.genome_count)]


def kmer_walk(seq: str, k: int) -> list[str]:
    """The (k-1)-mer vertices a sequence visits."""
    return [seq[i:i + k - 1] for i in range(len(seq) - k + 2)]


def de_bruijn(windows: list[str], weights: list[int], k: int):
    flow: dict[Edge, int] = defaultdict(int)
    walks = []
    for seq, w in zip(windows, weights):
        walk = kmer_walk(seq, k)
        walks.append(walk)
        for u, v in zip(walk, walk[1:]):
            flow[(u, v)] += w
    return dict(flow), walks


def _short_names(graph: Graph) -> dict[str, str]:
    names = {graph.source: "s", graph.sink: "t"}
    i = 0
    for v in graph.vertices:
        if v not in names:
            names[v] = f"v{i}"
            i += 1
    return names


def build_window_instance(windows: list[str], weights: list[int], k: int, name: str,
                          rng: np.random.Generator, cfg: GeneratorConfig, window: int = 0) -> Instance | None:
    windows_ok = [(w, a) for w, a in zip(windows, weights) if len(w) >= k]
    if not windows_ok:
        raise WindowTooShort(f"every window of {name} is shorter than k={k}")
    windows, weights = map(list, zip(*windows_ok))
    flow, walks = de_bruijn(windows, weights, k)
    starts = [w[0] for w in walks]
    ends = [w[-1] for w in walks]
    g0, aux = normalize_sources_sinks(flow, starts, ends, source="^", sink="$")
    g1, expansion = compact_unitigs(g0, protected=set(starts) | set(ends))
    if not g1.m or (not cfg.keep_acyclic and not any(condense(g1).nontrivial)):
        return None
    rename = _short_names(g1)
    edges = [(rename[u], rename[v], g1.weight[(u, v)]) for u, v in g1.edges]
    graph = build_graph(edges, "s", "t", vertices=[rename[v] for v in g1.vertices])
    aux_new = frozenset((rename[u], rename[v]) for u, v in aux)
    # original de Bruijn edge -> compacted edge
    owner: dict[Edge, Edge] = {}
    for (u, v), path in expansion.items():
        for a, b in zip(path, path[1:]):
            owner[(a, b)] = (rename[u], rename[v])
    alive = set(g1.vertices)
    truth_walks = []
    for walk in walks:
        full = ["^"] + walk + ["$"]
        truth_walks.append(tuple(rename[v] for v in full if v in alive))
    subsets = []
    for seq in windows:
        for _ in range(cfg.reads_per_window):
            start = int(rng.integers(0, len(seq)))
            read = seq[start:start + cfg.read_length]
            if len(read) < k:
                continue
            path = kmer_walk(read, k)
            subset = tuple(dict.fromkeys(owner[(a, b)] for a, b in zip(path, path[1:])))
            subsets.append(subset)
    noisy = None
    if cfg.noise == "poisson":
        noisy_edges = []
        for u, v in graph.edges:
            w = graph.weight[(u, v)]
            if (u, v) not in aux_new:
                w = int(rng.poisson(w))
            noisy_edges.append((u, v, w))
        noisy = build_graph(noisy_edges, "s", "t", vertices=graph.vertices)
    meta = {"genomes": len(windows), "k": k}
    return Instance(name, graph, aux_new, subsets, truth_walks, list(weights), noisy, window, meta)


def generate_instances(cfg: GeneratorConfig, sources: list[str] | None = None,
                       weights: list[int] | None = None, prefix: str = "inst") -> list[Instance]:
    """One instance per window position; acyclic windows are dropped unless
    ``keep_acyclic`` is set."""
    rng = np.random.default_rng(cfg.seed)
    if sources is None:
        sources = synthetic_genomes(cfg, rng)
    if any(len(s) < cfg.kmer_size for s in sources):
        raise WindowTooShort(f"a source sequence is shorter than k={cfg.kmer_size}")
    if weights is None:
        weights = abundances(rng, len(sources), cfg)
    longest = max(len(s) for s in sources)
    out = []
    for w, start in enumerate(range(0, longest, cfg.window_length)):
        chunks, ws = [], []
        for seq, a in zip(sources, weights):
            chunk = seq[start:start + cfg.window_length]
            if len(chunk) >= cfg.kmer_size:
                chunks.append(chunk)
                ws.append(a)
        if not chunks:
            continue
        inst = build_window_instance(chunks, ws, cfg.kmer_size, f"{prefix}_w{w}", rng, cfg, window=w)
        if inst is not None:
            out.append(inst)
    return out


def generate_corpus(cfg: GeneratorConfig, count: int, max_edges: int | None = None,
                    max_tries: int | None = None) -> list[Instance]:
    """Keep drawing genome sets (seed, seed+1, ...) until ``count`` instances exist."""
    out: list[Instance] = []
    seed = cfg.seed
    tries = 0
    limit = max_tries or 50 * count
    while len(out) < count and tries < limit:
        sub = GeneratorConfig(**{**asdict(cfg), "seed": seed})
        for inst in generate_instances(sub, prefix=f"g{seed}"):
            if max_edges is None or inst.graph.m <= max_edges:
                out.append(inst)
                if len(out) == count:
                    break
        seed += 1
        tries += 1
    return out


# --------------------------------------------------------------------------
# corpus files


def write_corpus(instances: list[Instance], directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for inst in instances:
        base = directory / inst.name
        base.with_suffix(".graph").write_text(format_graph(inst.graph), encoding="utf-8", newline="\n")
        if inst.noisy is not None:
            (directory / f"{inst.name}.noisy.graph").write_text(format_graph(inst.noisy), encoding="utf-8",
                                                              newline="\n")
        lines = [",".join(format_edge(e) for e in S) for S in inst.subsets]
        base.with_suffix(".subsets").write_text("".join(line + "\n" for line in lines), encoding="utf-8",
                                               newline="\n")
        base.with_suffix(".json").write_text(json.dumps(inst.to_json(), indent=1, sort_keys=True) + "\n",
                                            encoding="utf-8", newline="\n")
        paths.append(base.with_suffix(".json"))
    return paths


def read_corpus(directory) -> list[Instance]:
    directory = Path(directory)
    out = []
    for meta_path in sorted(directory.glob("*.json")):
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        name = meta["name"]
        graph = parse_graph((directory / f"{name}.graph").read_text(encoding="utf-8"),
                            path=str(directory / f"{name}.graph"))
        noisy_path = directory / f"{name}.noisy.graph"
        noisy = parse_graph(noisy_path.read_text(encoding="utf-8"), str(noisy_path)) if noisy_path.exists() else None
        out.append(Instance(
            name=name, graph=graph,
            aux_edges=frozenset(parse_edge_token(t) for t in meta["aux"]),
            subsets=[tuple(parse_edge_token(t) for t in S) for S in meta["subsets"]],
            truth_walks=[tuple(r["walk"]) for r in meta["truth"]],
            truth_weights=[r["weight"] for r in meta["truth"]],
            noisy=noisy, window=meta.get("window", 0), meta=meta.get("meta", {}),
        ))
    return out
