"""Command-line entry point.

Exit codes: 0 success, 1 infeasible, 2 timeout, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import FlowWalksError
from .graph import format_edge, read_edge_list, read_graph, read_subsets

EXIT_OK, EXIT_INFEASIBLE, EXIT_TIMEOUT, EXIT_INPUT = 0, 1, 2, 3

log = logging.getLogger("flowwalks")


def _dump(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_safety(args) -> int:
    from .dominators import build_s_dominator_tree, build_t_dominator_tree
    from .safety import edge_safe_sequences, vertex_safe_sequences

    graph = read_graph(args.graph)
    if args.emit_dot:
        prefix = Path(args.emit_dot)
        prefix.with_name(prefix.name + ".s.dot").write_text(build_s_dominator_tree(graph).to_dot())
        prefix.with_name(prefix.name + ".t.dot").write_text(build_t_dominator_tree(graph).to_dot())
    if args.vertices:
        C = None
        if args.C:
            C = [line.strip() for line in Path(args.C).read_text().splitlines() if line.strip()]
        seqs = vertex_safe_sequences(graph, C)
        if args.json:
            _dump({"sequences": [list(s) for s in seqs]})
        else:
            for s in seqs:
                print(" ".join(s))
        return EXIT_OK
    C = read_edge_list(args.C) if args.C else list(graph.edges)
    seqs = edge_safe_sequences(graph, C)
    if args.json:
        _dump({"sequences": [{"anchor": format_edge(s.anchor), "edges": [format_edge(e) for e in s.edges]}
                             for s in seqs]})
    else:
        for s in seqs:
            print(",".join(format_edge(e) for e in s.edges))
    return EXIT_OK


def cmd_antichain(args) -> int:
    from .safety import edge_safe_sequences, longest_covering_sequence
    from .widths import max_weight_antichain

    graph = read_graph(args.graph)
    if args.weights == "unit":
        weights = dict.fromkeys(graph.edges, 1)
    elif args.weights == "flow":
        weights = dict(graph.weight)
    else:
        weights, _ = longest_covering_sequence(edge_safe_sequences(graph, graph.edges), graph.edges)
    ac = max_weight_antichain(graph, weights, lexicographic=args.lexicographic)
    if args.json:
        _dump({"edges": [format_edge(e) for e in ac.edges], "totalWeight": ac.total_weight})
    else:
        for e in ac.edges:
            print(format_edge(e), weights.get(e, 0))
        print("total", ac.total_weight)
    return EXIT_OK


def _parse_k(text: str):
    if text == "auto":
        return "auto"
    k = int(text)
    if k < 1:
        raise argparse.ArgumentTypeError("k must be positive")
    return k


def cmd_decompose(args) -> int:
    from .bench import percentile_eprime
    from .models import DecompositionSpec, decompose, validate_solution
    from .solver import Status

    graph = read_graph(args.graph)
    aux = frozenset(read_edge_list(args.aux)) if args.aux else frozenset()
    core = [e for e in graph.edges if e not in aux]
    if args.eprime is None:
        eprime = core
    elif args.eprime.startswith("percentile:"):
        eprime = percentile_eprime(graph, core, float(args.eprime.split(":", 1)[1]))
    else:
        eprime = read_edge_list(args.eprime)
    subsets = read_subsets(args.subsets) if args.subsets else ()
    spec = DecompositionSpec(
        graph, eprime=eprime, subsets=subsets, model=args.model, k=args.k, safety=not args.no_safety,
        time_limit=args.time_limit, gap=args.gap, traversal_cap=args.traversal_cap,
        strict_positive_weights=args.strict_positive_weights, keep_zero_weights=args.keep_zero_weights,
        aux_edges=aux, backend=args.backend,
    )
    sol = decompose(spec)
    if sol.stats.get("boundHits"):
        print(f"warning: {sol.stats['boundHits']} traversal variables hit the cap "
              f"{args.traversal_cap}; consider --traversal-cap", file=sys.stderr)
    out = sol.to_json()
    if sol.walks and args.validate:
        out["validation"] = {k: v for k, v in validate_solution(spec, sol).items()
                             if k in ("ok", "problems", "objective")}
    if args.json:
        _dump(out)
    else:
        print(f"status {sol.status}  k {sol.k}  objective {sol.objective}")
        for i, walk in enumerate(sol.walks):
            slack = f"  slack {sol.slacks[i]}" if sol.slacks else ""
            print(f"{sol.weights[i]}{slack}\t{' '.join(walk)}")
    if sol.status == Status.INFEASIBLE:
        return EXIT_INFEASIBLE
    if sol.status in (Status.TIMED_OUT, Status.FEASIBLE):
        return EXIT_TIMEOUT
    return EXIT_OK


def _generator_config(args):
    from .generate import GeneratorConfig

    return GeneratorConfig(
        genome_count=args.genomes, genome_length=args.genome_length, window_length=args.window,
        kmer_size=args.kmer, mutation_rate=args.mutation_rate, noise=args.noise,
        reads_per_window=args.reads, read_length=args.read_length, seed=args.seed,
    )


def cmd_generate(args) -> int:
    from .generate import generate_corpus, write_corpus

    insts = generate_corpus(_generator_config(args), args.count, max_edges=args.max_edges)
    write_corpus(insts, args.out)
    print(f"wrote {len(insts)} instances to {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import run_benchmark
    from .generate import generate_corpus, read_corpus

    if args.corpus:
        insts = read_corpus(args.corpus)
    else:
        insts = generate_corpus(_generator_config(args), args.count, max_edges=args.max_edges)
    if not insts:
        print("error: no instances", file=sys.stderr)
        return EXIT_INPUT

    def progress(row):
        print(f"{row.name}\tn={row.n}\tm={row.m}\tplain={row.solveSecondsNoSafety:.3f}s\t"
              f"safe={row.solveSecondsSafety:.3f}s\tequal={row.objectiveEqual}", file=sys.stderr)

    report = run_benchmark(insts, args.model, args.eprime, args.time_limit, args.parallel,
                           args.backend, progress=progress)
    if args.out:
        base = Path(args.out)
        base.parent.mkdir(parents=True, exist_ok=True)
        base.with_suffix(".csv").write_text(report.to_csv(), encoding="utf-8", newline="\n")
        base.with_suffix(".json").write_text(json.dumps(report.to_json(), indent=1) + "\n", encoding="utf-8")
    _dump(report.aggregate)
    return EXIT_OK


def _add_generator_flags(p):
    p.add_argument("--genomes", type=int, default=5)
    p.add_argument("--genome-length", type=int, default=2000)
    p.add_argument("--window", type=int, default=1000)
    p.add_argument("--kmer", type=int, default=15)
    p.add_argument("--mutation-rate", type=float, default=0.002)
    p.add_argument("--noise", choices=("none", "poisson"), default="poisson")
    p.add_argument("--reads", type=int, default=5)
    p.add_argument("--read-length", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=20, help="number of cyclic instances to keep")
    p.add_argument("--max-edges", type=int, default=None)


def _add_solver_flags(p):
    p.add_argument("--time-limit", type=float, default=300.0)
    p.add_argument("--gap", type=float, default=1e-4)
    p.add_argument("--backend", default=None, help="highs or exhaustive (default: $FLOWWALKS_SOLVER or highs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flowwalks", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("safety", help="maximal safe sequences")
    p.add_argument("graph")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--edges", action="store_true", help="edge sequences (default)")
    mode.add_argument("--vertices", action="store_true")
    p.add_argument("--C", help="file with the elements that must be covered (default: all)")
    p.add_argument("--json", action="store_true")
    p.add_argument("--emit-dot", metavar="PREFIX", help="write PREFIX.s.dot and PREFIX.t.dot")
    p.set_defaults(func=cmd_safety)

    p = sub.add_parser("antichain", help="maximum-weight edge antichain")
    p.add_argument("graph")
    p.add_argument("--weights", choices=("unit", "flow", "from-safety"), default="flow")
    p.add_argument("--lexicographic", action="store_true", help="break ties towards the smallest edge set")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_antichain)

    p = sub.add_parser("decompose", help="solve FD, LAE or MPE")
    p.add_argument("graph")
    p.add_argument("--model", choices=("fd", "lae", "mpe"), default="fd")
    p.add_argument("--k", type=_parse_k, default="auto")
    p.add_argument("--no-safety", action="store_true")
    p.add_argument("--subsets", help="one subset per line, comma-separated u>v tokens")
    p.add_argument("--eprime", help="edge file or percentile:P (default: all non-auxiliary edges)")
    p.add_argument("--aux", help="edge file listing wrapper edges to keep out of E'")
    p.add_argument("--traversal-cap", type=int, default=8)
    p.add_argument("--strict-positive-weights", action="store_true")
    p.add_argument("--keep-zero-weights", action="store_true")
    p.add_argument("--validate", action="store_true", help="re-check the solution from the walks")
    p.add_argument("--json", action="store_true")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("generate", help="write a synthetic corpus")
    p.add_argument("--out", required=True)
    _add_generator_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="compare solves with and without safety")
    p.add_argument("--corpus", help="directory written by 'generate' (default: generate in memory)")
    p.add_argument("--model", choices=("fd", "lae", "mpe"), default="fd")
    p.add_argument("--eprime", default=None, help="all or percentile:P")
    p.add_argument("--out", help="report path prefix (.csv and .json are written)")
    p.add_argument("--parallel", type=int, default=1)
    _add_generator_flags(p)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FlowWalksError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
