"""Decomposition of edge-weighted directed graphs into weighted s-t walks,
with dominator-based safe-sequence preprocessing for the MILP models."""

from .graph import (
    Condensation,
    Graph,
    ReachabilityIndex,
    build_graph,
    compact_unitigs,
    condense,
    midpoint_transform,
    normalize_sources_sinks,
    reachability,
)

__version__ = "0.1.0"
