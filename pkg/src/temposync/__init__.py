"""Pinning-control synchronisation analysis for temporal networks."""

from .graph import (
    CycleDetected,
    DuplicateEdge,
    FusedGraph,
    GraphError,
    NetworkFormatError,
    NodeOutOfRange,
    SelfLoop,
    Snapshot,
    TemporalNetwork,
    build_fused,
    vdp5_network,
    load_network,
    propagation_depth,
    roots,
    save_network,
    validate_snapshot,
)
from .greedy import BudgetTooLarge, GreedyResult, brute_force_max_sync, greedy_max_sync, reproduce_study
from .pinning import build_lp, f_cost, min_pin_set, solve_lp, verify_integrality
from .propagation import SyncState, check_sufficient, propagate

__version__ = "0.1.0"

__all__ = [
    "BudgetTooLarge",
    "CycleDetected",
    "DuplicateEdge",
    "FusedGraph",
    "GraphError",
    "GreedyResult",
    "NetworkFormatError",
    "NodeOutOfRange",
    "SelfLoop",
    "Snapshot",
    "SyncState",
    "TemporalNetwork",
    "brute_force_max_sync",
    "build_fused",
    "build_lp",
    "check_sufficient",
    "f_cost",
    "vdp5_network",
    "greedy_max_sync",
    "load_network",
    "min_pin_set",
    "propagate",
    "propagation_depth",
    "reproduce_study",
    "roots",
    "save_network",
    "solve_lp",
    "validate_snapshot",
    "verify_integrality",
]
