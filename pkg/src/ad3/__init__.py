"""LP-MAP inference on factor graphs by alternating-directions dual decomposition."""
from .graph import (FactorGraph, MapResult, binarize, brute_force_map, evaluate, parse_graph,
                    serialize_graph)
from .solvers import (SolverConfig, SolveReport, branch_and_bound, dual_objective, run_ad3,
                      run_subgradient, solve, write_trace_csv)

__all__ = [
    "FactorGraph", "MapResult", "SolverConfig", "SolveReport", "binarize", "branch_and_bound",
    "brute_force_map", "dual_objective", "evaluate", "parse_graph", "run_ad3", "run_subgradient",
    "serialize_graph", "solve", "write_trace_csv",
]
