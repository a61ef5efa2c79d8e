"""Identify route-choice weight groups from partial arc-flow counts."""

__version__ = "0.1.0"

from .estimators import RouteChoiceSearch, WeightSetIdentifier
from .flow_model import FlowMatrix, aggregate_flows, build_flow_matrix, conservation_check
from .identification import (FlowColumnCache, IdentificationResult, identification,
                             memoized_identification)
from .network import (MeasuredFlows, MultiCostNetwork, ODPair, RoutingInstance,
                      combined_arc_cost, normalize_costs, validate)
from .qp import SimplexLSProblem, project_onto_simplex, solve_simplex_ls
from .search import SearchConfig, SearchResult, search
from .shortest_path import Path, batch_shortest_paths, shortest_path
from .synthgen import GeneratorParams, GroundTruth, generate_instance, recovery_distance

__all__ = [
    "FlowColumnCache", "FlowMatrix", "GeneratorParams", "GroundTruth", "IdentificationResult",
    "MeasuredFlows", "MultiCostNetwork", "ODPair", "Path", "RouteChoiceSearch", "RoutingInstance",
    "SearchConfig", "SearchResult", "SimplexLSProblem", "WeightSetIdentifier", "aggregate_flows",
    "batch_shortest_paths", "build_flow_matrix", "combined_arc_cost", "conservation_check",
    "generate_instance", "identification", "memoized_identification", "normalize_costs",
    "project_onto_simplex", "recovery_distance", "search", "shortest_path", "solve_simplex_ls",
    "validate",
]
