"""Shortest-path assignment flows and the arc-by-weight flow matrix."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .files import format_matrix_csv
from .network import MultiCostNetwork, NetworkError, ODPair, combine_costs, od_arrays
from .shortest_path import Path, flow_columns, group_by_origin

CONSERVATION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class FlowMatrix:
    """Dense ``|A| x q`` matrix; column ``l`` holds arc flows if every user adopted ``P[l]``."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        weights = np.atleast_2d(np.asarray(self.weights, dtype=np.float64))
        if values.ndim != 2 or values.shape[1] != weights.shape[0]:
            raise ValueError("flow matrix needs one column per weight vector")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    @property
    def shape(self):
        return self.values.shape

    def rows(self, arc_indices) -> np.ndarray:
        """Submatrix restricted to the given arcs (the measured rows)."""
        return self.values[np.asarray(arc_indices, dtype=np.int64)]

    def to_csv(self) -> str:
        q = self.values.shape[1]
        return format_matrix_csv(self.values, header=[f"w{ell}" for ell in range(q)])


def assignment_flows(path: Path, demand: int) -> dict[int, float]:
    """Sparse flow vector sending ``demand`` units along ``path``."""
    if demand < 1:
        raise ValueError("demand must be at least 1")
    return {a: float(demand) for a in path.arcs}


def build_flow_matrix(network: MultiCostNetwork, weights, od_pairs: Sequence[ODPair]) -> FlowMatrix:
    weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    if weights.shape[0] == 0:
        raise ValueError("weight set is empty")
    if weights.shape[1] != network.criteria_count:
        raise NetworkError("weight dimension does not match the number of criteria")
    grouped = group_by_origin(*od_arrays(od_pairs))
    combined = np.asfortranarray(combine_costs(network.costs, weights))
    return FlowMatrix(flow_columns(network, combined, grouped), weights)


def aggregate_flows(matrix, alpha) -> np.ndarray:
    """Total arc flows ``x = M alpha``."""
    values = matrix.values if isinstance(matrix, FlowMatrix) else np.asarray(matrix)
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.shape != (values.shape[1],):
        raise ValueError(
            f"alpha has shape {alpha.shape}, flow matrix has {values.shape[1]} columns"
        )
    return values @ alpha


def node_imbalance(network: MultiCostNetwork, flow, alpha: float,
                   od_pairs: Sequence[ODPair]) -> np.ndarray:
    """``N x - alpha * sum_w q^w`` at every node."""
    flow = np.asarray(flow, dtype=np.float64)
    n = network.node_count
    net = (np.bincount(network.tails, weights=flow, minlength=n)
           - np.bincount(network.heads, weights=flow, minlength=n))
    supply = np.zeros(n)
    for w in od_pairs:
        supply[w.origin] += w.demand
        supply[w.destination] -= w.demand
    return net - alpha * supply


def conservation_check(network: MultiCostNetwork, flow, alpha: float,
                       od_pairs: Sequence[ODPair], tol: float = CONSERVATION_TOL) -> bool:
    return bool(np.all(np.abs(node_imbalance(network, flow, alpha, od_pairs)) <= tol))
