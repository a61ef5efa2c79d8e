"""Synthetic grid instances with a known weight set and exact measured flows.

Random numbers come from NumPy's ``PCG64`` bit generator seeded with the
instance seed. Draws happen in a fixed order: arc costs (arc-major, one row of
``r`` integers per arc), then the weight set, then the probabilities, then the
O-D pairs, then the measured arcs.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist, pdist

from .flow_model import aggregate_flows, build_flow_matrix
from .network import (MeasuredFlows, MultiCostNetwork, ODPair, RoutingInstance,
                      normalize_costs)

MAX_ATTEMPTS = 10**6


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorParams:
    grid_side: int = 40
    num_od: int = 1000
    demand: int = 10
    r: int = 3
    q: int = 5
    cost_low: int = 5
    cost_high: int = 20
    measured_fraction: float = 0.4
    min_weight_distance: float = 0.05
    min_alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.grid_side < 2:
            raise ValueError("grid_side must be at least 2")
        if self.q < 1 or self.r < 1:
            raise ValueError("q and r must be positive")
        if not 0 < self.measured_fraction <= 1:
            raise ValueError("measured_fraction must lie in (0, 1]")
        if self.num_od < 1 or self.demand < 1:
            raise ValueError("num_od and demand must be positive")
        n = self.grid_side ** 2
        if self.num_od > n * (n - 1):
            raise ValueError("more O-D pairs requested than distinct node pairs exist")
        if not 0 < self.cost_low <= self.cost_high:
            raise ValueError("cost range must be positive and non-empty")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    weights: np.ndarray
    alpha: np.ndarray
    seed: int
    full_flows: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "alpha": self.alpha.tolist(),
                "seed": self.seed}


def grid_arcs(side: int) -> np.ndarray:
    """Bidirected lattice arcs; node ``(row, col)`` has index ``row * side + col``.

    Horizontal edges come first (row-major), then vertical ones; each edge gives
    the forward arc followed by the reverse arc.
    """
    edges = []
    for row in range(side):
        for col in range(side - 1):
            edges.append((row * side + col, row * side + col + 1))
    for row in range(side - 1):
        for col in range(side):
            edges.append((row * side + col, (row + 1) * side + col))
    arcs = []
    for u, v in edges:
        arcs.append((u, v))
        arcs.append((v, u))
    return np.array(arcs, dtype=np.int64)


def _sample_weights(rng, q, r, min_dist):
    for _ in range(MAX_ATTEMPTS):
        w = rng.dirichlet(np.ones(r), size=q)
        if q == 1 or pdist(w).min() >= min_dist:
            return w
    raise GenerationError("could not draw weights with the requested separation")


def _sample_alpha(rng, q, min_alpha):
    if q == 1:
        return np.ones(1)
    for _ in range(MAX_ATTEMPTS):
        a = rng.dirichlet(np.ones(q))
        if a.min() >= min_alpha:
            return a
    raise GenerationError("could not draw probabilities above the requested floor")


def _sample_od(rng, n, k, demand):
    pairs, seen = [], set()
    attempts = 0
    while len(pairs) < k:
        attempts += 1
        if attempts > MAX_ATTEMPTS:
            raise GenerationError("could not draw enough distinct O-D pairs")
        o, d = (int(v) for v in rng.integers(0, n, size=2))
        if o == d or (o, d) in seen:
            continue
        seen.add((o, d))
        pairs.append(ODPair(o, d, demand))
    return pairs


def generate_instance(params: GeneratorParams | None = None, **overrides):
    """Grid instance and its ground truth; fully determined by ``params.seed``.

    Returns ``(instance, truth)`` where ``truth.full_flows`` holds the exact flows
    on every arc and ``instance.measured`` the subset observed.
    """
    params = params or GeneratorParams()
    if overrides:
        params = GeneratorParams(**{**params.to_dict(), **overrides})
    rng = np.random.Generator(np.random.PCG64(params.seed))
    side = params.grid_side
    arcs = grid_arcs(side)
    m = arcs.shape[0]
    costs = rng.integers(params.cost_low, params.cost_high + 1, size=(m, params.r))
    network = normalize_costs(
        MultiCostNetwork(side * side, arcs[:, 0], arcs[:, 1], costs.astype(np.float64))
    )
    weights = _sample_weights(rng, params.q, params.r, params.min_weight_distance)
    alpha = _sample_alpha(rng, params.q, params.min_alpha)
    od_pairs = _sample_od(rng, side * side, params.num_od, params.demand)
    n_measured = max(1, int(round(params.measured_fraction * m)))
    measured_arcs = np.sort(rng.choice(m, size=n_measured, replace=False))

    flows = aggregate_flows(build_flow_matrix(network, weights, od_pairs), alpha)
    measured = MeasuredFlows(measured_arcs, flows[measured_arcs])
    instance = RoutingInstance(network, tuple(od_pairs), measured)
    return instance, GroundTruth(weights, alpha, params.seed, flows)


@dataclass(frozen=True, eq=False)
class RecoveryMatch:
    distances: np.ndarray
    true_index: np.ndarray
    estimated_index: np.ndarray
    unmatched_true: np.ndarray
    unmatched_estimated: np.ndarray


def match_weights(true_weights, estimated) -> RecoveryMatch:
    """Minimum-total-distance one-to-one matching of true and estimated weights."""
    true_weights = np.atleast_2d(np.asarray(true_weights, dtype=np.float64))
    estimated = np.atleast_2d(np.asarray(estimated, dtype=np.float64))
    if true_weights.shape[0] == 0 or estimated.shape[0] == 0:
        raise ValueError("both weight sets must be non-empty")
    dist = cdist(true_weights, estimated)
    rows, cols = linear_sum_assignment(dist)
    return RecoveryMatch(
        distances=dist[rows, cols],
        true_index=rows,
        estimated_index=cols,
        unmatched_true=np.setdiff1d(np.arange(true_weights.shape[0]), rows),
        unmatched_estimated=np.setdiff1d(np.arange(estimated.shape[0]), cols),
    )


def recovery_distance(true_weights, estimated) -> list[float]:
    """Euclidean distances of the optimally matched (true, estimated) pairs."""
    return match_weights(true_weights, estimated).distances.tolist()
