"""Identification of group probabilities for a fixed weight set.

For every weight vector the shortest paths of all O-D pairs are routed to build
one column of the flow matrix; the probabilities then come from a least-squares
fit of the measured rows over the probability simplex.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass

import numpy as np

from .flow_model import FlowMatrix, aggregate_flows
from .network import NetworkError, RoutingInstance, combine_costs, od_arrays, validate
from .qp import (DEFAULT_MAX_ITERS, DEFAULT_TOL, SimplexLSProblem,
                 SimplexLSSolution, objective_value, solve_simplex_ls)
from .shortest_path import flow_columns, group_by_origin
from .validation import check_weight_set

WEIGHT_QUANTUM = 1e-12


class InvalidInstanceError(NetworkError):
    pass


@dataclass(frozen=True, eq=False)
class IdentificationResult:
    weights: np.ndarray
    alpha: np.ndarray
    g_value: float
    flow_matrix: FlowMatrix
    solution: SimplexLSSolution | None = None

    def support(self) -> np.ndarray:
        return np.flatnonzero(self.alpha > 0)

    def predicted_flows(self) -> np.ndarray:
        return aggregate_flows(self.flow_matrix, self.alpha)


def weight_key(p) -> tuple[int, ...]:
    """Hashable key of a weight vector, quantized to ``WEIGHT_QUANTUM``."""
    return tuple(int(v) for v in np.rint(np.asarray(p, dtype=np.float64) / WEIGHT_QUANTUM))


def require_valid(instance: RoutingInstance) -> None:
    report = validate(instance.network)
    if not report.ok:
        raise InvalidInstanceError("; ".join(report.problems))


@dataclass
class Counters:
    sp_solves: int = 0
    dijkstra_runs: int = 0
    qp_solves: int = 0
    cache_hits: int = 0
    time_sp: float = 0.0
    time_qp: float = 0.0


class FlowColumnCache:
    """Per-weight flow-matrix columns for one instance, with SP/QP timing.

    Columns depend only on a single weight vector, so identification calls on
    overlapping weight sets reuse them. Safe to share between threads.
    """

    def __init__(self, instance: RoutingInstance, check: bool = True,
                 tol: float = DEFAULT_TOL, max_iters: int = DEFAULT_MAX_ITERS):
        if check:
            require_valid(instance)
        self.instance = instance
        self.tol = tol
        self.max_iters = max_iters
        self._grouped = group_by_origin(*od_arrays(instance.od_pairs))
        self._columns: dict[tuple[int, ...], np.ndarray] = {}
        self._lock = threading.Lock()
        self.counters = Counters()
        self._stats_lock = threading.Lock()

    def __len__(self):
        return len(self._columns)

    def flow_matrix(self, weights) -> FlowMatrix:
        weights = check_weight_set(weights, self.instance.network.criteria_count)
        keys = [weight_key(p) for p in weights]
        with self._lock:
            missing = []
            seen = set()
            for k, p in zip(keys, weights):
                if k not in self._columns and k not in seen:
                    missing.append((k, p))
                    seen.add(k)
        if missing:
            net = self.instance.network
            block = np.asfortranarray(combine_costs(net.costs, np.array([p for _, p in missing])))
            start = time.perf_counter()
            cols = flow_columns(net, block, self._grouped)
            elapsed = time.perf_counter() - start
            for col in cols.T:
                col.setflags(write=False)
            with self._lock:
                for (k, _), col in zip(missing, cols.T):
                    self._columns.setdefault(k, col)
            with self._stats_lock:
                self.counters.time_sp += elapsed
                self.counters.sp_solves += len(missing) * len(self.instance.od_pairs)
                self.counters.dijkstra_runs += len(missing) * len(self._grouped[1])
        with self._lock:
            values = np.column_stack([self._columns[k] for k in keys])
        with self._stats_lock:
            self.counters.cache_hits += len(keys) - len(missing)
        return FlowMatrix(values, weights)

    def identify(self, weights, alpha0=None) -> IdentificationResult:
        matrix = self.flow_matrix(weights)
        measured = self.instance.measured
        problem = SimplexLSProblem(matrix.rows(measured.arc_indices), measured.values)
        start = time.perf_counter()
        sol = solve_simplex_ls(problem, tol=self.tol, max_iters=self.max_iters, alpha0=alpha0)
        elapsed = time.perf_counter() - start
        with self._stats_lock:
            self.counters.time_qp += elapsed
            self.counters.qp_solves += 1
        return IdentificationResult(matrix.weights, sol.alpha, sol.objective, matrix, sol)

    def g(self, weights) -> float:
        return self.identify(weights).g_value


def identification(instance: RoutingInstance, weights, tol: float = DEFAULT_TOL,
                   max_iters: int = DEFAULT_MAX_ITERS, alpha0=None) -> IdentificationResult:
    """Probabilities ``alpha_P`` and misfit ``g(P)`` for a fixed weight set ``P``.

    Step 1 routes every O-D pair on its shortest path under each weight, step 2
    sums those flows into the flow matrix and step 3 fits the measured rows over
    the probability simplex.
    """
    cache = FlowColumnCache(instance, tol=tol, max_iters=max_iters)
    return cache.identify(weights, alpha0=alpha0)


def memoized_identification(instance: RoutingInstance, weights,
                            cache: FlowColumnCache | None = None) -> IdentificationResult:
    if cache is None:
        cache = FlowColumnCache(instance)
    elif cache.instance is not instance:
        raise ValueError("cache belongs to a different instance")
    return cache.identify(weights)


def g_value(instance: RoutingInstance, result: IdentificationResult) -> float:
    """Recompute ``||M_A alpha - x||^2`` for a result, from scratch."""
    measured = instance.measured
    problem = SimplexLSProblem(result.flow_matrix.rows(measured.arc_indices), measured.values)
    return objective_value(problem, result.alpha)
