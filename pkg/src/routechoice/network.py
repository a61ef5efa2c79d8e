"""Multi-criteria road network, O-D demand and measured arc flows.

Arcs are kept in a fixed, explicit order; every arc-indexed vector or matrix in
the package uses that order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

NORMALIZATION_RTOL = 1e-12


class NetworkError(ValueError):
    """Raised for malformed networks, demand sets or flow observations."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def combine_costs(costs: np.ndarray, weights) -> np.ndarray:
    """``costs @ weights.T`` summed criterion by criterion, left to right.

    A fixed summation order (no BLAS) makes combined costs bit-reproducible and
    identical to a naive per-arc sum.
    """
    w = np.asarray(weights, dtype=np.float64)
    cols = w[:, None] if w.ndim == 1 else w.T
    out = costs[:, 0, None] * cols[0]
    for i in range(1, costs.shape[1]):
        out = out + costs[:, i, None] * cols[i]
    return out[:, 0] if w.ndim == 1 else out


@dataclass(frozen=True, eq=False)
class MultiCostNetwork:
    """Directed graph with ``r`` basic costs on every arc.

    Parameters
    ----------
    node_count : int
        Number of nodes; nodes are ``0 .. node_count - 1``.
    tails, heads : array-like of int
        Arc endpoints, one entry per arc.
    costs : array-like of float, shape (n_arcs, r)
        Basic costs, row ``a`` holding ``(c_1, ..., c_r)`` for arc ``a``.
    """

    node_count: int
    tails: np.ndarray
    heads: np.ndarray
    costs: np.ndarray

    def __post_init__(self):
        tails = np.asarray(self.tails, dtype=np.int64).copy()
        heads = np.asarray(self.heads, dtype=np.int64).copy()
        costs = np.array(self.costs, dtype=np.float64, ndmin=2, copy=True)
        n = int(self.node_count)
        if n < 1:
            raise NetworkError("node_count must be positive")
        if tails.ndim != 1 or tails.shape != heads.shape:
            raise NetworkError("tails and heads must be 1-d and of equal length")
        if costs.shape[0] != tails.shape[0]:
            raise NetworkError(
                f"costs has {costs.shape[0]} rows but there are {tails.shape[0]} arcs"
            )
        if costs.shape[1] < 1:
            raise NetworkError("at least one basic cost is required")
        if tails.size and (
            tails.min() < 0 or heads.min() < 0 or tails.max() >= n or heads.max() >= n
        ):
            raise NetworkError("arc endpoint outside the node range")
        loops = np.flatnonzero(tails == heads)
        if loops.size:
            raise NetworkError(f"self-loop on arc {int(loops[0])}")
        if not np.all(np.isfinite(costs)) or np.any(costs < 0):
            raise NetworkError("basic costs must be finite and non-negative")
        object.__setattr__(self, "node_count", n)
        object.__setattr__(self, "tails", _readonly(tails))
        object.__setattr__(self, "heads", _readonly(heads))
        object.__setattr__(self, "costs", _readonly(costs))

    @classmethod
    def from_arcs(cls, node_count: int, arcs: Sequence[tuple], costs) -> "MultiCostNetwork":
        arcs = np.asarray(arcs, dtype=np.int64).reshape(-1, 2)
        return cls(node_count, arcs[:, 0], arcs[:, 1], costs)

    @property
    def arc_count(self) -> int:
        return int(self.tails.shape[0])

    @property
    def criteria_count(self) -> int:
        return int(self.costs.shape[1])

    @property
    def arcs(self) -> list[tuple[int, int]]:
        return list(zip(self.tails.tolist(), self.heads.tolist()))

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Forward star as ``(indptr, heads, arc_ids)``, arcs sorted by tail then index."""
        order = np.argsort(self.tails, kind="stable")
        indptr = np.zeros(self.node_count + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.tails, minlength=self.node_count), out=indptr[1:])
        return (
            _readonly(indptr),
            _readonly(self.heads[order].copy()),
            _readonly(order.astype(np.int64)),
        )

    def combined_costs(self, p) -> np.ndarray:
        """Combined cost ``c_a . p`` of every arc."""
        p = np.asarray(p, dtype=np.float64)
        if p.shape != (self.criteria_count,):
            raise NetworkError(
                f"weight vector has dimension {p.shape}, network has "
                f"{self.criteria_count} criteria"
            )
        return combine_costs(self.costs, p)

    def with_costs(self, costs) -> "MultiCostNetwork":
        return MultiCostNetwork(self.node_count, self.tails, self.heads, costs)


@dataclass(frozen=True)
class ODPair:
    origin: int
    destination: int
    demand: int

    def __post_init__(self):
        if self.origin == self.destination:
            raise NetworkError(f"O-D pair with origin == destination ({self.origin})")
        if int(self.demand) != self.demand or self.demand < 1:
            raise NetworkError(f"demand must be a positive integer, got {self.demand}")

    def node_demand(self, node_count: int) -> np.ndarray:
        """Node supply vector: ``+u`` at the origin, ``-u`` at the destination."""
        q = np.zeros(node_count)
        q[self.origin] = self.demand
        q[self.destination] = -self.demand
        return q


@dataclass(frozen=True, eq=False)
class MeasuredFlows:
    """Observed flows on the measured arc subset, ordered by arc index."""

    arc_indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.arc_indices, dtype=np.int64).ravel()
        val = np.asarray(self.values, dtype=np.float64).ravel()
        if idx.size == 0:
            raise NetworkError("at least one measured arc is required")
        if idx.shape != val.shape:
            raise NetworkError("arc_indices and values must have equal length")
        if np.unique(idx).size != idx.size:
            raise NetworkError("duplicate measured arc")
        if np.any(val < 0) or not np.all(np.isfinite(val)):
            raise NetworkError("observed flows must be finite and non-negative")
        order = np.argsort(idx, kind="stable")
        object.__setattr__(self, "arc_indices", _readonly(idx[order]))
        object.__setattr__(self, "values", _readonly(val[order]))

    @classmethod
    def from_mapping(cls, entries: Mapping[int, float]) -> "MeasuredFlows":
        keys = sorted(entries)
        return cls(keys, [entries[k] for k in keys])

    @property
    def entries(self) -> dict[int, float]:
        return dict(zip(self.arc_indices.tolist(), self.values.tolist()))

    @property
    def measured_arcs(self) -> frozenset[int]:
        return frozenset(self.arc_indices.tolist())

    def __len__(self):
        return int(self.arc_indices.size)


@dataclass(frozen=True, eq=False)
class RoutingInstance:
    """Network, O-D demand and measured flows bundled for identification."""

    network: MultiCostNetwork
    od_pairs: tuple[ODPair, ...]
    measured: MeasuredFlows
    _check: bool = field(default=True, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "od_pairs", tuple(self.od_pairs))
        if self._check:
            check_od_pairs(self.network, self.od_pairs)
            if self.measured.arc_indices.max() >= self.network.arc_count:
                raise NetworkError("measured arc index outside the arc range")


def check_od_pairs(network: MultiCostNetwork, od_pairs: Iterable[ODPair]) -> None:
    od_pairs = list(od_pairs)
    if not od_pairs:
        raise NetworkError("at least one O-D pair is required")
    for w in od_pairs:
        for node in (w.origin, w.destination):
            if not 0 <= node < network.node_count:
                raise NetworkError(f"O-D node {node} outside the node range")


def od_arrays(od_pairs: Sequence[ODPair]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    origins = np.array([w.origin for w in od_pairs], dtype=np.int64)
    dests = np.array([w.destination for w in od_pairs], dtype=np.int64)
    demand = np.array([w.demand for w in od_pairs], dtype=np.float64)
    return origins, dests, demand


# ---------------------------------------------------------------------------
# operations


def normalize_costs(network: MultiCostNetwork) -> MultiCostNetwork:
    """Rescale every criterion so all cost columns share the first column's sum.

    Ratios within a criterion are preserved. Raises :class:`NetworkError` when a
    criterion is identically zero, since no positive scale can fix its sum.
    """
    sums = network.costs.sum(axis=0)
    if np.any(sums <= 0):
        h = int(np.flatnonzero(sums <= 0)[0])
        raise NetworkError(f"degenerate criterion {h}: all costs are zero")
    scale = sums[0] / sums
    scale[0] = 1.0
    return network.with_costs(network.costs * scale)


def is_normalized(network: MultiCostNetwork, rtol: float = NORMALIZATION_RTOL) -> bool:
    sums = network.costs.sum(axis=0)
    return bool(np.all(np.abs(sums - sums[0]) <= rtol * np.abs(sums[0])))


def _reachable(node_count: int, src: np.ndarray, dst: np.ndarray, start: int) -> np.ndarray:
    order = np.argsort(src, kind="stable")
    indptr = np.zeros(node_count + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=node_count), out=indptr[1:])
    nbrs = dst[order]
    seen = np.zeros(node_count, dtype=bool)
    seen[start] = True
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in nbrs[indptr[u]:indptr[u + 1]]:
            if not seen[v]:
                seen[v] = True
                queue.append(int(v))
    return seen


def is_strongly_connected(network: MultiCostNetwork) -> bool:
    fwd = _reachable(network.node_count, network.tails, network.heads, 0)
    if not fwd.all():
        return False
    return bool(_reachable(network.node_count, network.heads, network.tails, 0).all())


@dataclass(frozen=True)
class ValidationReport:
    strongly_connected: bool
    costs_positive: bool
    normalized: bool

    @property
    def ok(self) -> bool:
        return self.strongly_connected and self.costs_positive and self.normalized

    @property
    def problems(self) -> list[str]:
        out = []
        if not self.strongly_connected:
            out.append("network is not strongly connected")
        if not self.costs_positive:
            out.append("some basic costs are not strictly positive")
        if not self.normalized:
            out.append("basic cost sums differ between criteria")
        return out


def validate(network: MultiCostNetwork) -> ValidationReport:
    return ValidationReport(
        strongly_connected=is_strongly_connected(network),
        costs_positive=bool(np.all(network.costs > 0)),
        normalized=is_normalized(network),
    )


def combined_arc_cost(network: MultiCostNetwork, arc: int, p) -> float:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (network.criteria_count,):
        raise NetworkError(
            f"weight vector has dimension {p.shape}, network has "
            f"{network.criteria_count} criteria"
        )
    return float(combine_costs(network.costs[arc:arc + 1], p)[0])
