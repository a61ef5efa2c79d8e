"""Dijkstra shortest paths under combined costs ``c . p``.

Ties are broken deterministically: tentative labels within ``TIE_TOL`` of each
other count as equal and the predecessor with the smaller node index wins (the
smaller arc index for parallel arcs); among equal heap keys the smaller node is
popped first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .network import MultiCostNetwork, NetworkError, ODPair

TIE_TOL = 1e-12


class UnreachableError(NetworkError):
    pass


@dataclass(frozen=True, eq=False)
class Path:
    """Elementary directed path, arcs listed from origin to destination."""

    arcs: tuple[int, ...]
    basic_costs_along: np.ndarray
    combined_cost: float

    def nodes(self, network: MultiCostNetwork) -> list[int]:
        if not self.arcs:
            return []
        return [int(network.tails[self.arcs[0]])] + [int(network.heads[a]) for a in self.arcs]


# ---------------------------------------------------------------------------
# numba kernels


@numba.njit(cache=True)
def _heap_less(k1, n1, k2, n2):
    return k1 < k2 or (k1 == k2 and n1 < n2)


@numba.njit(cache=True)
def _heap_push(hk, hn, size, key, node):
    i = size
    hk[i] = key
    hn[i] = node
    while i > 0:
        parent = (i - 1) >> 1
        if _heap_less(hk[i], hn[i], hk[parent], hn[parent]):
            hk[i], hk[parent] = hk[parent], hk[i]
            hn[i], hn[parent] = hn[parent], hn[i]
            i = parent
        else:
            break
    return size + 1


@numba.njit(cache=True)
def _heap_pop(hk, hn, size):
    key = hk[0]
    node = hn[0]
    size -= 1
    hk[0] = hk[size]
    hn[0] = hn[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        child = left
        right = left + 1
        if right < size and _heap_less(hk[right], hn[right], hk[left], hn[left]):
            child = right
        if _heap_less(hk[child], hn[child], hk[i], hn[i]):
            hk[i], hk[child] = hk[child], hk[i]
            hn[i], hn[child] = hn[child], hn[i]
            i = child
        else:
            break
    return key, node, size


@numba.njit(cache=True)
def _dijkstra(indptr, nbr, arc_id, cost, source, target_mark, n_targets,
              dist, pred_node, pred_arc, settled, hk, hn):
    n = dist.shape[0]
    for i in range(n):
        dist[i] = np.inf
        pred_node[i] = -1
        pred_arc[i] = -1
        settled[i] = False
    dist[source] = 0.0
    size = _heap_push(hk, hn, 0, 0.0, source)
    remaining = n_targets
    while size > 0:
        d, u, size = _heap_pop(hk, hn, size)
        if settled[u]:
            continue
        settled[u] = True
        if n_targets > 0 and target_mark[u]:
            remaining -= 1
            if remaining == 0:
                break
        du = dist[u]
        for k in range(indptr[u], indptr[u + 1]):
            v = nbr[k]
            if settled[v]:
                continue
            a = arc_id[k]
            nd = du + cost[a]
            dv = dist[v]
            if nd < dv - TIE_TOL:
                dist[v] = nd
                pred_node[v] = u
                pred_arc[v] = a
                size = _heap_push(hk, hn, size, nd, v)
            elif nd <= dv + TIE_TOL:
                if u < pred_node[v] or (u == pred_node[v] and a < pred_arc[v]):
                    pred_node[v] = u
                    pred_arc[v] = a


@numba.njit(cache=True)
def _flow_columns(indptr, nbr, arc_id, costs, grp_ptr, grp_origin, dests, demand, out):
    """Accumulate ``out[:, l] += u_w`` along the SP of every pair, for each column.

    Returns -1 on success, otherwise the index of the first unreachable pair.
    """
    n = indptr.shape[0] - 1
    m = nbr.shape[0]
    dist = np.empty(n)
    pred_node = np.empty(n, dtype=np.int64)
    pred_arc = np.empty(n, dtype=np.int64)
    settled = np.empty(n, dtype=np.bool_)
    target_mark = np.zeros(n, dtype=np.bool_)
    hk = np.empty(m + 1)
    hn = np.empty(m + 1, dtype=np.int64)
    for col in range(costs.shape[1]):
        cost = costs[:, col]
        for g in range(grp_origin.shape[0]):
            s = grp_origin[g]
            n_targets = 0
            for k in range(grp_ptr[g], grp_ptr[g + 1]):
                if not target_mark[dests[k]]:
                    target_mark[dests[k]] = True
                    n_targets += 1
            _dijkstra(indptr, nbr, arc_id, cost, s, target_mark, n_targets,
                      dist, pred_node, pred_arc, settled, hk, hn)
            for k in range(grp_ptr[g], grp_ptr[g + 1]):
                target_mark[dests[k]] = False
            for k in range(grp_ptr[g], grp_ptr[g + 1]):
                v = dests[k]
                if not settled[v]:
                    return k
                steps = 0
                while v != s and steps < n:
                    a = pred_arc[v]
                    out[a, col] += demand[k]
                    v = pred_node[v]
                    steps += 1
    return -1


# ---------------------------------------------------------------------------
# python API


def shortest_path_tree(network: MultiCostNetwork, p, source: int):
    """Full shortest-path tree from ``source``: ``(dist, pred_node, pred_arc)``."""
    cost = network.combined_costs(p)
    if np.any(cost < 0):
        raise NetworkError("combined arc costs must be non-negative")
    indptr, nbr, arc_id = network.adjacency
    n = network.node_count
    dist = np.empty(n)
    pred_node = np.empty(n, dtype=np.int64)
    pred_arc = np.empty(n, dtype=np.int64)
    settled = np.empty(n, dtype=np.bool_)
    hk = np.empty(network.arc_count + 1)
    hn = np.empty(network.arc_count + 1, dtype=np.int64)
    _dijkstra(indptr, nbr, arc_id, cost, int(source), np.zeros(n, dtype=np.bool_), 0,
              dist, pred_node, pred_arc, settled, hk, hn)
    return dist, pred_node, pred_arc


def path_from_tree(network: MultiCostNetwork, p, pred_node, pred_arc,
                   origin: int, destination: int) -> Path:
    arcs = []
    v = destination
    while v != origin:
        a = int(pred_arc[v])
        if a < 0 or len(arcs) > network.node_count:
            raise UnreachableError(f"node {destination} unreachable from {origin}")
        arcs.append(a)
        v = int(pred_node[v])
    arcs.reverse()
    cost = network.combined_costs(p)
    total = 0.0
    for a in arcs:
        total += cost[a]
    along = network.costs[arcs].sum(axis=0) if arcs else np.zeros(network.criteria_count)
    return Path(tuple(arcs), along, float(total))


def shortest_path(network: MultiCostNetwork, p, origin: int, destination: int) -> Path:
    """Minimum combined-cost elementary path from ``origin`` to ``destination``."""
    if origin == destination:
        raise NetworkError("origin and destination must differ")
    _, pred_node, pred_arc = shortest_path_tree(network, p, origin)
    return path_from_tree(network, p, pred_node, pred_arc, origin, destination)


def batch_shortest_paths(network: MultiCostNetwork, weights, od_pairs: Sequence[ODPair]):
    """Paths for every (pair, weight); ``table[w][l]`` is the path of pair ``w`` under ``P[l]``.

    One tree is grown per (origin, weight) and shared by every pair with that origin.
    """
    weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    table = [[None] * len(weights) for _ in od_pairs]
    by_origin: dict[int, list[int]] = {}
    for i, w in enumerate(od_pairs):
        by_origin.setdefault(w.origin, []).append(i)
    for ell, p in enumerate(weights):
        for origin in sorted(by_origin):
            _, pred_node, pred_arc = shortest_path_tree(network, p, origin)
            for i in by_origin[origin]:
                table[i][ell] = path_from_tree(
                    network, p, pred_node, pred_arc, origin, od_pairs[i].destination
                )
    return table


def group_by_origin(origins: np.ndarray, dests: np.ndarray, demand: np.ndarray):
    """CSR grouping of O-D pairs by origin, used by the column kernel."""
    order = np.argsort(origins, kind="stable")
    o = origins[order]
    uniq, starts = np.unique(o, return_index=True)
    grp_ptr = np.append(starts, o.size).astype(np.int64)
    return grp_ptr, uniq.astype(np.int64), dests[order].copy(), demand[order].copy()


def flow_columns(network: MultiCostNetwork, combined: np.ndarray, grouped) -> np.ndarray:
    """Flow-matrix columns for a block of combined-cost vectors, shape (|A|, k)."""
    combined = np.ascontiguousarray(combined, dtype=np.float64)
    if combined.ndim == 1:
        combined = combined[:, None]
    if np.any(combined < 0):
        raise NetworkError("combined arc costs must be non-negative")
    indptr, nbr, arc_id = network.adjacency
    grp_ptr, grp_origin, dests, demand = grouped
    out = np.zeros((network.arc_count, combined.shape[1]))
    bad = _flow_columns(indptr, nbr, arc_id, combined, grp_ptr, grp_origin, dests, demand, out)
    if bad >= 0:
        raise UnreachableError(f"destination {int(dests[bad])} unreachable from its origin")
    return out
