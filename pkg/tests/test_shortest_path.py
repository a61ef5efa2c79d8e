import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_sp, brute_force_sp_cost, enumerate_paths, path_cost, random_strongly_connected
from routechoice.network import MultiCostNetwork, NetworkError, ODPair
from routechoice.shortest_path import (UnreachableError, batch_shortest_paths, flow_columns,
                                       group_by_origin, shortest_path, shortest_path_tree)


def diamond():
    # 0 -> 1 -> 3 is cheap in criterion 0, 0 -> 2 -> 3 in criterion 1
    arcs = [(0, 1), (1, 3), (0, 2), (2, 3), (3, 0)]
    costs = [[1, 5], [1, 5], [5, 1], [5, 1], [1, 1]]
    return MultiCostNetwork.from_arcs(4, arcs, costs)


def test_diamond_switches_route_with_weight():
    net = diamond()
    assert shortest_path(net, (1, 0), 0, 3).arcs == (0, 1)
    assert shortest_path(net, (0, 1), 0, 3).arcs == (2, 3)


def test_tie_prefers_smaller_predecessor_node():
    net = diamond()
    path = shortest_path(net, (0.5, 0.5), 0, 3)
    assert path.combined_cost == 6.0
    assert path.arcs == (0, 1)
    assert path.nodes(net) == [0, 1, 3]


def test_parallel_arc_tie_prefers_smaller_arc():
    net = MultiCostNetwork.from_arcs(2, [(0, 1), (0, 1), (1, 0)], [[2.0], [2.0], [1.0]])
    assert shortest_path(net, (1.0,), 0, 1).arcs == (0,)


def test_path_carries_basic_costs():
    path = shortest_path(diamond(), (1, 0), 0, 3)
    np.testing.assert_array_equal(path.basic_costs_along, [2, 10])


def test_unreachable():
    net = MultiCostNetwork.from_arcs(3, [(0, 1), (1, 0), (2, 0)], np.ones((3, 1)))
    with pytest.raises(UnreachableError):
        shortest_path(net, (1.0,), 0, 2)


def test_same_endpoints_rejected():
    with pytest.raises(NetworkError):
        shortest_path(diamond(), (1, 0), 2, 2)


def test_tree_distances_match_oracle(rng):
    net = random_strongly_connected(rng, 7, 8)
    p = rng.dirichlet(np.ones(3))
    dist, _, _ = shortest_path_tree(net, p, 0)
    for v in range(1, 7):
        assert dist[v] == pytest.approx(brute_force_sp_cost(net, 0, v, p), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_path_is_optimal_and_elementary(seed):
    rng = np.random.default_rng(seed)
    net = random_strongly_connected(rng, 9, 12)
    p = rng.dirichlet(np.ones(3))
    o, d = rng.choice(9, size=2, replace=False)
    path = shortest_path(net, p, int(o), int(d))
    nodes = path.nodes(net)
    assert len(set(nodes)) == len(nodes)
    assert nodes[0] == o and nodes[-1] == d
    arcs, best = brute_force_sp(net, int(o), int(d), p)
    assert path.combined_cost == path_cost(net, arcs, p) == best


def test_oracle_enumerates_all_paths_of_diamond():
    assert sorted(enumerate_paths(diamond(), 0, 3)) == [[0, 1], [2, 3]]


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(3, 10))
def test_optimal_cost_property(seed, n):
    rng = np.random.default_rng(seed)
    net = random_strongly_connected(rng, n, int(rng.integers(0, 2 * n)))
    p = rng.dirichlet(np.ones(3))
    o, d = (int(x) for x in rng.choice(n, size=2, replace=False))
    assert shortest_path(net, p, o, d).combined_cost == brute_force_sp_cost(net, o, d, p)


def test_batch_matches_single_calls(rng):
    net = random_strongly_connected(rng, 8, 10)
    weights = rng.dirichlet(np.ones(3), size=3)
    pairs = [ODPair(0, 3, 2), ODPair(0, 5, 1), ODPair(4, 1, 7)]
    table = batch_shortest_paths(net, weights, pairs)
    for i, w in enumerate(pairs):
        for ell, p in enumerate(weights):
            assert table[i][ell].arcs == shortest_path(net, p, w.origin, w.destination).arcs


def test_flow_columns_match_paths(rng):
    net = random_strongly_connected(rng, 8, 10)
    weights = rng.dirichlet(np.ones(3), size=4)
    pairs = [ODPair(0, 3, 2), ODPair(0, 5, 1), ODPair(4, 1, 7), ODPair(6, 2, 3)]
    grouped = group_by_origin(np.array([w.origin for w in pairs]),
                              np.array([w.destination for w in pairs]),
                              np.array([w.demand for w in pairs], dtype=np.float64))
    cols = flow_columns(net, net.costs @ weights.T, grouped)
    expected = np.zeros_like(cols)
    for ell, p in enumerate(weights):
        for w in pairs:
            for a in shortest_path(net, p, w.origin, w.destination).arcs:
                expected[a, ell] += w.demand
    np.testing.assert_array_equal(cols, expected)


def test_flow_columns_reports_unreachable():
    net = MultiCostNetwork.from_arcs(3, [(0, 1), (1, 0), (2, 0)], np.ones((3, 1)))
    grouped = group_by_origin(np.array([0]), np.array([2]), np.array([1.0]))
    with pytest.raises(UnreachableError):
        flow_columns(net, np.ones(3), grouped)
