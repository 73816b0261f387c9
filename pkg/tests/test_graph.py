import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qconsensus import graph
from qconsensus.graph import GraphError

CYCLE5 = sorted(2 - 2 * math.cos(2 * math.pi * k / 5) for k in range(5))


def test_two_node_edge_list():
    g = graph.from_edge_list(2, [(1, 2)])
    assert np.array_equal(g.adjacency, [[0, 1], [1, 0]])


def test_five_cycle_construction():
    g = graph.from_edge_list(5, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1)])
    assert list(g.degrees) == [2] * 5
    assert g == graph.cycle(5)


@pytest.mark.parametrize("edges", [[(1, 1)], [(0, 1)], [(1, 4)]])
def test_bad_edges(edges):
    with pytest.raises(GraphError):
        graph.from_edge_list(3, edges)


def test_adjacency_validation():
    with pytest.raises(GraphError):
        graph.Graph.from_adjacency([[0, 1], [0, 0]])
    with pytest.raises(GraphError):
        graph.Graph.from_adjacency([[1, 0], [0, 0]])
    with pytest.raises(GraphError):
        graph.Graph.from_adjacency([[0, 2], [2, 0]])


def test_laplacian_rows_sum_to_zero():
    L = graph.cycle(6).laplacian()
    assert np.allclose(L.sum(axis=1), 0)
    assert np.allclose(L, L.T)


def test_path2_spectrum():
    s = graph.spectral(graph.path(2))
    assert np.allclose(s.eigenvalues, [0, 2], atol=1e-12)
    assert s.connected


def test_cycle5_spectrum_closed_form():
    s = graph.spectral(graph.cycle(5))
    assert np.allclose(s.eigenvalues, CYCLE5, atol=1e-12)
    assert s.lambda2 == pytest.approx(1.381966, abs=1e-6)
    assert s.lambdaN == pytest.approx(3.618034, abs=1e-6)
    assert s.max_degree == 2


def test_disconnected():
    g = graph.Graph.from_adjacency(np.zeros((2, 2), dtype=int))
    s = graph.spectral(g)
    assert s.lambda2 == 0 and not s.connected
    with pytest.raises(GraphError):
        graph.rho_h(s, 0.1)


def test_rho_h_examples():
    assert graph.rho_h(graph.spectral(graph.path(2)), 0.5) == pytest.approx(0.0, abs=1e-12)
    s = graph.spectral(graph.cycle(5))
    assert graph.rho_h(s, 0.2) == pytest.approx(0.723606797749979, abs=1e-12)
    with pytest.raises(GraphError):
        graph.rho_h(s, 0.0)


def test_rho_h_small_T_branch():
    s = graph.spectral(graph.complete(4))
    for T in (1e-6, 1e-3, 0.1):
        assert graph.rho_h(s, T) == pytest.approx(1 - T * s.lambda2, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31 - 1))
def test_random_connected_matches_bfs(n, seed):
    g = graph.random_connected(n, np.random.default_rng(seed))
    s = graph.spectral(g)
    assert s.connected and g.is_connected_bfs()
    assert s.eigenvalues[0] == 0.0
    assert np.all(np.diff(s.eigenvalues) >= -1e-12)
