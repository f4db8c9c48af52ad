import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from etcor import linalg
from etcor.errors import ConfigError
from etcor.graph import Topology, check_assumptions, compute_h_matrix


def test_single_edge():
    assert np.array_equal(compute_h_matrix(Topology(1, [(0, 1)])), [[1.0]])


def test_default_chain():
    h = compute_h_matrix(Topology.default())
    assert np.array_equal(h, [[2, -1, 0, 0], [-1, 2, -1, 0], [0, -1, 2, -1], [0, 0, -1, 1]])


def test_two_agents_both_rooted():
    t = Topology(2, [(0, 1), (0, 2), (1, 2), (2, 1)])
    assert np.array_equal(compute_h_matrix(t), [[2, -1], [-1, 2]])


def test_default_min_eigenvalue():
    h = compute_h_matrix(Topology.default())
    assert linalg.eigenvalues(h).min_real == pytest.approx(0.12061475842818, abs=1e-10)


def test_default_assumptions_hold():
    assert all(check_assumptions(Topology.default()).values())


def test_isolated_agent():
    t = Topology(4, [(0, 1), (1, 2), (2, 1), (2, 3), (3, 2)])
    r = check_assumptions(t)
    assert not r["spanning_tree_rooted_at_0"]
    assert not r["h_positive_definite"]


def test_directed_subgraph_edge():
    r = check_assumptions(Topology(2, [(0, 1), (1, 2)]))
    assert r["spanning_tree_rooted_at_0"]
    assert not r["subgraph_undirected"]


@pytest.mark.parametrize("edges", [[(1, 1)], [(1, 0)], [(0, 5)], [(0, 1.5)], [(0, 1, 2)]])
def test_invalid_edges(edges):
    with pytest.raises(ConfigError):
        Topology(4, edges)


def test_in_neighbors_and_adjacency():
    t = Topology.default()
    assert t.in_neighbors(1) == [0, 2]
    assert t.adjacency[1, 0] == 1 and t.adjacency[0, 1] == 0


@st.composite
def rooted_undirected(draw):
    n = draw(st.integers(1, 7))
    # random spanning tree over the agents plus extra undirected edges
    pairs = set()
    for i in range(2, n + 1):
        j = draw(st.integers(1, i - 1))
        pairs.add((j, i))
    extra = draw(st.lists(st.tuples(st.integers(1, n), st.integers(1, n)), max_size=6))
    pairs |= {(a, b) for a, b in extra if a != b}
    roots = draw(st.sets(st.integers(1, n), min_size=1))
    edges = [(0, r) for r in roots]
    for a, b in pairs:
        edges += [(a, b), (b, a)]
    perm = draw(st.permutations(edges))
    return n, list(perm)


@settings(max_examples=80, deadline=None)
@given(rooted_undirected())
def test_rooted_undirected_graphs_give_positive_definite_h(case):
    n, edges = case
    t = Topology(n, edges)
    h = compute_h_matrix(t)
    assert np.allclose(h, h.T)
    assert all(check_assumptions(t).values())
    # rows of the Laplacian part sum to zero, so H 1 is the root-edge indicator
    assert np.allclose(h @ np.ones(n), t.adjacency[1:, 0])


@settings(max_examples=40, deadline=None)
@given(rooted_undirected())
def test_edge_order_irrelevant(case):
    n, edges = case
    assert Topology(n, edges) == Topology(n, list(reversed(edges)))
