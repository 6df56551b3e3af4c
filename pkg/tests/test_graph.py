"""Graph construction and validation."""

import pytest

from ctmcontrol import (
    DuplicateEdge,
    IsolatedNode,
    NotStronglyConnected,
    SelfLoop,
    build_graph,
)


def test_smallest_admissible_pair():
    g = build_graph(2, [(0, 1), (1, 0)])
    assert g.n_nodes == 2
    assert g.out_neighbors == ((1,), (0,))
    assert g.n_edges == 2


def test_one_way_pair_rejected():
    with pytest.raises(NotStronglyConnected):
        build_graph(2, [(0, 1)])


def test_directed_ring_is_strongly_connected():
    g = build_graph(3, [(0, 1), (1, 2), (2, 0)])
    assert g.out_neighbors == ((1,), (2,), (0,))


def test_self_loop_rejected():
    with pytest.raises(SelfLoop):
        build_graph(2, [(0, 1), (1, 0), (1, 1)])


def test_duplicate_edge_rejected():
    with pytest.raises(DuplicateEdge):
        build_graph(2, [(0, 1), (0, 1), (1, 0)])


def test_node_without_outgoing_edges_rejected():
    with pytest.raises(IsolatedNode):
        build_graph(3, [(0, 1), (1, 0)])


def test_unreachable_component_rejected():
    # 2 can reach the pair but is never reached
    with pytest.raises(NotStronglyConnected):
        build_graph(3, [(0, 1), (1, 0), (2, 0)])


def test_too_few_nodes_rejected():
    with pytest.raises(ValueError):
        build_graph(1, [])


def test_out_of_range_index_rejected():
    with pytest.raises(ValueError):
        build_graph(2, [(0, 1), (1, 2)])


def test_edges_canonical_order():
    g = build_graph(3, [(2, 0), (0, 2), (1, 0), (0, 1), (2, 1), (1, 2)])
    assert g.edges() == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
    assert g.degree(0) == 2
    assert g.n_edges == 6


def test_neighbors_sorted_and_distinct():
    g = build_graph(4, [(0, 3), (0, 1), (1, 0), (3, 0), (1, 2), (2, 1), (2, 3), (3, 2)])
    assert g.out_neighbors[0] == (1, 3)
    assert g.out_neighbors[3] == (0, 2)
