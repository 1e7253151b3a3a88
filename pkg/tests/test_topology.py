import pytest
from hypothesis import given, strategies as st

from csma154.topology import (NetworkSpec, NodeSpec, TopologyError, adjacency_from_coordinates,
                              adjacency_from_pairs, full_adjacency, has_hidden_nodes,
                              interference_sets)


def chain(pairs=((0, 1), (1, 2))):
    nodes = {1: NodeSpec(1, 0, 1e-4), 2: NodeSpec(2, 1, 1e-4)}
    return NetworkSpec(nodes, adjacency_from_pairs([0, 1, 2], pairs), 0)


def test_chain_structure():
    net = chain()
    assert net.path(2) == [2, 1]
    assert net.children(1) == [2]
    assert net.leaf_to_root() == [2, 1]
    assert net.sources() == [1, 2]


def test_hidden_chain_sets():
    net = chain()
    sets = interference_sets(net)
    assert sets[2].c2 == frozenset({0})
    assert sets[1].c1 == frozenset({0}) and sets[1].c2 == frozenset()
    assert has_hidden_nodes(net)


def test_full_mesh_has_no_hidden_nodes():
    net = chain(((0, 1), (1, 2), (0, 2)))
    assert not has_hidden_nodes(net)


def test_cycle_rejected():
    nodes = {1: NodeSpec(1, 2, 0.0), 2: NodeSpec(2, 1, 0.0)}
    with pytest.raises(TopologyError):
        NetworkSpec(nodes, full_adjacency([0, 1, 2]), 0)


def test_parent_out_of_range_rejected():
    nodes = {1: NodeSpec(1, 0, 0.0), 2: NodeSpec(2, 0, 0.0)}
    with pytest.raises(TopologyError):
        NetworkSpec(nodes, adjacency_from_pairs([0, 1, 2], [(0, 1), (1, 2)]), 0)


def test_asymmetric_adjacency_rejected():
    nodes = {1: NodeSpec(1, 0, 0.0)}
    with pytest.raises(TopologyError):
        NetworkSpec(nodes, {0: frozenset({1}), 1: frozenset()}, 0)


def test_self_loop_rejected():
    with pytest.raises(TopologyError):
        adjacency_from_pairs([0, 1], [(1, 1)])


def test_coordinates_strict_range():
    adj = adjacency_from_coordinates({0: (0, 0), 1: (1, 0), 2: (2, 0)}, 1.0)
    assert adj[0] == frozenset()
    adj = adjacency_from_coordinates({0: (0, 0), 1: (1, 0), 2: (2, 0)}, 1.01)
    assert adj[1] == frozenset({0, 2}) and adj[0] == frozenset({1})


@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=2, max_size=8),
       st.floats(0.1, 4))
def test_coordinate_adjacency_symmetric(points, r):
    adj = adjacency_from_coordinates(dict(enumerate(points)), r)
    for i, nb in adj.items():
        assert i not in nb
        for j in nb:
            assert i in adj[j]
