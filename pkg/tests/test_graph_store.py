import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sysgraph.errors import DuplicateIdError, GraphError, ParseError, SchemaViolation
from sysgraph.graph_store import (
    BLOCK, FLOWITEM, FLOWS, FLOWS_IN, HYPERNODE, INSTANCE, IS_INSTANCE_OF, IS_OF_TYPE,
    IS_PART_OF, PORT, PropertyGraph,
)

# random IS_PART_OF digraphs over BLOCK nodes, compared against networkx
digraphs = st.integers(2, 14).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1),
                                                       st.integers(0, n - 1)), max_size=40)))


def build(n, pairs, parallel=True):
    g = PropertyGraph()
    keys = [g.add_node({BLOCK}, {"id": f"n{i}", "name": f"n{i}"}) for i in range(n)]
    ref = nx.DiGraph()
    ref.add_nodes_from(range(n))
    seen = set()
    for a, b in pairs:
        if not parallel and (a, b) in seen:
            continue
        seen.add((a, b))
        g.add_edge(keys[a], IS_PART_OF, keys[b])
        ref.add_edge(a, b)
    return g, keys, ref


@settings(max_examples=120, deadline=None)
@given(digraphs, st.sampled_from(["out", "in", "both"]))
def test_bfs_matches_networkx(data, direction):
    n, pairs = data
    g, keys, ref = build(n, pairs)
    view = {"out": ref, "in": ref.reverse(), "both": ref.to_undirected()}[direction]
    want = nx.single_source_shortest_path_length(view, 0)
    got = g.bfs_distances(keys[0], IS_PART_OF, direction)
    assert {keys.index(k): d for k, d in got.items()} == want
    assert set(g.transitive(keys[0], IS_PART_OF, direction)) == {keys[i] for i in want} - {keys[0]}


@settings(max_examples=120, deadline=None)
@given(digraphs)
def test_shortest_path_length_and_shape(data):
    n, pairs = data
    g, keys, ref = build(n, pairs)
    p = g.shortest_path(keys[0], keys[n - 1], IS_PART_OF, "out")
    if not nx.has_path(ref, 0, n - 1):
        assert p is None
        return
    assert len(p) == nx.shortest_path_length(ref, 0, n - 1)
    assert len(p.nodes) == len(p.edges) + 1
    for i, ek in enumerate(p.edges):
        e = g.edge(ek)
        assert (e.source, e.target) == (p.nodes[i], p.nodes[i + 1])


@settings(max_examples=80, deadline=None)
@given(digraphs, st.integers(1, 5))
def test_k_shortest_paths_lengths_match_simple_paths(data, k):
    n, pairs = data
    g, keys, ref = build(n, pairs, parallel=False)
    got = g.k_shortest_paths(keys[0], keys[n - 1], k, IS_PART_OF)
    if n - 1 == 0 or not nx.has_path(ref, 0, n - 1):
        return
    want = []
    for path in nx.shortest_simple_paths(ref, 0, n - 1):
        want.append(len(path) - 1)
        if len(want) == k:
            break
    assert [len(p) for p in got] == want
    assert len({p.nodes for p in got}) == len(got)
    for p in got:
        assert len(set(p.nodes)) == len(p.nodes)


@settings(max_examples=100, deadline=None)
@given(digraphs)
def test_scc_matches_networkx(data):
    n, pairs = data
    g, keys, ref = build(n, pairs)
    got = {frozenset(keys.index(k) for k in comp)
           for comp in g.strongly_connected_components(IS_PART_OF)}
    assert got == {frozenset(c) for c in nx.strongly_connected_components(ref)}


@settings(max_examples=60, deadline=None)
@given(digraphs)
def test_queries_are_read_only_and_deterministic(data):
    n, pairs = data
    g, keys, _ = build(n, pairs)
    before = g.canonical()
    a = g.k_shortest_paths(keys[0], keys[-1], 3, IS_PART_OF, "both")
    b = g.k_shortest_paths(keys[0], keys[-1], 3, IS_PART_OF, "both")
    assert [p.nodes for p in a] == [p.nodes for p in b]
    g.bfs_distances(keys[0])
    g.strongly_connected_components()
    assert g.canonical() == before


@settings(max_examples=60, deadline=None)
@given(digraphs)
def test_json_round_trip(data):
    n, pairs = data
    g, _, _ = build(n, pairs)
    back = PropertyGraph.from_json(g.to_json())
    assert back.canonical() == g.canonical()
    assert back.to_json() == g.to_json()


def test_excluded_nodes_force_detour():
    g, keys, _ = build(4, [(0, 1), (1, 3), (0, 2), (2, 3)])
    p = g.shortest_path(keys[0], keys[3], IS_PART_OF, "out", excluded_nodes={keys[1]})
    assert p.nodes == (keys[0], keys[2], keys[3])


def test_shortest_path_tie_break_is_by_node_id():
    g, keys, _ = build(4, [(0, 2), (2, 3), (0, 1), (1, 3)])
    p = g.shortest_path(keys[0], keys[3], IS_PART_OF, "out")
    assert [g.node(k).id for k in p.nodes] == ["n0", "n1", "n3"]


def _port_hpn():
    g = PropertyGraph()
    p = g.add_node({PORT}, {"id": "p"})
    h = g.add_node({HYPERNODE}, {"id": "h"})
    b = g.add_node({BLOCK}, {"id": "b"})
    f = g.add_node({BLOCK, FLOWITEM}, {"id": "f"})
    return g, p, h, b, f


def test_strict_mode_rejects_bad_endpoints():
    g, p, h, b, f = _port_hpn()
    g.add_edge(p, FLOWS, h)
    g.add_edge(f, FLOWS_IN, h)
    with pytest.raises(SchemaViolation):
        g.add_edge(b, FLOWS, p)
    g.add_edge(b, FLOWS, p, {"tbd": True})
    with pytest.raises(SchemaViolation):
        g.add_edge(b, FLOWS_IN, h)
    with pytest.raises(SchemaViolation):
        g.add_edge(b, IS_INSTANCE_OF, b)
    with pytest.raises(SchemaViolation):
        g.add_node({"WIDGET"}, {"id": "w"})
    assert g.schema_violations() == []


def test_relaxed_edge_is_reported_by_schema_check():
    g, p, h, b, f = _port_hpn()
    g.add_edge(b, FLOWS, p, strict=False)
    assert len(g.schema_violations()) == 1


def test_instance_label_cannot_break_existing_edges():
    g = PropertyGraph()
    a = g.add_node({BLOCK}, {"id": "a"})
    c = g.add_node({BLOCK}, {"id": "c"})
    g.add_edge(a, IS_OF_TYPE, c)
    with pytest.raises(SchemaViolation):
        g.add_label(a, INSTANCE)
    assert INSTANCE not in g.node(a).labels


def test_node_identity_rules():
    g = PropertyGraph()
    g.add_node({BLOCK}, {"id": "a"})
    with pytest.raises(DuplicateIdError):
        g.add_node({BLOCK}, {"id": "a"})
    with pytest.raises(GraphError):
        g.add_node({BLOCK}, {"name": "x"})
    assert g.node(g.key_of("a")).props == {"id": "a", "name": None}


def test_remove_edges_where_matches_type_exactly():
    g, p, h, b, f = _port_hpn()
    g.add_edge(b, FLOWS, p, {"tbd": True})
    g.add_edge(p, FLOWS, h, {"tbd": 1})
    assert g.remove_edges_where(tbd=True) == 1
    assert len(g.edges) == 1


def test_parallel_edges_are_kept():
    g, keys, _ = build(2, [(0, 1), (0, 1)])
    assert len(g.edges_of(keys[0], IS_PART_OF, "out")) == 2


def test_malformed_graph_json():
    with pytest.raises(ParseError):
        PropertyGraph.from_json(b"{nodes")
    with pytest.raises(ParseError):
        PropertyGraph.from_json(b'{"nodes": 3, "edges": []}')
