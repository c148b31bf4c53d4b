import json

import pytest

from conftest import build
from forestwalk.graph_model import (
    NULL,
    PLAIN,
    TOKEN,
    TOWARD_CHILD,
    TOWARD_TOKEN,
    DeadVertexError,
    DuplicateEdgeError,
    EventKind,
    LabelledGraph,
    MissingEdgeError,
    SelfLoopError,
    StructuralCorruption,
    TopologyEvent,
    forest,
)
from forestwalk.protocol import try_merge


def test_add_vertex_starts_as_token():
    g = LabelledGraph()
    v = g.add_vertex()
    assert g.state(v) is TOKEN
    assert list(g.neighbors(v)) == []


def test_add_vertex_adds_a_tree():
    g = LabelledGraph()
    for _ in range(3):
        g.add_vertex()
    before = len(forest(g))
    g.add_vertex()
    assert len(g) == 4
    assert len(forest(g)) == before + 1


def test_hundred_vertices_hundred_tokens():
    g = LabelledGraph()
    ids = [g.add_vertex() for _ in range(100)]
    assert len(set(ids)) == 100
    assert g.token_count() == 100
    assert len(forest(g)) == 100


def test_ids_never_reused():
    g = LabelledGraph()
    a = g.add_vertex()
    g.remove_vertex(a)
    b = g.add_vertex()
    assert b != a


def test_add_edge_keeps_states_and_null_labels():
    g = LabelledGraph()
    u, v = g.add_vertex(), g.add_vertex()
    g.add_edge(u, v)
    assert g.state(u) is TOKEN and g.state(v) is TOKEN
    assert g.label(u, v) is NULL and g.label(v, u) is NULL
    assert len(forest(g)) == 2


def test_add_edge_errors_are_distinct():
    g = LabelledGraph()
    u, v = g.add_vertex(), g.add_vertex()
    with pytest.raises(SelfLoopError):
        g.add_edge(u, u)
    g.add_edge(u, v)
    with pytest.raises(DuplicateEdgeError):
        g.add_edge(v, u)
    with pytest.raises(DeadVertexError):
        g.add_edge(u, 99)
    codes = {SelfLoopError.code, DuplicateEdgeError.code, DeadVertexError.code}
    assert len(codes) == 3


def test_remove_non_tree_edge_notice():
    g = LabelledGraph()
    u, v = g.add_vertex(), g.add_vertex()
    g.add_edge(u, v)
    n = g.remove_edge(u, v)
    assert (n.label_u, n.label_v) == (NULL, NULL)
    assert not g.has_edge(u, v)
    assert v not in g.neighbors(u) and u not in g.neighbors(v)


def test_remove_tree_edge_notice():
    g = build([([(0, 1)], 0)])
    n = g.remove_edge(0, 1)
    assert {n.label_at(0), n.label_at(1)} == {TOWARD_TOKEN, TOWARD_CHILD}
    assert n.label_at(1) is TOWARD_TOKEN
    with pytest.raises(MissingEdgeError):
        g.remove_edge(0, 1)


def test_forest_of_isolated_vertices():
    g = LabelledGraph()
    for _ in range(5):
        g.add_vertex()
    ts = forest(g)
    assert len(ts) == 5
    assert all(t.order == 1 and not t.tree_edges for t in ts)


def test_forest_after_merge(rng):
    g = LabelledGraph()
    u, v = g.add_vertex(), g.add_vertex()
    g.add_edge(u, v)
    assert try_merge(g, u, rng) == v
    (t,) = forest(g)
    assert t.vertices == {u, v}
    assert t.tree_edges == {(u, v)}
    assert t.token_holder == u
    assert t.degree == {u: 1, v: 1}


def test_forest_rejects_two_toward_token_endpoints():
    g = build([([(0, 1), (1, 2)], 0)])
    # vertex 1 already points at 0; make it point at 2 as well
    g.set_label(1, 2, TOWARD_TOKEN)
    g.set_label(2, 1, TOWARD_CHILD)
    g.set_state(2, TOKEN)
    with pytest.raises(StructuralCorruption):
        forest(g)


def test_forest_rejects_bad_label_pair():
    g = build([([(0, 1)], 0)])
    g.set_label(0, 1, NULL)
    with pytest.raises(StructuralCorruption):
        forest(g)


def test_forest_rejects_two_tokens_in_a_tree():
    g = build([([(0, 1), (1, 2)], 0)])
    g.set_state(2, TOKEN)
    with pytest.raises(StructuralCorruption):
        forest(g)


def test_forest_rejects_misoriented_edge():
    g = build([([(0, 1), (1, 2)], 0)])
    # flip edge 1-2 so 2 is the parent of 1 while 1 is also child of 0
    g.set_label(1, 2, TOWARD_CHILD)
    g.set_label(2, 1, TOWARD_TOKEN)
    g.set_label(1, 0, TOWARD_CHILD)
    g.set_label(0, 1, TOWARD_TOKEN)
    g.set_state(0, PLAIN)
    g.set_state(1, TOKEN)
    # now 0 -> 1 (token) and 2 -> 1: valid; break it by making 1 plain, 2 token
    g.set_state(1, PLAIN)
    g.set_state(2, TOKEN)
    with pytest.raises(StructuralCorruption):
        forest(g)


def test_tree_views_are_contained_in_components():
    g = build([([(0, 1), (1, 2)], 1), ([(3, 4)], 4)], bridges=[(2, 3)], isolated=[9])
    ts = forest(g)
    assert sorted(t.order for t in ts) == [1, 2, 3]
    for t in ts:
        assert t.size == t.order - 1
        assert g.state(t.token_holder) is TOKEN


def test_snapshot_roundtrip():
    g = build([([(0, 1), (1, 2)], 1)], bridges=[], isolated=[5])
    g.add_edge(2, 5)
    data = json.loads(g.to_json())
    assert data["vertices"][0] == {"id": 0, "state": "N"}
    assert {"u": 1, "v": 2, "label_u": "2", "label_v": "1"} in data["edges"]
    assert {"u": 2, "v": 5, "label_u": "0", "label_v": "0"} in data["edges"]
    h = LabelledGraph.from_dict(data)
    assert h.to_dict() == g.to_dict()


def test_snapshot_label_encoding_matches_notation():
    assert NULL.value == "0" and TOWARD_TOKEN.value == "1" and TOWARD_CHILD.value == "2"
    assert TOKEN.value == "T" and PLAIN.value == "N"


def test_topology_event_roundtrip_and_checks():
    ev = TopologyEvent.edge_up(3, 1, 2)
    assert TopologyEvent.from_dict(ev.to_dict()) == ev
    assert TopologyEvent.vertex_down(0, 4).kind is EventKind.VERTEX_DOWN
    with pytest.raises(ValueError):
        TopologyEvent(-1, EventKind.VERTEX_UP, 0)
    with pytest.raises(ValueError):
        TopologyEvent(0, EventKind.EDGE_DOWN, 0)


def test_copy_is_independent():
    g = build([([(0, 1)], 0)])
    h = g.copy()
    h.remove_edge(0, 1)
    assert g.has_edge(0, 1)
    assert h.add_vertex() not in g
