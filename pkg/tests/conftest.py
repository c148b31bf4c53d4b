import random

import pytest

from forestwalk.graph_model import TOWARD_CHILD, TOWARD_TOKEN, LabelledGraph, forest, tree_of
from forestwalk.sim.generators import orient_toward


def build(trees, bridges=(), isolated=()):
    """Graph from ``trees = [(edges, holder), ...]`` plus null-labelled extra edges.

    Vertex ids are the integers used in the edge lists.
    """
    g = LabelledGraph()
    for edges, holder in trees:
        vs = {holder} | {x for e in edges for x in e}
        for v in sorted(vs):
            if v not in g:
                g.add_vertex(v)
        for u, v in edges:
            g.add_edge(u, v)
            # provisional; orient_toward fixes the direction
            g.set_label(u, v, TOWARD_TOKEN)
            g.set_label(v, u, TOWARD_CHILD)
        orient_toward(g, holder)
    for v in isolated:
        g.add_vertex(v)
    for u, v in bridges:
        g.add_edge(u, v)
    return g


def trees_of(g, *members):
    ts = forest(g)
    return [tree_of(ts, m) for m in members]


@pytest.fixture
def rng():
    return random.Random(12345)


def random_schedule(rng, n_start, n_events, max_vertices=50, horizon=4):
    """Random start graph plus a well-formed churn schedule.

    Returns ``(graph, events)``; the graph starts as ``n_start`` isolated
    tokens joined by a few random edges.
    """
    from forestwalk.graph_model import TopologyEvent

    g = LabelledGraph()
    live = [g.add_vertex() for _ in range(n_start)]
    edges = set()
    for _ in range(n_start):
        u, v = rng.sample(live, 2) if len(live) > 1 else (None, None)
        if u is not None and frozenset((u, v)) not in edges:
            g.add_edge(u, v)
            edges.add(frozenset((u, v)))
    next_id = max(live) + 1 if live else 0
    live = set(live)
    events = []
    step = 0
    for _ in range(n_events):
        step += rng.randrange(horizon)
        kind = rng.random()
        if kind < 0.4 and len(live) > 1:
            u, v = rng.sample(sorted(live), 2)
            e = frozenset((u, v))
            if e in edges:
                continue
            edges.add(e)
            events.append(TopologyEvent.edge_up(step, u, v))
        elif kind < 0.75 and edges:
            e = rng.choice(sorted(tuple(sorted(x)) for x in edges))
            edges.discard(frozenset(e))
            events.append(TopologyEvent.edge_down(step, *e))
        elif kind < 0.88 and len(live) < max_vertices:
            live.add(next_id)
            events.append(TopologyEvent.vertex_up(step, next_id))
            next_id += 1
        elif len(live) > 1:
            u = rng.choice(sorted(live))
            live.discard(u)
            edges = {e for e in edges if u not in e}
            events.append(TopologyEvent.vertex_down(step, u))
    return g, events


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
