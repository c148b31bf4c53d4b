"""Random instance generators: labelled trees and bridges between them."""
from __future__ import annotations

import heapq
from collections import deque
from typing import Optional

from ..analysis import BridgeSet, bridges
from ..graph_model import PLAIN, TOKEN, TOWARD_CHILD, TOWARD_TOKEN, LabelledGraph, TreeView, forest, tree_of


def prufer_to_edges(seq, n: int) -> list:
    """Decode a Prüfer sequence over ``range(n)`` into the ``n - 1`` tree edges."""
    if n < 2:
        return []
    if len(seq) != n - 2:
        raise ValueError(f"sequence length {len(seq)} does not match n={n}")
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    leaves = [i for i in range(n) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    edges.append((heapq.heappop(leaves), heapq.heappop(leaves)))
    return edges


def orient_toward(graph: LabelledGraph, holder) -> None:
    """Relabel the tree containing ``holder`` so that it roots at ``holder``."""
    graph.set_state(holder, TOKEN)
    seen = {holder}
    queue = deque([holder])
    while queue:
        x = queue.popleft()
        for y in graph.tree_neighbors(x):
            if y in seen:
                continue
            seen.add(y)
            graph.set_state(y, PLAIN)
            graph.set_label(x, y, TOWARD_CHILD)
            graph.set_label(y, x, TOWARD_TOKEN)
            queue.append(y)


def random_tree(order: int, rng, graph: Optional[LabelledGraph] = None) -> tuple:
    """Add a uniformly random labelled tree of ``order`` vertices to ``graph``.

    The token sits on a uniformly chosen vertex.  Returns ``(graph, tree)``.
    """
    if order < 1:
        raise ValueError("tree order must be >= 1")
    if graph is None:
        graph = LabelledGraph()
    ids = [graph.add_vertex() for _ in range(order)]
    seq = [rng.randrange(order) for _ in range(order - 2)]
    for a, b in prufer_to_edges(seq, order):
        u, v = ids[a], ids[b]
        graph.add_edge(u, v)
        # provisional orientation; orient_toward fixes direction
        graph.set_label(u, v, TOWARD_TOKEN)
        graph.set_label(v, u, TOWARD_CHILD)
    holder = ids[rng.randrange(order)]
    orient_toward(graph, holder)
    return graph, tree_of(forest(graph), holder)


def add_random_bridges(graph: LabelledGraph, t1: TreeView, t2: TreeView, count: int,
                       rng) -> BridgeSet:
    if t1.vertices & t2.vertices:
        raise ValueError("trees must be disjoint")
    a, b = sorted(t1.vertices), sorted(t2.vertices)
    free = [(u, v) for u in a for v in b if not graph.has_edge(u, v)]
    if count > len(free):
        raise ValueError(f"only {len(free)} distinct cross pairs available, {count} requested")
    for u, v in rng.sample(free, count):
        graph.add_edge(u, v)
    return bridges(graph, t1, t2)


def two_tree_instance(order1: int, order2: int, bridge_count: int, rng) -> LabelledGraph:
    graph, t1 = random_tree(order1, rng)
    graph, t2 = random_tree(order2, rng, graph)
    add_random_bridges(graph, t1, t2, bridge_count, rng)
    return graph
