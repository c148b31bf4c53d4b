"""Closed-form merging estimates and an exact Markov-chain oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph_model import NULL, LabelledGraph, TreeView, VertexId
from .protocol import WalkPolicy

MAX_ORACLE_STATES = 10_000


class IntractableError(ValueError):
    pass


class UnsupportedPolicyError(ValueError):
    pass


@dataclass(frozen=True)
class Bridge:
    u: VertexId  # endpoint in the first tree
    v: VertexId  # endpoint in the second tree
    degree_u: int
    degree_v: int


@dataclass(frozen=True)
class BridgeSet:
    pairs: tuple

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def swapped(self) -> "BridgeSet":
        return BridgeSet(tuple(Bridge(b.v, b.u, b.degree_v, b.degree_u) for b in self.pairs))


@dataclass(frozen=True)
class Distribution:
    probs: dict

    def __post_init__(self):
        if any(p < 0 for p in self.probs.values()):
            raise ValueError("negative probability")
        total = math.fsum(self.probs.values())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, not 1")

    def __getitem__(self, v):
        return self.probs[v]

    def __len__(self):
        return len(self.probs)

    def support(self) -> frozenset:
        return frozenset(self.probs)


def bridges(graph: LabelledGraph, t1: TreeView, t2: TreeView) -> BridgeSet:
    if t1.vertices == t2.vertices:
        raise ValueError("bridges need two distinct trees")
    if t1.vertices & t2.vertices:
        raise ValueError("trees overlap")
    pairs = []
    for u in sorted(t1.vertices):
        for v, lab in sorted(graph.endpoint_labels(u).items()):
            if v in t2.vertices and lab is NULL:
                pairs.append(Bridge(u, v, t1.degree[u], t2.degree[v]))
    return BridgeSet(tuple(pairs))


def stationary_distribution(t: TreeView) -> Distribution:
    """Token presence probabilities ``d(v) / 2|E|`` of a uniform walk on ``t``."""
    if t.order < 2:
        raise ValueError("stationary distribution undefined on a one-vertex tree")
    m2 = 2 * t.size
    return Distribution({v: t.degree[v] / m2 for v in sorted(t.vertices)})


def merge_probability(t1: TreeView, t2: TreeView, b: BridgeSet) -> float:
    if t1.order < 2 or t2.order < 2:
        raise ValueError("merge probability needs trees of order >= 2")
    m1, m2 = 2 * t1.size, 2 * t2.size
    return math.fsum((br.degree_u / m1) * (br.degree_v / m2) for br in b)


def expected_merging_time(t1: TreeView, t2: TreeView, b: BridgeSet) -> float:
    """Reciprocal of :func:`merge_probability`; ``inf`` when no bridge exists."""
    p = merge_probability(t1, t2, b)
    if p == 0:
        return math.inf
    return 1.0 / p


def avg_degree_expected_merging_time(order1: int, order2: int, bridge_count: int) -> float:
    """Expected merging time with every bridge endpoint at its tree's average degree.

    With average degree ``2|E|/|V|`` each bridge contributes ``1/(order1*order2)``.
    """
    if order1 < 2 or order2 < 2:
        raise ValueError("tree orders must be >= 2")
    if bridge_count < 1:
        raise ValueError("need at least one bridge")
    return order1 * order2 / bridge_count


def empirical_distribution(occupancy: Mapping) -> Distribution:
    total = sum(occupancy.values())
    if total <= 0:
        raise ValueError("empty occupancy")
    return Distribution({v: c / total for v, c in occupancy.items()})


def distribution_distance(p: Distribution, q: Distribution) -> float:
    """Total variation distance, as a percentage."""
    if p.support() != q.support():
        raise ValueError("distributions have different supports")
    return 100.0 * 0.5 * math.fsum(abs(p[v] - q[v]) for v in p.probs)


def _tree_adjacency(t: TreeView) -> dict:
    adj = {v: [] for v in t.vertices}
    for a, b in t.tree_edges:
        adj[a].append(b)
        adj[b].append(a)
    return adj


def markov_hitting_times(graph: LabelledGraph, t1: TreeView, t2: TreeView,
                         policy: WalkPolicy = WalkPolicy(0),
                         max_states: int = MAX_ORACLE_STATES) -> dict:
    """Expected token moves before both tokens sit on a common bridge.

    Solves the first-passage system of the product chain (position in ``t1``,
    position in ``t2``) where at each step one of the two tokens, chosen with
    probability 1/2, makes a uniform move in its tree (or stalls on a one-vertex
    tree).  Returns a mapping ``(a, b) -> expected moves``.
    """
    if policy.memory != 0:
        raise UnsupportedPolicyError("the exact oracle only models the uniform walk")
    n_states = t1.order * t2.order
    if n_states > max_states:
        raise IntractableError(f"state space of {n_states} states exceeds {max_states}")
    bset = bridges(graph, t1, t2)
    if not len(bset):
        raise ValueError("trees share no bridge; merging time is infinite")
    targets = {(br.u, br.v) for br in bset}
    adj1, adj2 = _tree_adjacency(t1), _tree_adjacency(t2)
    states = [(a, b) for a in sorted(t1.vertices) for b in sorted(t2.vertices)]
    transient = [s for s in states if s not in targets]
    index = {s: i for i, s in enumerate(transient)}

    rows, cols, vals = [], [], []

    def add(i, s, p):
        if s in index:
            rows.append(i)
            cols.append(index[s])
            vals.append(p)

    for i, (a, b) in enumerate(transient):
        if adj1[a]:
            p = 0.5 / len(adj1[a])
            for a2 in adj1[a]:
                add(i, (a2, b), p)
        else:
            add(i, (a, b), 0.5)
        if adj2[b]:
            p = 0.5 / len(adj2[b])
            for b2 in adj2[b]:
                add(i, (a, b2), p)
        else:
            add(i, (a, b), 0.5)
    n = len(transient)
    q = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    system = (sp.identity(n, format="csr") - q).tocsc()
    h = spla.spsolve(system, np.ones(n)) if n else np.zeros(0)
    out = {s: 0.0 for s in targets}
    out.update({s: float(h[i]) for s, i in index.items()})
    return out


def markov_exact_merging_time(graph: LabelledGraph, t1: TreeView, t2: TreeView,
                              policy: WalkPolicy = WalkPolicy(0),
                              start: Optional[tuple] = None,
                              max_states: int = MAX_ORACLE_STATES) -> float:
    """Exact expected token moves before the merge becomes applicable.

    ``start`` defaults to the current token holders.  The merge itself is one
    more step, so a simulated merging time averages to this value plus one.
    """
    h = markov_hitting_times(graph, t1, t2, policy, max_states)
    if start is None:
        start = (t1.token_holder, t2.token_holder)
    return h[tuple(start)]
