"""Dynamic labelled graph carrying the token/forest protocol state.

Every vertex holds one state label (``T`` or ``N``) and every edge holds one
label per endpoint (``0``, ``1`` or ``2``).  The forest is never stored: it is
re-derived from the labels by :func:`forest`.
"""
from __future__ import annotations

import enum
import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

VertexId = int


class VertexState(enum.Enum):
    TOKEN = "T"
    PLAIN = "N"


class EndpointLabel(enum.Enum):
    NULL = "0"
    TOWARD_TOKEN = "1"
    TOWARD_CHILD = "2"


TOKEN = VertexState.TOKEN
PLAIN = VertexState.PLAIN
NULL = EndpointLabel.NULL
TOWARD_TOKEN = EndpointLabel.TOWARD_TOKEN
TOWARD_CHILD = EndpointLabel.TOWARD_CHILD

_VALID_PAIRS = {
    (NULL, NULL),
    (TOWARD_TOKEN, TOWARD_CHILD),
    (TOWARD_CHILD, TOWARD_TOKEN),
}


class GraphError(Exception):
    code = "graph-error"


class SelfLoopError(GraphError):
    code = "self-loop"


class DuplicateEdgeError(GraphError):
    code = "duplicate-edge"


class DuplicateVertexError(GraphError):
    code = "duplicate-vertex"


class DeadVertexError(GraphError):
    code = "dead-vertex"


class MissingEdgeError(GraphError):
    code = "missing-edge"


class StructuralCorruption(GraphError):
    """The labelling no longer encodes a valid oriented forest."""

    code = "structural-corruption"


class EventKind(enum.Enum):
    EDGE_UP = "edge_up"
    EDGE_DOWN = "edge_down"
    VERTEX_UP = "vertex_up"
    VERTEX_DOWN = "vertex_down"


@dataclass(frozen=True)
class TopologyEvent:
    at_step: int
    kind: EventKind
    u: VertexId
    v: Optional[VertexId] = None

    def __post_init__(self):
        if self.at_step < 0:
            raise ValueError("at_step must be nonnegative")
        if self.kind in (EventKind.EDGE_UP, EventKind.EDGE_DOWN) and self.v is None:
            raise ValueError(f"{self.kind.value} needs two endpoints")

    @classmethod
    def edge_up(cls, at_step, u, v):
        return cls(at_step, EventKind.EDGE_UP, u, v)

    @classmethod
    def edge_down(cls, at_step, u, v):
        return cls(at_step, EventKind.EDGE_DOWN, u, v)

    @classmethod
    def vertex_up(cls, at_step, u):
        return cls(at_step, EventKind.VERTEX_UP, u)

    @classmethod
    def vertex_down(cls, at_step, u):
        return cls(at_step, EventKind.VERTEX_DOWN, u)

    def to_dict(self) -> dict:
        d = {"at_step": self.at_step, "kind": self.kind.value, "u": self.u}
        if self.v is not None:
            d["v"] = self.v
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TopologyEvent":
        return cls(int(d["at_step"]), EventKind(d["kind"]), int(d["u"]),
                   None if d.get("v") is None else int(d["v"]))


@dataclass(frozen=True)
class RemovalNotice:
    """Labels an edge carried at both endpoints just before it disappeared."""

    u: VertexId
    v: VertexId
    label_u: EndpointLabel
    label_v: EndpointLabel

    def label_at(self, x: VertexId) -> EndpointLabel:
        if x == self.u:
            return self.label_u
        if x == self.v:
            return self.label_v
        raise KeyError(x)

    @property
    def was_tree_edge(self) -> bool:
        return self.label_u is not NULL


@dataclass(frozen=True)
class TreeView:
    vertices: frozenset
    tree_edges: frozenset
    token_holder: VertexId
    degree: dict = field(hash=False, compare=False)

    @property
    def order(self) -> int:
        return len(self.vertices)

    @property
    def size(self) -> int:
        return len(self.tree_edges)


def edge_key(u: VertexId, v: VertexId) -> tuple:
    return (u, v) if u < v else (v, u)


class LabelledGraph:
    """Undirected simple graph with protocol labels.

    ``memory`` is per-vertex local storage used by memory-biased walk
    policies (a most-recent-first list of tree neighbours).  The graph itself
    never reads it.
    """

    def __init__(self):
        self._state: dict[VertexId, VertexState] = {}
        # _labels[u][v] is the label of edge {u, v} at u's endpoint
        self._labels: dict[VertexId, dict[VertexId, EndpointLabel]] = {}
        self._tokens: set[VertexId] = set()
        self._ids = itertools.count()
        self._used: set[VertexId] = set()
        self.memory: dict[VertexId, list] = {}

    # -- queries ---------------------------------------------------------
    def __contains__(self, v) -> bool:
        return v in self._state

    def __len__(self) -> int:
        return len(self._state)

    @property
    def vertices(self) -> list:
        return list(self._state)

    @property
    def tokens(self) -> set:
        return self._tokens

    def token_count(self) -> int:
        return len(self._tokens)

    def state(self, v: VertexId) -> VertexState:
        return self._state[v]

    def label(self, u: VertexId, v: VertexId) -> EndpointLabel:
        return self._labels[u][v]

    def neighbors(self, v: VertexId):
        return self._labels[v].keys()

    def endpoint_labels(self, v: VertexId) -> dict:
        return self._labels[v]

    def has_edge(self, u: VertexId, v: VertexId) -> bool:
        return u in self._labels and v in self._labels[u]

    def edges(self) -> Iterator[tuple]:
        for u, nbrs in self._labels.items():
            for v in nbrs:
                if u < v:
                    yield u, v

    def edge_count(self) -> int:
        return sum(len(n) for n in self._labels.values()) // 2

    def tree_neighbors(self, v: VertexId) -> list:
        return [w for w, lab in self._labels[v].items() if lab is not NULL]

    def tree_degree(self, v: VertexId) -> int:
        return sum(1 for lab in self._labels[v].values() if lab is not NULL)

    # -- mutation --------------------------------------------------------
    def add_vertex(self, vid: Optional[VertexId] = None) -> VertexId:
        if vid is None:
            vid = next(self._ids)
            while vid in self._used:
                vid = next(self._ids)
        elif vid in self._used:
            raise DuplicateVertexError(f"vertex id {vid} already used in this graph")
        self._used.add(vid)
        self._state[vid] = TOKEN
        self._tokens.add(vid)
        self._labels[vid] = {}
        self.memory[vid] = []
        return vid

    def set_state(self, v: VertexId, s: VertexState) -> None:
        self._state[v] = s
        if s is TOKEN:
            self._tokens.add(v)
        else:
            self._tokens.discard(v)

    def set_label(self, u: VertexId, v: VertexId, lab: EndpointLabel) -> None:
        nbrs = self._labels[u]
        if v not in nbrs:
            raise MissingEdgeError(f"no edge {u}-{v}")
        nbrs[v] = lab

    def add_edge(self, u: VertexId, v: VertexId) -> tuple:
        if u == v:
            raise SelfLoopError(f"self-loop on {u}")
        for x in (u, v):
            if x not in self._state:
                raise DeadVertexError(f"vertex {x} is not live")
        if v in self._labels[u]:
            raise DuplicateEdgeError(f"edge {u}-{v} already present")
        self._labels[u][v] = NULL
        self._labels[v][u] = NULL
        return edge_key(u, v)

    def remove_edge(self, u: VertexId, v: VertexId) -> RemovalNotice:
        if not self.has_edge(u, v):
            raise MissingEdgeError(f"no edge {u}-{v}")
        notice = RemovalNotice(u, v, self._labels[u].pop(v), self._labels[v].pop(u))
        return notice

    def remove_vertex(self, v: VertexId) -> None:
        """Delete an edgeless vertex.  Incident edges must be removed first."""
        if v not in self._state:
            raise DeadVertexError(f"vertex {v} is not live")
        if self._labels[v]:
            raise GraphError(f"vertex {v} still has incident edges")
        del self._state[v]
        del self._labels[v]
        self._tokens.discard(v)
        self.memory.pop(v, None)

    def copy(self) -> "LabelledGraph":
        g = LabelledGraph.__new__(LabelledGraph)
        g._state = dict(self._state)
        g._labels = {u: dict(n) for u, n in self._labels.items()}
        g._tokens = set(self._tokens)
        g._used = set(self._used)
        g._ids = itertools.count(max(self._used, default=-1) + 1)
        g.memory = {u: list(m) for u, m in self.memory.items()}
        return g

    # -- checks ----------------------------------------------------------
    def check_edge_labels(self) -> None:
        for u, v in self.edges():
            pair = (self._labels[u][v], self._labels[v][u])
            if pair not in _VALID_PAIRS:
                raise StructuralCorruption(
                    f"edge {u}-{v} carries unreachable labels {pair[0].value}/{pair[1].value}")

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "vertices": [{"id": v, "state": s.value} for v, s in sorted(self._state.items())],
            "edges": [
                {"u": u, "v": v,
                 "label_u": self._labels[u][v].value,
                 "label_v": self._labels[v][u].value}
                for u, v in sorted(self.edges())
            ],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "LabelledGraph":
        g = cls()
        for rec in data["vertices"]:
            vid = int(rec["id"])
            g.add_vertex(vid)
            g.set_state(vid, VertexState(rec.get("state", "T")))
        for rec in data["edges"]:
            u, v = int(rec["u"]), int(rec["v"])
            g.add_edge(u, v)
            g.set_label(u, v, EndpointLabel(str(rec.get("label_u", "0"))))
            g.set_label(v, u, EndpointLabel(str(rec.get("label_v", "0"))))
        return g

    @classmethod
    def from_json(cls, text: str) -> "LabelledGraph":
        return cls.from_dict(json.loads(text))


def forest(graph: LabelledGraph) -> list[TreeView]:
    """Derive the trees encoded by the labels, validating them on the way.

    Raises :class:`StructuralCorruption` if the labelling is not a forest of
    trees each oriented toward its single token holder.
    """
    graph.check_edge_labels()
    seen: set = set()
    trees = []
    for root in graph.vertices:
        if root in seen:
            continue
        comp = [root]
        seen.add(root)
        queue = deque([root])
        edges = set()
        while queue:
            x = queue.popleft()
            for y in graph.tree_neighbors(x):
                edges.add(edge_key(x, y))
                if y not in seen:
                    seen.add(y)
                    comp.append(y)
                    queue.append(y)
        if len(edges) != len(comp) - 1:
            raise StructuralCorruption(f"tree edges around {root} contain a cycle")
        holders = [x for x in comp if graph.state(x) is TOKEN]
        if len(holders) != 1:
            raise StructuralCorruption(
                f"tree containing {root} has {len(holders)} tokens")
        holder = holders[0]
        degree = {}
        for x in comp:
            labs = graph.endpoint_labels(x)
            up = [y for y, lab in labs.items() if lab is TOWARD_TOKEN]
            degree[x] = sum(1 for lab in labs.values() if lab is not NULL)
            if x == holder:
                if up:
                    raise StructuralCorruption(f"token holder {x} points away from itself")
            elif len(up) != 1:
                raise StructuralCorruption(
                    f"plain vertex {x} has {len(up)} toward-token endpoints")
        for x in comp:
            hops, y = 0, x
            while y != holder:
                y = next(w for w, lab in graph.endpoint_labels(y).items()
                         if lab is TOWARD_TOKEN)
                hops += 1
                if hops > len(comp) - 1:
                    raise StructuralCorruption(f"orientation from {x} never reaches the token")
        trees.append(TreeView(frozenset(comp), frozenset(edges), holder, degree))
    return trees


def tree_of(trees: Iterable[TreeView], v: VertexId) -> TreeView:
    for t in trees:
        if v in t.vertices:
            return t
    raise KeyError(v)
