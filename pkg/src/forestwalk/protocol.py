"""Relabelling rules r1-r4 and token circulation policies.

Rules are applied in priority order: topology reactions (r1, r2) are handled
eagerly by :func:`react_edge_down` when an edge disappears, and a token step
tries a merge (r3) before it circulates (r4).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

from .graph_model import (
    NULL,
    PLAIN,
    TOKEN,
    TOWARD_CHILD,
    TOWARD_TOKEN,
    GraphError,
    LabelledGraph,
    RemovalNotice,
    StructuralCorruption,
    VertexId,
)

Trace = Callable[["RuleId", tuple], None]


class ContractViolation(GraphError):
    code = "contract-violation"


class RuleId(enum.IntEnum):
    R1 = 1
    R2 = 2
    R3 = 3
    R4 = 4

    def __str__(self):
        return f"r{self.value}"


@dataclass(frozen=True)
class WalkPolicy:
    """Token circulation strategy.

    ``memory`` is the number of most recently visited incident tree edges a
    vertex refuses to send the token back on.  ``memory=0`` is the plain
    uniform random walk.
    """

    memory: int = 0

    def __post_init__(self):
        if self.memory < 0:
            raise ValueError("memory level must be nonnegative")

    @classmethod
    def uniform(cls) -> "WalkPolicy":
        return cls(0)

    @property
    def kind(self) -> str:
        return "uniform" if self.memory == 0 else "memory"

    def __str__(self):
        return "uniform" if self.memory == 0 else f"memory({self.memory})"


UNIFORM = WalkPolicy(0)


class StepKind(enum.Enum):
    MERGED = "merged"
    MOVED = "moved"
    STALLED = "stalled"


@dataclass(frozen=True)
class StepOutcome:
    kind: StepKind
    vertex: Optional[VertexId] = None


def _touch(mem: list, x: VertexId) -> None:
    if mem and mem[0] == x:
        return
    try:
        mem.remove(x)
    except ValueError:
        pass
    mem.insert(0, x)


def react_edge_down(graph: LabelledGraph, notice: RemovalNotice,
                    trace: Optional[Trace] = None) -> list:
    applied = []
    for x in (notice.u, notice.v):
        if x not in graph:
            continue
        lab = notice.label_at(x)
        if lab is TOWARD_TOKEN:
            if graph.state(x) is not PLAIN:
                raise StructuralCorruption(
                    f"token holder {x} had a toward-token endpoint on {notice.u}-{notice.v}")
            graph.set_state(x, TOKEN)
            applied.append(RuleId.R1)
            if trace:
                trace(RuleId.R1, (x,))
    for x in (notice.u, notice.v):
        if x in graph and notice.label_at(x) is TOWARD_CHILD:
            # the label storage vanished with the edge; nothing else to clear
            applied.append(RuleId.R2)
            if trace:
                trace(RuleId.R2, (x,))
    for x, y in ((notice.u, notice.v), (notice.v, notice.u)):
        mem = graph.memory.get(x)
        if mem and y in mem:
            mem.remove(y)
    return applied


def merge_candidates(graph: LabelledGraph, u: VertexId) -> list:
    return [w for w, lab in graph.endpoint_labels(u).items()
            if lab is NULL and graph.state(w) is TOKEN and graph.label(w, u) is NULL]


def try_merge(graph: LabelledGraph, u: VertexId, rng,
              trace: Optional[Trace] = None) -> Optional[VertexId]:
    if graph.state(u) is not TOKEN:
        raise ContractViolation(f"r3 attempted from plain vertex {u}")
    cands = merge_candidates(graph, u)
    if not cands:
        return None
    w = cands[0] if len(cands) == 1 else cands[rng.randrange(len(cands))]
    graph.set_state(w, PLAIN)
    graph.set_label(u, w, TOWARD_CHILD)
    graph.set_label(w, u, TOWARD_TOKEN)
    if trace:
        trace(RuleId.R3, (u, w))
    return w


def choose_next(graph: LabelledGraph, u: VertexId, policy: WalkPolicy, rng) -> Optional[VertexId]:
    """Pick the tree neighbour the token at ``u`` goes to, without moving it."""
    nbrs = graph.tree_neighbors(u)
    if not nbrs:
        return None
    n = policy.memory
    mem = graph.memory[u]
    if n and mem:
        recent = mem[:n]
        allowed = [w for w in nbrs if w not in recent]
        if not allowed:
            # every incident tree edge is in the recent window: least recent one
            return [x for x in mem if x in nbrs][-1]
    else:
        allowed = nbrs
    if len(allowed) == 1:
        return allowed[0]
    return allowed[rng.randrange(len(allowed))]


def circulate(graph: LabelledGraph, u: VertexId, policy: WalkPolicy, rng,
              trace: Optional[Trace] = None) -> Optional[VertexId]:
    """Apply r4.  Returns the new holder, or ``None`` if ``u`` has no tree edge."""
    if graph.state(u) is not TOKEN:
        raise ContractViolation(f"r4 attempted from plain vertex {u}")
    w = choose_next(graph, u, policy, rng)
    if w is None:
        return None
    graph.set_state(u, PLAIN)
    graph.set_label(u, w, TOWARD_TOKEN)
    graph.set_state(w, TOKEN)
    graph.set_label(w, u, TOWARD_CHILD)
    if policy.memory:
        _touch(graph.memory[u], w)
        _touch(graph.memory[w], u)
    if trace:
        trace(RuleId.R4, (u, w))
    return w


def step_token(graph: LabelledGraph, u: VertexId, policy: WalkPolicy, rng,
               trace: Optional[Trace] = None) -> StepOutcome:
    if graph.state(u) is not TOKEN:
        raise ContractViolation(f"step requested for plain vertex {u}")
    w = try_merge(graph, u, rng, trace)
    if w is not None:
        return StepOutcome(StepKind.MERGED, w)
    w = circulate(graph, u, policy, rng, trace)
    if w is None:
        return StepOutcome(StepKind.STALLED, u)
    return StepOutcome(StepKind.MOVED, w)
