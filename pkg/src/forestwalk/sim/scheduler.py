"""Discrete-step asynchronous scheduler.

One clock tick is one token rule application.  Topology events stamped with
the current tick are applied first, together with their r1/r2 reactions, so
token steps always start from a quiescent state.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Iterable, Optional

from ..graph_model import (
    EventKind,
    GraphError,
    LabelledGraph,
    TopologyEvent,
    forest,
)
from ..protocol import StepKind, StepOutcome, WalkPolicy, react_edge_down, step_token

DEFAULT_BUDGET = 1_000_000


class MergeTimeout(RuntimeError):
    def __init__(self, steps: int, tokens: int):
        super().__init__(f"step budget of {steps} exhausted with {tokens} tokens left")
        self.steps = steps
        self.tokens = tokens


class MalformedEventError(ValueError):
    pass


def validate_events(graph: LabelledGraph, events: Iterable[TopologyEvent]) -> list:
    """Dry-run a schedule against the current topology, rejecting bad events."""
    events = list(events)
    live = set(graph.vertices)
    used = set(live)
    edges = {frozenset(e) for e in graph.edges()}
    last = 0
    for i, ev in enumerate(events):
        if ev.at_step < last:
            raise MalformedEventError(f"event {i} is out of order")
        last = ev.at_step
        if ev.kind is EventKind.VERTEX_UP:
            if ev.u in used:
                raise MalformedEventError(f"event {i}: vertex id {ev.u} reused")
            live.add(ev.u)
            used.add(ev.u)
        elif ev.kind is EventKind.VERTEX_DOWN:
            if ev.u not in live:
                raise MalformedEventError(f"event {i}: vertex {ev.u} is not live")
            live.discard(ev.u)
            edges = {e for e in edges if ev.u not in e}
        else:
            if ev.u == ev.v:
                raise MalformedEventError(f"event {i}: self-loop on {ev.u}")
            for x in (ev.u, ev.v):
                if x not in live:
                    raise MalformedEventError(f"event {i}: dangling vertex {x}")
            e = frozenset((ev.u, ev.v))
            if ev.kind is EventKind.EDGE_UP:
                if e in edges:
                    raise MalformedEventError(f"event {i}: edge {ev.u}-{ev.v} already up")
                edges.add(e)
            else:
                if e not in edges:
                    raise MalformedEventError(f"event {i}: edge {ev.u}-{ev.v} is not up")
                edges.discard(e)
    return events


def apply_event(graph: LabelledGraph, ev: TopologyEvent, trace=None) -> list:
    """Apply one topology event and its reactions; return the rules fired."""
    fired = []
    if ev.kind is EventKind.EDGE_UP:
        graph.add_edge(ev.u, ev.v)
    elif ev.kind is EventKind.EDGE_DOWN:
        fired += react_edge_down(graph, graph.remove_edge(ev.u, ev.v), trace)
    elif ev.kind is EventKind.VERTEX_UP:
        graph.add_vertex(ev.u)
    else:
        # all incident edges fail at once, then the vertex goes
        notices = [graph.remove_edge(ev.u, w) for w in list(graph.neighbors(ev.u))]
        for notice in notices:
            fired += react_edge_down(graph, notice, trace)
        graph.remove_vertex(ev.u)
    return fired


UNIFORM_SELECTION = "uniform"
ROUNDS_SELECTION = "rounds"


class Scheduler:
    """Drives token steps and topology events on one graph.

    With ``selection="uniform"`` each tick picks one live token uniformly at
    random.  With ``"rounds"`` every live token moves once per round, in a
    fresh random order each round.
    """

    def __init__(self, graph: LabelledGraph, policy: WalkPolicy, rng,
                 events: Iterable[TopologyEvent] = (), trace: Optional[IO] = None,
                 selection: str = UNIFORM_SELECTION):
        if selection not in (UNIFORM_SELECTION, ROUNDS_SELECTION):
            raise ValueError(f"unknown token selection {selection!r}")
        self.selection = selection
        self._round: list = []
        self.graph = graph
        self.policy = policy
        self.rng = rng
        self.clock = 0
        events = list(events)
        self.events = validate_events(graph, events) if events else events
        self._next_event = 0
        self._trace_out = trace
        self._trace = self._emit if trace is not None else None

    def _emit(self, rule, vertices):
        self._trace_out.write(json.dumps(
            {"step": self.clock, "rule": str(rule), "vertices": list(vertices)}) + "\n")

    def apply_pending(self) -> list:
        fired = []
        while (self._next_event < len(self.events)
               and self.events[self._next_event].at_step <= self.clock):
            fired += apply_event(self.graph, self.events[self._next_event], self._trace)
            self._next_event += 1
        return fired

    def pick_token(self):
        tokens = self.graph.tokens
        if not tokens:
            return None
        if self.selection == UNIFORM_SELECTION:
            if len(tokens) == 1:
                return next(iter(tokens))
            toks = sorted(tokens)
            return toks[self.rng.randrange(len(toks))]
        # entries whose token merged away since the round started are skipped
        while self._round:
            u = self._round.pop()
            if u in tokens:
                return u
        self._round = sorted(tokens)
        self.rng.shuffle(self._round)
        return self._round.pop()

    def tick(self) -> Optional[StepOutcome]:
        self.apply_pending()
        outcome = None
        u = self.pick_token()
        if u is not None:
            outcome = step_token(self.graph, u, self.policy, self.rng, self._trace)
            if self.selection == ROUNDS_SELECTION and outcome.kind is StepKind.MOVED:
                self._moved(u, outcome.vertex)
        self.clock += 1
        return outcome

    def _moved(self, old, new):
        # keep the pending round pointing at the token's new holder
        self._round = [new if x == old else x for x in self._round]


def run_until_merged(graph: LabelledGraph, policy: WalkPolicy, rng,
                     budget: int = DEFAULT_BUDGET, trace: Optional[IO] = None,
                     selection: str = UNIFORM_SELECTION) -> int:
    """Step tokens until a single token remains.

    Returns the number of steps, the merging application included.
    """
    sched = Scheduler(graph, policy, rng, trace=trace, selection=selection)
    while graph.token_count() > 1:
        if sched.clock >= budget:
            raise MergeTimeout(sched.clock, graph.token_count())
        sched.tick()
    return sched.clock


@dataclass(frozen=True)
class ForestStats:
    tick: int
    tokens: int
    trees: int
    orders: tuple
    outcome: Optional[str] = None


def run_dynamic_scenario(graph: LabelledGraph, events: Iterable[TopologyEvent],
                         policy: WalkPolicy, budget: int, rng,
                         trace: Optional[IO] = None,
                         selection: str = UNIFORM_SELECTION) -> list:
    """Run ``budget`` ticks, checking the forest at every quiescent point."""
    sched = Scheduler(graph, policy, rng, events, trace, selection)
    trajectory = []
    for _ in range(budget):
        sched.apply_pending()
        trees = forest(graph)
        if graph.token_count() != len(trees):
            raise GraphError(f"tick {sched.clock}: {graph.token_count()} tokens for {len(trees)} trees")
        out = sched.tick()
        trajectory.append(ForestStats(
            sched.clock - 1, len(trees), len(trees),
            tuple(sorted((t.order for t in trees), reverse=True)),
            out.kind.value if out else None))
    return trajectory


__all__ = [
    "DEFAULT_BUDGET", "ROUNDS_SELECTION", "UNIFORM_SELECTION", "ForestStats", "MalformedEventError", "MergeTimeout", "Scheduler",
    "StepKind", "apply_event", "run_dynamic_scenario", "run_until_merged", "validate_events",
]
