"""Seeded merging-time and mixing-time experiments.

Every iteration draws from its own random streams, derived from the master
seed and the iteration index, so results do not depend on how iterations are
spread over worker processes.
"""
from __future__ import annotations

import math
import random
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

from ..analysis import distribution_distance, empirical_distribution, stationary_distribution
from ..graph_model import LabelledGraph, forest
from ..protocol import StepKind, WalkPolicy, step_token
from .generators import random_tree, two_tree_instance
from .scheduler import (
    DEFAULT_BUDGET,
    ROUNDS_SELECTION,
    UNIFORM_SELECTION,
    MergeTimeout,
    run_until_merged,
)

MERGE = "merge"
MIXING = "mixing"
CSV_COLUMNS = ("scenario", "policy", "memory_n", "seed", "iteration", "measurement", "value")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def derive_rng(seed: int, *keys: int) -> random.Random:
    """Independent stream for ``(seed, *keys)``; string seeds are hashed with SHA-512."""
    return random.Random(":".join(map(str, ("forestwalk", seed, *keys))))


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    kind: str = MERGE
    tree_orders: tuple = (20, 8)
    bridges: int = 3
    memory_levels: tuple = (0,)
    seed: int = 0
    iterations: int = 1
    budget: int = DEFAULT_BUDGET
    checkpoints: tuple = ()
    instance: Optional[dict] = None
    selection: str = UNIFORM_SELECTION

    def __post_init__(self):
        if self.kind not in (MERGE, MIXING):
            raise ConfigError("kind", f"expected 'merge' or 'mixing', got {self.kind!r}")
        if self.iterations < 1:
            raise ConfigError("iterations", "must be >= 1")
        if self.selection not in (UNIFORM_SELECTION, ROUNDS_SELECTION):
            raise ConfigError("selection", "expected 'uniform' or 'rounds'")
        if self.budget < 1:
            raise ConfigError("budget", "must be >= 1")
        if not self.memory_levels or any(n < 0 for n in self.memory_levels):
            raise ConfigError("memory_levels", "need one or more nonnegative levels")
        if self.kind == MERGE and self.instance is None:
            if len(self.tree_orders) != 2 or min(self.tree_orders) < 1:
                raise ConfigError("tree_orders", "merge scenarios need two orders >= 1")
            if not 1 <= self.bridges <= self.tree_orders[0] * self.tree_orders[1]:
                raise ConfigError("bridges", "must be between 1 and order1*order2")
        if self.kind == MIXING:
            if len(self.tree_orders) != 1 or self.tree_orders[0] < 2:
                raise ConfigError("tree_orders", "mixing scenarios need one order >= 2")
            if not self.checkpoints:
                raise ConfigError("checkpoints", "must not be empty")
            if any(c < 1 for c in self.checkpoints) or any(
                    b <= a for a, b in zip(self.checkpoints, self.checkpoints[1:])):
                raise ConfigError("checkpoints", "must be positive and strictly increasing")

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown field")
        kw = dict(data)
        try:
            for key in ("tree_orders", "memory_levels", "checkpoints"):
                if key in kw:
                    kw[key] = tuple(int(x) for x in kw[key])
            for key in ("bridges", "seed", "iterations", "budget"):
                if key in kw:
                    kw[key] = int(kw[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(key, str(exc)) from None
        if "name" not in kw:
            raise ConfigError("name", "missing")
        return cls(**kw)

    def with_overrides(self, **kw) -> "ScenarioConfig":
        data = asdict(self)
        data.update({k: v for k, v in kw.items() if v is not None})
        return ScenarioConfig.from_dict(data)

    def to_dict(self) -> dict:
        data = asdict(self)
        if data["instance"] is None:
            del data["instance"]
        for key in ("tree_orders", "memory_levels", "checkpoints"):
            data[key] = list(data[key])
        return data


@dataclass(frozen=True)
class Measurement:
    scenario: str
    policy: str
    memory_n: int
    seed: int
    iteration: object
    measurement: str
    value: float

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in CSV_COLUMNS)


@dataclass(frozen=True)
class Aggregate:
    count: int
    mean: float
    std: float
    sem: float

    @classmethod
    def of(cls, values) -> "Aggregate":
        values = list(values)
        n = len(values)
        if n == 0:
            return cls(0, math.nan, math.nan, math.nan)
        mean = math.fsum(values) / n
        std = statistics.stdev(values) if n > 1 else 0.0
        return cls(n, mean, std, std / math.sqrt(n))


@dataclass
class ExperimentReport:
    config: ScenarioConfig
    rows: list = field(default_factory=list)

    @property
    def seed(self) -> int:
        return self.config.seed

    def values(self, memory_n: int, measurement: str) -> list:
        return [r.value for r in self.rows
                if r.memory_n == memory_n and r.measurement == measurement]

    def aggregate(self, memory_n: int, measurement: str) -> Aggregate:
        return Aggregate.of(self.values(memory_n, measurement))

    def aggregates(self) -> dict:
        keys = sorted({(r.memory_n, r.measurement) for r in self.rows},
                      key=lambda k: (k[0], _measure_sort_key(k[1])))
        return {k: self.aggregate(*k) for k in keys}

    def timeouts(self, memory_n: Optional[int] = None) -> int:
        return sum(1 for r in self.rows if r.measurement == "timeout"
                   and (memory_n is None or r.memory_n == memory_n))

    def merging_means(self) -> dict:
        return {n: self.aggregate(n, "merging_steps").mean for n in self.config.memory_levels}

    def curve(self, memory_n: int) -> list:
        """Mean distance (percent) at each checkpoint for one memory level."""
        return [(c, self.aggregate(memory_n, f"distance_pct@{c}").mean)
                for c in self.config.checkpoints]

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "seed": self.seed,
            "aggregates": [
                {"memory_n": n, "measurement": m, **asdict(a)}
                for (n, m), a in self.aggregates().items()
            ],
            "rows": [dict(zip(CSV_COLUMNS, r.row())) for r in self.rows],
        }


def _measure_sort_key(m: str):
    if "@" in m:
        name, at = m.split("@")
        return (name, int(at))
    return (m, 0)


def _policy_label(n: int) -> str:
    return str(WalkPolicy(n).kind)


# -- merging time -------------------------------------------------------

def merge_instance(config: ScenarioConfig, iteration: int) -> LabelledGraph:
    if config.instance is not None:
        return LabelledGraph.from_dict(config.instance)
    o1, o2 = config.tree_orders
    return two_tree_instance(o1, o2, config.bridges, derive_rng(config.seed, iteration, 0))


def merge_iteration(config: ScenarioConfig, memory_n: int, iteration: int) -> Measurement:
    graph = merge_instance(config, iteration)
    rng = derive_rng(config.seed, iteration, 1)
    try:
        steps = run_until_merged(graph, WalkPolicy(memory_n), rng, config.budget,
                                 selection=config.selection)
        name = "merging_steps"
    except MergeTimeout as exc:
        steps, name = exc.steps, "timeout"
    return Measurement(config.name, _policy_label(memory_n), memory_n, config.seed,
                       iteration, name, float(steps))


def _merge_chunk(args) -> list:
    config, memory_n, indices = args
    return [merge_iteration(config, memory_n, i) for i in indices]


def check_merge_instance(graph: LabelledGraph) -> None:
    from ..analysis import bridges

    trees = forest(graph)
    if len(trees) != 2:
        raise ConfigError("instance", f"expected exactly 2 trees, found {len(trees)}")
    if not len(bridges(graph, *trees)):
        raise ConfigError("instance", "the two trees share no bridge")


# -- mixing time --------------------------------------------------------

def mixing_run(order: int, memory_n: int, checkpoints, tree_rng, walk_rng) -> list:
    """Distance (percent) between token occupancy and the stationary law.

    Occupancy at checkpoint ``S`` counts the token holder after each of the
    first ``S`` moves.
    """
    graph, tree = random_tree(order, tree_rng)
    target = stationary_distribution(tree)
    policy = WalkPolicy(memory_n)
    counts = dict.fromkeys(tree.vertices, 0)
    holder = tree.token_holder
    out = []
    steps = 0
    for c in checkpoints:
        while steps < c:
            res = step_token(graph, holder, policy, walk_rng)
            if res.kind is not StepKind.MOVED:
                raise RuntimeError(f"unexpected {res.kind.value} on a single tree")
            holder = res.vertex
            counts[holder] += 1
            steps += 1
        out.append(distribution_distance(empirical_distribution(counts), target))
    return out


def mixing_iteration(config: ScenarioConfig, memory_n: int, iteration: int) -> list:
    dists = mixing_run(config.tree_orders[0], memory_n, config.checkpoints,
                       derive_rng(config.seed, iteration, 0),
                       derive_rng(config.seed, iteration, 1))
    return [Measurement(config.name, _policy_label(memory_n), memory_n, config.seed,
                        iteration, f"distance_pct@{c}", d)
            for c, d in zip(config.checkpoints, dists)]


def _mixing_chunk(args) -> list:
    config, memory_n, indices = args
    rows = []
    for i in indices:
        rows += mixing_iteration(config, memory_n, i)
    return rows


# -- drivers ------------------------------------------------------------

def _run(config: ScenarioConfig, chunk_fn, workers: int) -> ExperimentReport:
    tasks = []
    size = max(1, math.ceil(config.iterations / max(1, workers) / 4))
    for n in config.memory_levels:
        for start in range(0, config.iterations, size):
            tasks.append((config, n, list(range(start, min(start + size, config.iterations)))))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(chunk_fn, tasks))
    else:
        chunks = [chunk_fn(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    order = {n: k for k, n in enumerate(config.memory_levels)}
    rows.sort(key=lambda r: (order[r.memory_n], r.iteration, _measure_sort_key(r.measurement)))
    return ExperimentReport(config, rows)


def run_merge_experiment(config: ScenarioConfig, workers: int = 1) -> ExperimentReport:
    if config.kind != MERGE:
        raise ConfigError("kind", "not a merge scenario")
    if config.instance is not None:
        check_merge_instance(LabelledGraph.from_dict(config.instance))
    return _run(config, _merge_chunk, workers)


def run_mixing_experiment(config: ScenarioConfig, workers: int = 1) -> ExperimentReport:
    if config.kind != MIXING:
        raise ConfigError("kind", "not a mixing scenario")
    return _run(config, _mixing_chunk, workers)


def run_experiment(config: ScenarioConfig, workers: int = 1) -> ExperimentReport:
    if config.kind == MERGE:
        return run_merge_experiment(config, workers)
    return run_mixing_experiment(config, workers)
