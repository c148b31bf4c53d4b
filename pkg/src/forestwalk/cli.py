"""Command-line front end.

Every command is batch and non-interactive.  Exit codes: 0 ok, 2 config or
usage error, 3 run dominated by step-budget timeouts, 4 invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import analysis
from .graph_model import GraphError, LabelledGraph, StructuralCorruption, TopologyEvent, forest
from .protocol import WalkPolicy
from .sim.experiments import (
    CSV_COLUMNS,
    ConfigError,
    ScenarioConfig,
    derive_rng,
    run_merge_experiment,
    run_mixing_experiment,
)
from .sim.io import curve_csv, load_config, report_csv, report_json
from .sim.scheduler import MalformedEventError, run_dynamic_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TIMEOUT = 3
EXIT_INVARIANT = 4

CSV_HELP = (
    "CSV output always uses the columns: " + ", ".join(CSV_COLUMNS) + ". "
    "merge-experiment: one row per iteration (measurement merging_steps or timeout). "
    "mixing-experiment: one row per memory level and checkpoint S "
    "(iteration 'mean', measurement distance_pct@S). "
    "simulate: one row per tick (iteration = tick; measurements tokens, trees, largest_tree). "
    "expected/oracle: one row per quantity."
)


class UsageError(Exception):
    pass


def _parse_memory(args):
    if args.memory is not None and args.memory_range is not None:
        raise UsageError("--memory and --memory-range are exclusive")
    if args.memory is not None:
        return (args.memory,)
    if args.memory_range is not None:
        try:
            a, b = (int(x) for x in args.memory_range.split(".."))
        except ValueError:
            raise UsageError(f"--memory-range expects A..B, got {args.memory_range!r}") from None
        if a < 0 or b < a:
            raise UsageError("--memory-range needs 0 <= A <= B")
        return tuple(range(a, b + 1))
    return None


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("FORESTWALK_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"FORESTWALK_SEED is not an integer: {env!r}") from None
    return None


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(rows)
    return buf.getvalue()


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(path, "no such file") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(path, f"invalid JSON: {exc}") from None


def _load_snapshot(path: str) -> LabelledGraph:
    data = _load_json(path)
    try:
        return LabelledGraph.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(path, f"bad snapshot: {exc}") from None


def _config_for(args, kind) -> ScenarioConfig:
    cfg = load_config(args.config)
    if cfg.kind != kind:
        raise ConfigError("kind", f"expected a {kind} config, got {cfg.kind}")
    return cfg.with_overrides(seed=_seed(args), iterations=args.iterations,
                              memory_levels=_parse_memory(args))


def cmd_merge_experiment(args) -> int:
    cfg = _config_for(args, "merge")
    report = run_merge_experiment(cfg, workers=args.workers)
    text = report_json(report) if args.format == "json" else report_csv(report)
    if args.out:
        _emit(text, args.out)
    print(f"{cfg.name}: {cfg.iterations} iterations, seed {cfg.seed}")
    print("memory  mean_steps  sem     timeouts")
    dominated = False
    for n in cfg.memory_levels:
        agg = report.aggregate(n, "merging_steps")
        t = report.timeouts(n)
        dominated |= t * 2 > cfg.iterations
        print(f"{n:<7d} {agg.mean:<11.2f} {agg.sem:<7.2f} {t}")
    return EXIT_TIMEOUT if dominated else EXIT_OK


def cmd_mixing_experiment(args) -> int:
    cfg = _config_for(args, "mixing")
    report = run_mixing_experiment(cfg, workers=args.workers)
    text = report_json(report) if args.format == "json" else curve_csv(report)
    if args.out:
        _emit(text, args.out)
    print(f"{cfg.name}: order {cfg.tree_orders[0]}, {cfg.iterations} runs, seed {cfg.seed}")
    print("steps   " + "  ".join(f"mem{n:<5d}" for n in cfg.memory_levels))
    curves = {n: dict(report.curve(n)) for n in cfg.memory_levels}
    for c in cfg.checkpoints:
        print(f"{c:<7d} " + "  ".join(f"{curves[n][c]:<8.3f}" for n in cfg.memory_levels))
    return EXIT_OK


def _two_trees(graph: LabelledGraph):
    trees = forest(graph)
    if len(trees) != 2:
        raise ConfigError("instance", f"expected exactly two trees, found {len(trees)}")
    return sorted(trees, key=lambda t: min(t.vertices))


def _records(descriptor, records, fmt) -> str:
    if fmt == "json":
        return json.dumps([{"instance_descriptor": descriptor, "quantity": q, "value": v}
                           for q, v in records], indent=2) + "\n"
    return _rows_csv([(descriptor, "uniform", 0, "", "", q, repr(v)) for q, v in records])


def cmd_expected(args) -> int:
    if args.instance:
        graph = _load_snapshot(args.instance)
        t1, t2 = _two_trees(graph)
        b = analysis.bridges(graph, t1, t2)
        if t1.order < 2 or t2.order < 2:
            raise UsageError("both trees need order >= 2")
        value = analysis.expected_merging_time(t1, t2, b)
        descriptor = f"{args.instance}"
        quantity = "expected_merging_time"
    else:
        if args.orders is None or len(args.orders) != 3:
            raise UsageError("give ORDER1 ORDER2 BRIDGES or --instance FILE")
        o1, o2, k = args.orders
        if o1 < 2 or o2 < 2:
            raise UsageError("tree orders must be >= 2")
        if k < 1:
            raise UsageError("need at least one bridge")
        value = analysis.avg_degree_expected_merging_time(o1, o2, k)
        descriptor = f"orders={o1},{o2};bridges={k}"
        quantity = "avg_degree_expected_merging_time"
    if args.format in ("json", "csv"):
        _emit(_records(descriptor, [(quantity, value)], args.format), args.out)
    else:
        print(f"{value:.2f}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    graph = _load_snapshot(args.instance)
    t1, t2 = _two_trees(graph)
    try:
        exact = analysis.markov_exact_merging_time(graph, t1, t2, max_states=args.max_states)
    except analysis.IntractableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    approx = (analysis.expected_merging_time(t1, t2, analysis.bridges(graph, t1, t2))
              if min(t1.order, t2.order) >= 2 else float("nan"))
    records = [("exact_moves_before_merge", exact), ("stationary_expected_merging_time", approx)]
    if args.format in ("json", "csv"):
        _emit(_records(args.instance, records, args.format), args.out)
    else:
        print(f"exact expected moves before merge: {exact:.6f}")
        print(f"stationary approximation:          {approx:.6f}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _load_json(args.config)
    if "graph" not in cfg:
        raise ConfigError("graph", "missing")
    try:
        graph = LabelledGraph.from_dict(cfg["graph"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("graph", str(exc)) from None
    try:
        events = [TopologyEvent.from_dict(e) for e in cfg.get("events", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("events", str(exc)) from None
    memory = args.memory if args.memory is not None else int(cfg.get("memory", 0))
    budget = int(cfg.get("budget", 1000))
    seed = _seed(args)
    seed = int(cfg.get("seed", 0)) if seed is None else seed
    name = str(cfg.get("name", "simulate"))
    trace = open(args.trace, "w") if args.trace else None
    try:
        traj = run_dynamic_scenario(graph, events, WalkPolicy(memory), budget,
                                    derive_rng(seed, 0), trace,
                                    cfg.get("selection", "uniform"))
    except MalformedEventError as exc:
        raise ConfigError("events", str(exc)) from None
    finally:
        if trace:
            trace.close()
    policy = WalkPolicy(memory).kind
    if args.format == "json":
        text = json.dumps({"name": name, "seed": seed, "memory_n": memory,
                           "trajectory": [asdict(s) for s in traj],
                           "final_snapshot": graph.to_dict()}, indent=2) + "\n"
    else:
        rows = []
        for s in traj:
            for m, v in (("tokens", s.tokens), ("trees", s.trees),
                         ("largest_tree", s.orders[0] if s.orders else 0)):
                rows.append((name, policy, memory, seed, s.tick, m, v))
        text = _rows_csv(rows)
    _emit(text, args.out)
    if args.dump:
        Path(args.dump).write_text(graph.to_json(indent=2) + "\n")
    return EXIT_OK


def cmd_validate_snapshot(args) -> int:
    graph = _load_snapshot(args.snapshot)
    trees = forest(graph)
    print(f"valid: {len(graph)} vertices, {graph.edge_count()} edges, {len(trees)} trees")
    for t in sorted(trees, key=lambda t: min(t.vertices)):
        print(f"  tree of order {t.order}, token on {t.token_holder}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="forestwalk", description=__doc__, epilog=CSV_HELP,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, fmt_default="csv"):
        sp.add_argument("--seed", type=int, help="master seed (fallback: $FORESTWALK_SEED)")
        sp.add_argument("--out", help="output file (default: stdout where applicable)")
        sp.add_argument("--format", choices=("csv", "json"), default=fmt_default)

    for name, fn, doc in (("merge-experiment", cmd_merge_experiment, "merging-time experiment"),
                          ("mixing-experiment", cmd_mixing_experiment, "mixing-time curves")):
        sp = sub.add_parser(name, help=doc, epilog=CSV_HELP)
        sp.add_argument("--config", required=True,
                        help="scenario JSON file or bundled name (scenario1, scenario2, mixing)")
        sp.add_argument("--memory", type=int)
        sp.add_argument("--memory-range", metavar="A..B")
        sp.add_argument("--iterations", type=int)
        sp.add_argument("--workers", type=int, default=1)
        common(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("expected", help="stationary expected merging time", epilog=CSV_HELP)
    sp.add_argument("orders", nargs="*", type=int, metavar="ORDER1 ORDER2 BRIDGES")
    sp.add_argument("--instance", help="snapshot JSON holding exactly two trees")
    common(sp, fmt_default=None)
    sp.set_defaults(func=cmd_expected)

    sp = sub.add_parser("oracle", help="exact Markov-chain merging time", epilog=CSV_HELP)
    sp.add_argument("instance", help="snapshot JSON holding exactly two trees")
    sp.add_argument("--max-states", type=int, default=analysis.MAX_ORACLE_STATES)
    common(sp, fmt_default=None)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("simulate", help="run a topology-event schedule", epilog=CSV_HELP)
    sp.add_argument("--config", required=True,
                    help="JSON with graph (snapshot), events, memory, budget, seed")
    sp.add_argument("--memory", type=int)
    sp.add_argument("--trace", help="write rule applications as line-delimited JSON")
    sp.add_argument("--dump", help="write the final graph snapshot here")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("validate-snapshot", help="check a snapshot encodes a valid forest")
    sp.add_argument("snapshot")
    sp.set_defaults(func=cmd_validate_snapshot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StructuralCorruption, GraphError) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
