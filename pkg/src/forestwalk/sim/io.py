"""Config loading and report serialization (JSON and flat CSV)."""
from __future__ import annotations

import csv
import io
import json
from importlib import resources
from pathlib import Path

from .experiments import CSV_COLUMNS, ConfigError, ExperimentReport, ScenarioConfig

BUNDLED = ("scenario1", "scenario2", "mixing")


def bundled_config_text(name: str) -> str:
    return resources.files("forestwalk.scenarios").joinpath(f"{name}.json").read_text()


def load_config(path_or_name) -> ScenarioConfig:
    """Read a config from a JSON file, or by bundled name (``scenario1`` ...)."""
    p = Path(path_or_name)
    if p.exists():
        text = p.read_text()
    elif str(path_or_name) in BUNDLED:
        text = bundled_config_text(str(path_or_name))
    else:
        raise ConfigError("--config", f"no such file or bundled scenario: {path_or_name}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    try:
        return ScenarioConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError("<root>", str(exc)) from None


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def report_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.rows:
        w.writerow([_fmt(x) for x in r.row()])
    return buf.getvalue()


def curve_csv(report: ExperimentReport) -> str:
    """One row per (memory level, checkpoint) carrying the mean distance."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    cfg = report.config
    for n in cfg.memory_levels:
        for steps, mean in report.curve(n):
            policy = "uniform" if n == 0 else "memory"
            w.writerow([cfg.name, policy, n, cfg.seed, "mean", f"distance_pct@{steps}", repr(mean)])
    return buf.getvalue()


def report_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
