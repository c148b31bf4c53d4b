from .experiments import (
    ConfigError,
    ExperimentReport,
    ScenarioConfig,
    run_experiment,
    run_merge_experiment,
    run_mixing_experiment,
)
from .generators import add_random_bridges, random_tree, two_tree_instance
from .scheduler import MergeTimeout, Scheduler, run_dynamic_scenario, run_until_merged
