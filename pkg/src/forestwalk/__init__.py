"""Token-based spanning forest maintenance for dynamic networks."""
from .analysis import (
    BridgeSet,
    Distribution,
    avg_degree_expected_merging_time,
    bridges,
    distribution_distance,
    empirical_distribution,
    expected_merging_time,
    markov_exact_merging_time,
    merge_probability,
    stationary_distribution,
)
from .graph_model import (
    EndpointLabel,
    LabelledGraph,
    StructuralCorruption,
    TopologyEvent,
    TreeView,
    VertexState,
    forest,
)
from .protocol import RuleId, StepKind, WalkPolicy, circulate, react_edge_down, step_token, try_merge

__version__ = "0.1.0"
