"""Bridge consensus: every node converges to the mean of the participating nodes' values.

Non-participating nodes contribute no value but relay information. Each node
runs two coupled consensus filters, one on an information matrix and one on an
information state, and reads its estimate by solving the resulting system.
"""

from .bridge import (
    Estimate,
    InfoPair,
    PriorWeight,
    bridge_step,
    extract_estimate,
    init_information,
    ml_mean_oracle,
    naive_init_baseline,
    participating_average,
)
from .consensus import RoundInput, disagreement, global_step, local_update, run
from .graph import (
    GraphSchedule,
    Topology,
    WeightKind,
    WeightPolicy,
    adjacency_matrix,
    is_balanced,
    laplacian,
    max_degree,
    psi,
    union_strongly_connected,
)
from .sim import Scenario, load_scenario, run_scenario, validate, write_trace

__all__ = [
    "Estimate", "InfoPair", "PriorWeight", "bridge_step", "extract_estimate", "init_information",
    "ml_mean_oracle", "naive_init_baseline", "participating_average",
    "RoundInput", "disagreement", "global_step", "local_update", "run",
    "GraphSchedule", "Topology", "WeightKind", "WeightPolicy", "adjacency_matrix", "is_balanced",
    "laplacian", "max_degree", "psi", "union_strongly_connected",
    "Scenario", "load_scenario", "run_scenario", "validate", "write_trace",
]
