"""
Monte Carlo simulators of the tagged source and of the whole network.
"""

from .config import SimConfig, SimMode, replication_generator
from .decoupled import sample_cycles, simulate_decoupled
from .full_system import NodeState, simulate_full
from .runner import ComparisonRow, ReplicationRunner, compare_with_analytic, run_replications, simulate_replication
from .statistics import (
    CycleAccumulator,
    DeliveryBatch,
    ExceedanceCount,
    SimEstimate,
    StatisticsBundle,
    merge,
    peak_violation_name,
)

__all__ = [
    "ComparisonRow",
    "CycleAccumulator",
    "DeliveryBatch",
    "ExceedanceCount",
    "NodeState",
    "ReplicationRunner",
    "SimConfig",
    "SimEstimate",
    "SimMode",
    "StatisticsBundle",
    "compare_with_analytic",
    "merge",
    "peak_violation_name",
    "replication_generator",
    "run_replications",
    "sample_cycles",
    "simulate_decoupled",
    "simulate_full",
    "simulate_replication",
]
