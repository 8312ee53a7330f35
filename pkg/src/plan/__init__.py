"""
Design studies: load and burstiness sweeps, optimal load and capacity planning.
"""

from .capacity import CapacityResult, SlaSpec, capacity, sweep_capacity
from .sweeps import (
    ChannelSpec,
    SweepResult,
    default_load_grid,
    linear_grid,
    log_grid,
    optimal_load,
    regenerate_sweep,
    sweep_gamma_ratio,
    sweep_load,
    sweep_peak_ccdf,
)

__all__ = [
    "CapacityResult",
    "ChannelSpec",
    "SlaSpec",
    "SweepResult",
    "capacity",
    "default_load_grid",
    "linear_grid",
    "log_grid",
    "optimal_load",
    "regenerate_sweep",
    "sweep_capacity",
    "sweep_gamma_ratio",
    "sweep_load",
    "sweep_peak_ccdf",
]
