"""
Simulation settings and the random stream contract.

Replication r of a run with seed s draws from a Philox generator keyed by the
seed sequence (s, r), so every replication is reproducible on its own and the
merged result does not depend on how replications were scheduled.
"""

import logging
import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.analytic.penalties import MAX_PENALTY_ORDER
from src.model import SystemParams
from src.utils.config_loader import config_loader

logger = logging.getLogger(__name__)

DEFAULT_WARMUP_CYCLES = 10


class SimMode(str, Enum):
    """Which system is simulated."""
    FULL = "full"
    DECOUPLED = "decoupled"


class SimConfig(BaseModel):
    """
    Budget, seed and requested statistics of one simulation run.

    ``slots`` is the budget of the full-system mode and ``cycles`` the budget
    of the decoupled mode. ``thresholds`` maps a penalty order to the peak
    thresholds (slots^m) whose violation frequency is tracked.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    mode: SimMode = SimMode.DECOUPLED
    slots: Optional[int] = Field(None, ge=1)
    cycles: Optional[int] = Field(None, ge=1)
    warmup_slots: Optional[int] = Field(None, ge=0)
    seed: int = Field(1, ge=0, lt=2**64)
    penalty_orders: Tuple[int, ...] = (1,)
    thresholds: Dict[int, Tuple[float, ...]] = Field(default_factory=dict)
    track_pmf_to: int = Field(0, ge=0)

    @field_validator("penalty_orders")
    @classmethod
    def _check_orders(cls, orders: Tuple[int, ...]) -> Tuple[int, ...]:
        for m in orders:
            if not 1 <= m <= MAX_PENALTY_ORDER:
                raise ValueError(f"Penalty order {m} outside 1..{MAX_PENALTY_ORDER}")
        return tuple(sorted(set(orders)))

    @field_validator("thresholds")
    @classmethod
    def _check_thresholds(cls, thresholds: Dict[int, Tuple[float, ...]]) -> Dict[int, Tuple[float, ...]]:
        cleaned = {}
        for m in sorted(thresholds):
            if not 1 <= m <= MAX_PENALTY_ORDER:
                raise ValueError(f"Threshold order {m} outside 1..{MAX_PENALTY_ORDER}")
            values = tuple(sorted(set(float(t) for t in thresholds[m])))
            if any(not math.isfinite(t) or t < 0.0 for t in values):
                raise ValueError(f"Thresholds for order {m} must be finite and nonnegative")
            cleaned[m] = values
        return cleaned

    @model_validator(mode="after")
    def _check_budget(self) -> "SimConfig":
        if self.mode is SimMode.FULL:
            if self.slots is None or self.cycles is not None:
                raise ValueError("Full-system mode takes a slot budget ('slots') only")
            if self.warmup_slots is not None and self.slots <= self.warmup_slots:
                raise ValueError(f"Slot budget {self.slots} must exceed the warmup {self.warmup_slots}")
        else:
            if self.cycles is None or self.slots is not None:
                raise ValueError("Decoupled mode takes a cycle budget ('cycles') only")
        if not (self.penalty_orders or self.thresholds or self.track_pmf_to):
            raise ValueError("At least one statistic must be requested")
        return self

    @property
    def budget(self) -> int:
        return self.slots if self.mode is SimMode.FULL else self.cycles

    def threshold_pairs(self) -> List[Tuple[int, float]]:
        """(m, theta) pairs in a fixed order."""
        return [(m, theta) for m in sorted(self.thresholds) for theta in self.thresholds[m]]

    def resolve_warmup(self, params: SystemParams) -> int:
        """Explicit warmup, else a multiple of the analytic mean cycle 1 / (pi_G p_s)."""
        if self.warmup_slots is not None:
            return self.warmup_slots
        multiple = float(config_loader.get_configuration_value("simulation.warmup_cycles", DEFAULT_WARMUP_CYCLES))
        return int(math.ceil(multiple / (params.pi_g * params.p_s)))


def replication_generator(seed: int, replication: int) -> np.random.Generator:
    """Counter-based generator for replication ``replication`` of run ``seed``."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(replication,))
    return np.random.Generator(np.random.Philox(sequence))
