"""
Scenario File Schema.

A scenario is a JSON object with the required ``n``, ``alpha``, ``beta`` and
``gamma`` keys plus optional penalty, simulation, sweep and SLA blocks.
Unknown keys are rejected at every level so that typos fail loudly.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.analytic import MAX_PENALTY_ORDER
from src.model import SystemParams
from src.plan import SlaSpec
from src.sim import SimConfig, SimMode

logger = logging.getLogger(__name__)


class StrictBlock(BaseModel):
    """Base for scenario blocks: frozen, unknown keys rejected."""
    model_config = ConfigDict(frozen=True, extra="forbid")


class SimulationBlock(StrictBlock):
    """Simulation settings of a scenario."""
    mode: SimMode = SimMode.DECOUPLED
    slots: Optional[int] = Field(None, ge=1)
    cycles: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = Field(None, ge=0, lt=2**64)
    warmup: Optional[int] = Field(None, ge=0)
    thresholds: Dict[int, List[float]] = Field(default_factory=dict)
    track_pmf_to: int = Field(0, ge=0)
    replications: int = Field(1, ge=1)


class SweepBlock(StrictBlock):
    """Sweep settings of a scenario."""
    kind: Optional[Literal["load", "gamma-ratio", "peak-ccdf", "capacity"]] = None
    pi_g: Optional[float] = Field(None, gt=0.0, le=1.0)
    load: Optional[float] = Field(None, gt=0.0)
    load_start: Optional[float] = Field(None, gt=0.0)
    load_stop: Optional[float] = Field(None, gt=0.0)
    load_step: Optional[float] = Field(None, gt=0.0)
    gammas: Optional[List[float]] = None
    m_list: Optional[List[int]] = None
    theta_start_decade: Optional[float] = None
    theta_stop_decade: Optional[float] = None
    theta_points_per_decade: Optional[int] = Field(None, ge=1)


class SlaBlock(StrictBlock):
    """Capacity-planning agreement in natural units."""
    slot_ms: float = Field(..., gt=0.0)
    period_s: float = Field(..., gt=0.0)
    theta_s: float = Field(..., ge=0.0)
    epsilon: float = Field(..., gt=0.0, lt=1.0)
    m: int = Field(1, ge=1, le=MAX_PENALTY_ORDER)

    def to_sla(self) -> SlaSpec:
        return SlaSpec(
            slot_duration=self.slot_ms / 1000.0,
            mean_update_period=self.period_s,
            theta=self.theta_s,
            epsilon=self.epsilon,
            m=self.m,
        )


class ScenarioFile(StrictBlock):
    """Top-level scenario object."""
    n: int
    alpha: float
    beta: float
    gamma: float
    m: Union[int, List[int]] = 1
    theta: Optional[float] = Field(None, ge=0.0)
    simulation: Optional[SimulationBlock] = None
    sweep: Optional[SweepBlock] = None
    sla: Optional[SlaBlock] = None

    @field_validator("m")
    @classmethod
    def _check_orders(cls, value: Union[int, List[int]]) -> Union[int, List[int]]:
        orders = [value] if isinstance(value, int) else value
        if not orders or any(not 1 <= m <= MAX_PENALTY_ORDER for m in orders):
            raise ValueError(f"Penalty orders must lie in 1..{MAX_PENALTY_ORDER}")
        return value

    @property
    def orders(self) -> List[int]:
        return [self.m] if isinstance(self.m, int) else list(self.m)

    def params(self) -> SystemParams:
        return SystemParams(n=self.n, alpha=self.alpha, beta=self.beta, gamma=self.gamma)

    def simulation_block(self, **overrides: Any) -> SimulationBlock:
        """Simulation block with command-line overrides applied (None leaves a key as is)."""
        block = self.simulation or SimulationBlock()
        changes = {key: value for key, value in overrides.items() if value is not None}
        return SimulationBlock.model_validate({**block.model_dump(), **changes}) if changes else block

    def sim_config(self, default_seed: int, block: Optional[SimulationBlock] = None) -> SimConfig:
        """Simulation configuration; thresholds default to theta for every order."""
        block = block or self.simulation or SimulationBlock()
        thresholds = dict(block.thresholds)
        if not thresholds and self.theta is not None:
            thresholds = {m: [self.theta] for m in self.orders}
        if block.mode is SimMode.FULL:
            budget = {"slots": block.slots or 1_000_000}
        else:
            budget = {"cycles": block.cycles or 100_000}
        return SimConfig(
            mode=block.mode,
            warmup_slots=block.warmup,
            seed=block.seed if block.seed is not None else default_seed,
            penalty_orders=tuple(self.orders),
            thresholds=thresholds,
            track_pmf_to=block.track_pmf_to,
            **budget,
        )


def load_scenario(path: Union[str, Path]) -> ScenarioFile:
    """
    Read and validate a scenario file.

    Raises:
        pydantic.ValidationError: Schema violations, including unknown keys
        ValueError: The file is not valid JSON
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"Scenario {path} is not valid JSON: {e}") from e
    scenario = ScenarioFile.model_validate(raw)
    logger.debug(f"Loaded scenario from {path}: n={scenario.n}, alpha={scenario.alpha}")
    return scenario
