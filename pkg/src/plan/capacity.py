"""
Capacity Planning under a Peak-Age Constraint.

Terminals report on average every ``mean_update_period`` seconds over slots
of ``slot_duration`` seconds, so alpha = slot_duration / mean_update_period.
The planner finds the largest population whose peak penalty exceeds the
threshold with probability at most epsilon. Unit conversion between seconds
and slots happens here only; the analytic layer works in slots.
"""

import logging
import math
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.analytic import MAX_PENALTY_ORDER, decompose, peak_violation
from src.model import SystemParams
from src.plan.sweeps import SweepResult
from src.utils.config_loader import config_loader
from src.utils.errors import InternalInconsistencyError

logger = logging.getLogger(__name__)

DEFAULT_CAPACITY_CAP = 100_000_000
SNAP_TOLERANCE = 1e-9


class SlaSpec(BaseModel):
    """
    Service-level agreement on freshness.

    ``theta`` is a staleness bound in seconds; the penalty threshold compared
    with Y^m is (theta / slot_duration)^m.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    slot_duration: float = Field(..., gt=0.0, description="Slot length in seconds")
    mean_update_period: float = Field(..., gt=0.0, description="Mean time between updates in seconds")
    theta: float = Field(..., ge=0.0, allow_inf_nan=False, description="Peak staleness bound in seconds")
    epsilon: float = Field(..., gt=0.0, lt=1.0, description="Allowed violation probability")
    m: int = Field(1, ge=1, le=MAX_PENALTY_ORDER, description="Penalty order")

    @model_validator(mode="after")
    def _check_period(self) -> "SlaSpec":
        if self.mean_update_period < self.slot_duration:
            raise ValueError("Mean update period must be at least one slot")
        return self

    @property
    def alpha(self) -> float:
        return self.slot_duration / self.mean_update_period

    @property
    def theta_slots(self) -> float:
        """Threshold in slots, snapped to an integer when within rounding of one."""
        slots = self.theta / self.slot_duration
        nearest = round(slots)
        if abs(slots - nearest) <= SNAP_TOLERANCE * max(1.0, slots):
            return float(nearest)
        return slots

    @property
    def threshold(self) -> float:
        """Penalty threshold in slots^m."""
        return self.theta_slots**self.m


class CapacityResult(BaseModel):
    """Outcome of a capacity search."""
    model_config = ConfigDict(frozen=True)

    n_star: int
    feasible: bool
    cap_reached: bool
    violation_at_n_star: Optional[float]
    violation_above: float
    alpha: float
    theta_slots: float
    threshold: float
    conversion: List[str]
    search_path: List[Tuple[int, float]]


def _violation(base: SystemParams, n: int, sla: SlaSpec) -> float:
    try:
        params = base.with_terminals(n)
    except ValidationError:
        # p_s underflows to zero: no update ever arrives.
        return 1.0
    return peak_violation(decompose(params), sla.m, sla.threshold)


def capacity(sla: SlaSpec, beta: float, gamma: float, cap: Optional[int] = None) -> CapacityResult:
    """
    Largest n with peak violation at most epsilon.

    Exponential search over n = 1, 2, 4, ... brackets the boundary, then a
    binary search closes it; the violation probability must be nondecreasing
    along the doubling path.

    Args:
        sla: Service-level agreement
        beta: Good-to-bad transition probability
        gamma: Bad-to-good transition probability
        cap: Largest population considered

    Returns:
        CapacityResult; n_star = 0 with feasible=False when even one terminal fails
    """
    cap = cap or int(config_loader.get_configuration_value("plan.capacity_cap", DEFAULT_CAPACITY_CAP))
    conversion = [
        f"alpha = {sla.slot_duration:g} s / {sla.mean_update_period:g} s = {sla.alpha:.6g}",
        f"theta = {sla.theta:g} s / {sla.slot_duration:g} s = {sla.theta_slots:.6g} slots",
        f"penalty threshold = ({sla.theta_slots:.6g} slots)^{sla.m} = {sla.threshold:.6g}",
    ]
    path: List[Tuple[int, float]] = []
    base = SystemParams(n=1, alpha=sla.alpha, beta=beta, gamma=gamma)

    def evaluate(n: int) -> float:
        value = _violation(base, n, sla)
        path.append((n, value))
        return value

    def result(n_star: int, at: Optional[float], above: float, feasible: bool, cap_reached: bool) -> CapacityResult:
        return CapacityResult(
            n_star=n_star,
            feasible=feasible,
            cap_reached=cap_reached,
            violation_at_n_star=at,
            violation_above=above,
            alpha=sla.alpha,
            theta_slots=sla.theta_slots,
            threshold=sla.threshold,
            conversion=conversion,
            search_path=path,
        )

    first = evaluate(1)
    if first > sla.epsilon:
        logger.info(f"SLA infeasible even for a single terminal (violation {first:.3g})")
        return result(0, None, first, feasible=False, cap_reached=False)

    low, low_value = 1, first
    high = None
    high_value = 1.0
    while high is None:
        candidate = min(low * 2, cap)
        if candidate == low:
            logger.warning(f"Capacity search reached the cap n={cap}")
            return result(low, low_value, evaluate(low + 1), feasible=True, cap_reached=True)
        value = evaluate(candidate)
        if value < low_value:
            raise InternalInconsistencyError(
                f"Peak violation decreased from {low_value!r} at n={low} to {value!r} at n={candidate}"
            )
        if value > sla.epsilon:
            high, high_value = candidate, value
        else:
            low, low_value = candidate, value

    while high - low > 1:
        middle = (low + high) // 2
        value = evaluate(middle)
        if value > sla.epsilon:
            high, high_value = middle, value
        else:
            low, low_value = middle, value

    logger.debug(f"Capacity {low} after {len(path)} evaluations")
    return result(low, low_value, high_value, feasible=True, cap_reached=False)


def sweep_capacity(sla: SlaSpec, beta: float, gamma: float, theta_grid: Sequence[float]) -> SweepResult:
    """Supported terminals against the staleness bound (seconds)."""
    supported: List[float] = []
    achieved: List[float] = []
    for theta in theta_grid:
        outcome = capacity(sla.model_copy(update={"theta": float(theta)}), beta, gamma)
        supported.append(float(outcome.n_star))
        achieved.append(outcome.violation_at_n_star if outcome.violation_at_n_star is not None else 1.0)

    metadata: Dict[str, Any] = {
        "kind": "capacity",
        "sla": sla.model_dump(),
        "beta": beta,
        "gamma": gamma,
        "theta_grid": [float(theta) for theta in theta_grid],
    }
    return SweepResult(
        x_label="theta_seconds",
        x_values=[float(theta) for theta in theta_grid],
        series={"supported_nodes": supported, "violation_at_capacity": achieved},
        metadata=metadata,
    )
