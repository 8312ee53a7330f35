"""
Parameter Sweeps over Load, Burstiness and Threshold.

Every sweep returns a ``SweepResult`` whose metadata records the sweep kind
and all inputs, so ``regenerate_sweep`` can rebuild it exactly.
"""

import logging
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.analytic import avg_penalty, decompose, peak_violation
from src.model import SystemParams, stationary_good
from src.utils.config_loader import config_loader
from src.utils.errors import InternalInconsistencyError, InvalidParametersError

logger = logging.getLogger(__name__)

GRID_DECIMALS = 10


class SweepResult(BaseModel):
    """Ordered x values with one named series of equal length per curve."""
    model_config = ConfigDict(frozen=True)

    x_label: str
    x_values: List[float]
    series: Dict[str, List[float]]
    metadata: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_lengths(self) -> "SweepResult":
        for name, values in self.series.items():
            if len(values) != len(self.x_values):
                raise ValueError(f"Series '{name}' has {len(values)} values for {len(self.x_values)} x values")
        return self

    @property
    def kind(self) -> Optional[str]:
        return self.metadata.get("kind")

    def argmin(self, name: str) -> float:
        """x value at which a series is smallest."""
        return self.x_values[int(np.argmin(self.series[name]))]


class ChannelSpec(BaseModel):
    """Gilbert-Elliot transition probabilities of one curve."""
    model_config = ConfigDict(frozen=True)

    beta: float = Field(..., ge=0.0, le=1.0)
    gamma: float = Field(..., gt=0.0, le=1.0)

    @classmethod
    def from_pi_g(cls, pi_g: float, gamma: float) -> "ChannelSpec":
        """Channel with stationary good probability pi_g: beta = gamma (1 - pi_g) / pi_g."""
        return cls(beta=gamma * (1.0 - pi_g) / pi_g, gamma=gamma)

    @property
    def pi_g(self) -> float:
        return stationary_good(self.beta, self.gamma)

    @property
    def label(self) -> str:
        return f"beta={self.beta:g} gamma={self.gamma:g}"


def linear_grid(start: float, stop: float, step: float) -> List[float]:
    """Inclusive arithmetic grid, rounded so that nominal points are exact decimals."""
    if step <= 0.0 or stop < start:
        raise InvalidParametersError(f"Invalid grid start={start}, stop={stop}, step={step}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [float(v) for v in np.round(start + step * np.arange(count), GRID_DECIMALS)]


def log_grid(start_decade: float, stop_decade: float, points_per_decade: Optional[int] = None) -> List[float]:
    """Logarithmic grid from 10^start_decade to 10^stop_decade."""
    if points_per_decade is None:
        points_per_decade = int(config_loader.get_configuration_value("plan.theta_points_per_decade", 50))
    if stop_decade < start_decade or points_per_decade < 1:
        raise InvalidParametersError("Logarithmic grid needs stop >= start and a positive density")
    count = int(round((stop_decade - start_decade) * points_per_decade)) + 1
    return [float(v) for v in np.logspace(start_decade, stop_decade, count)]


def default_load_grid() -> List[float]:
    grid = config_loader.get_configuration_value("plan.load_grid", {}) or {}
    return linear_grid(float(grid.get("start", 0.05)), float(grid.get("stop", 3.0)), float(grid.get("step", 0.01)))


def _channels(channels: Union[ChannelSpec, Sequence[ChannelSpec]]) -> List[ChannelSpec]:
    if isinstance(channels, ChannelSpec):
        return [channels]
    return list(channels)


def _penalty_at_load(n: int, load: float, channel: ChannelSpec, m: int) -> float:
    params = SystemParams.from_load(n, load, channel.beta, channel.gamma)
    return avg_penalty(decompose(params), m)


def sweep_load(
    n: int,
    channels: Union[ChannelSpec, Sequence[ChannelSpec]],
    m: int,
    load_grid: Optional[Sequence[float]] = None,
) -> SweepResult:
    """
    Average penalty of order m against the channel load n alpha.

    A load is skipped, with a record in ``metadata["skipped"]``, when it gives
    an invalid scenario for any of the channels.
    """
    channel_list = _channels(channels)
    grid = list(load_grid) if load_grid is not None else default_load_grid()
    x_values: List[float] = []
    series: Dict[str, List[float]] = {channel.label: [] for channel in channel_list}
    skipped: List[Dict[str, Any]] = []

    for load in grid:
        try:
            values = [_penalty_at_load(n, load, channel, m) for channel in channel_list]
        except (ValidationError, InvalidParametersError) as e:
            logger.warning(f"Skipping load {load}: {e}")
            skipped.append({"x": load, "reason": str(e).splitlines()[0]})
            continue
        x_values.append(load)
        for channel, value in zip(channel_list, values):
            series[channel.label].append(value)

    return SweepResult(
        x_label="load",
        x_values=x_values,
        series=series,
        metadata={
            "kind": "load",
            "n": n,
            "m": m,
            "channels": [channel.model_dump() for channel in channel_list],
            "grid": grid,
            "skipped": skipped,
        },
    )


def sweep_gamma_ratio(
    n: int,
    pi_g: float,
    load: float,
    gamma_grid: Sequence[float],
    m_list: Sequence[int],
) -> SweepResult:
    """
    Penalty for each gamma relative to gamma = 1, at fixed pi_g and load.

    beta follows gamma as gamma (1 - pi_g) / pi_g so the good-state fraction
    stays fixed while the bursts lengthen.
    """
    references = {m: _penalty_at_load(n, load, ChannelSpec.from_pi_g(pi_g, 1.0), m) for m in m_list}
    x_values: List[float] = []
    series: Dict[str, List[float]] = {f"m={m}": [] for m in m_list}
    skipped: List[Dict[str, Any]] = []

    for gamma in gamma_grid:
        try:
            channel = ChannelSpec.from_pi_g(pi_g, gamma)
            values = [_penalty_at_load(n, load, channel, m) / references[m] for m in m_list]
        except (ValidationError, InvalidParametersError) as e:
            logger.warning(f"Skipping gamma {gamma}: {e}")
            skipped.append({"x": gamma, "reason": str(e).splitlines()[0]})
            continue
        x_values.append(float(gamma))
        for m, value in zip(m_list, values):
            series[f"m={m}"].append(value)

    return SweepResult(
        x_label="gamma",
        x_values=x_values,
        series=series,
        metadata={
            "kind": "gamma-ratio",
            "n": n,
            "pi_g": pi_g,
            "load": load,
            "gamma_grid": list(gamma_grid),
            "m_list": list(m_list),
            "skipped": skipped,
        },
    )


def sweep_peak_ccdf(
    n: int,
    pi_g: float,
    load: float,
    gamma_list: Sequence[float],
    m: int,
    theta_grid: Sequence[float],
) -> SweepResult:
    """Peak violation probability against the threshold, one series per gamma."""
    series: Dict[str, List[float]] = {}
    for gamma in gamma_list:
        channel = ChannelSpec.from_pi_g(pi_g, gamma)
        decomp = decompose(SystemParams.from_load(n, load, channel.beta, channel.gamma))
        series[f"gamma={gamma:g}"] = [peak_violation(decomp, m, theta) for theta in theta_grid]

    return SweepResult(
        x_label="theta",
        x_values=[float(theta) for theta in theta_grid],
        series=series,
        metadata={
            "kind": "peak-ccdf",
            "n": n,
            "pi_g": pi_g,
            "load": load,
            "gamma_list": list(gamma_list),
            "m": m,
            "theta_grid": list(theta_grid),
        },
    )


def optimal_load(
    n: int,
    beta: float,
    gamma: float,
    m: int,
    load_grid: Optional[Sequence[float]] = None,
) -> float:
    """
    Load minimising the average penalty, 1 / pi_G.

    The analytic value is confirmed by a grid argmin of the penalty; a
    disagreement beyond the grid spacing raises InternalInconsistencyError.
    """
    channel = ChannelSpec(beta=beta, gamma=gamma)
    analytic = 1.0 / channel.pi_g
    result = sweep_load(n, channel, m, load_grid)
    if len(result.x_values) < 2:
        raise InvalidParametersError("Load grid has fewer than two valid points")

    numeric = result.argmin(channel.label)
    resolution = float(np.max(np.diff(result.x_values)))
    logger.debug(f"Optimal load analytic={analytic}, grid argmin={numeric}, resolution={resolution}")
    inside = result.x_values[0] <= analytic <= result.x_values[-1]
    if inside and abs(numeric - analytic) > resolution * (1.0 + 1e-9):
        raise InternalInconsistencyError(
            f"Grid argmin {numeric} disagrees with 1/pi_G = {analytic} beyond the resolution {resolution}"
        )
    return analytic


def regenerate_sweep(result: SweepResult) -> SweepResult:
    """Recompute a sweep from the inputs recorded in its metadata."""
    meta = result.metadata
    kind = meta.get("kind")
    if kind == "load":
        channels = [ChannelSpec(**channel) for channel in meta["channels"]]
        return sweep_load(meta["n"], channels, meta["m"], meta["grid"])
    if kind == "gamma-ratio":
        return sweep_gamma_ratio(meta["n"], meta["pi_g"], meta["load"], meta["gamma_grid"], meta["m_list"])
    if kind == "peak-ccdf":
        return sweep_peak_ccdf(
            meta["n"], meta["pi_g"], meta["load"], meta["gamma_list"], meta["m"], meta["theta_grid"]
        )
    if kind == "capacity":
        from src.plan.capacity import SlaSpec, sweep_capacity

        return sweep_capacity(SlaSpec(**meta["sla"]), meta["beta"], meta["gamma"], meta["theta_grid"])
    raise InvalidParametersError(f"Unknown sweep kind {kind!r}")
