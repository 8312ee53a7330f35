"""
Statistics Bundles for Simulated Update Cycles.

A bundle stores sufficient statistics rather than estimates: exact integer
power sums of the cycle lengths, violation counts, a PMF histogram and
per-batch delivery counts. Merging replications is integer addition, so the
pooled result is exact and independent of grouping; estimates and standard
errors are derived on demand.
"""

import logging
import math
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.analytic.penalties import floor_root
from src.model import SystemParams
from src.sim.config import SimConfig
from src.utils.errors import InsufficientSamplesError, InvalidParametersError

logger = logging.getLogger(__name__)


class SimEstimate(BaseModel):
    """Point estimate with its standard error and sample count."""
    model_config = ConfigDict(frozen=True)

    mean: float
    std_error: float = Field(..., ge=0.0)
    samples: int = Field(..., ge=1)
    elapsed_slots: int = Field(..., ge=0)


class ExceedanceCount(BaseModel):
    """Number of cycles whose peak Y^m exceeded theta."""
    model_config = ConfigDict(frozen=True)

    m: int
    theta: float
    exceed: int = Field(..., ge=0)


def peak_violation_name(m: int, theta: float) -> str:
    """Report key of a peak-violation statistic; repr keeps distinct thresholds distinct."""
    return f"peak_violation[m={m},theta={float(theta)!r}]"


class DeliveryBatch(BaseModel):
    """Tagged deliveries counted over one batch of measured slots."""
    model_config = ConfigDict(frozen=True)

    deliveries: int = Field(..., ge=0)
    slots: int = Field(..., ge=1)


def required_powers(config: SimConfig) -> List[int]:
    """Exponents p whose sums of y^p the estimators need."""
    powers: Set[int] = {1, 2}
    for m in config.penalty_orders:
        powers.update((m + 1, m + 2, 2 * m + 2))
    return sorted(powers)


def _sqrt_ratio(numerator: int, denominator: int) -> float:
    return math.sqrt(float(Fraction(max(numerator, 0), denominator)))


class StatisticsBundle(BaseModel):
    """Sufficient statistics of one or more replications."""
    model_config = ConfigDict(frozen=True)

    params: SystemParams
    config: SimConfig
    replications: Tuple[int, ...]
    cycles: int = Field(..., ge=1)
    elapsed_slots: int = Field(..., ge=0)
    warmup_slots: int = Field(0, ge=0)
    power_sums: Dict[int, int]
    exceedances: Tuple[ExceedanceCount, ...] = ()
    histogram: Tuple[int, ...] = ()
    delivery_batches: Tuple[DeliveryBatch, ...] = ()

    def _estimate(self, mean: float, std_error: float) -> SimEstimate:
        return SimEstimate(mean=mean, std_error=std_error, samples=self.cycles, elapsed_slots=self.elapsed_slots)

    def mean_cycle(self) -> SimEstimate:
        """Sample mean of Y."""
        n, s1, s2 = self.cycles, self.power_sums[1], self.power_sums[2]
        return self._estimate(s1 / n, _sqrt_ratio(n * s2 - s1 * s1, n**3))

    def avg_penalty(self, m: int) -> SimEstimate:
        """
        Ratio estimator sum(Y^(m+1)/(m+1)) / sum(Y) of the average penalty.

        The standard error follows from the delta method on the cycle pairs
        (Y^(m+1)/(m+1), Y), computed from exact power sums.
        """
        if m not in self.config.penalty_orders:
            raise InvalidParametersError(f"Penalty order {m} was not tracked (tracked: {self.config.penalty_orders})")
        a = m + 1
        s1, s2 = self.power_sums[1], self.power_sums[2]
        sa, sa1, s2a = self.power_sums[a], self.power_sums[a + 1], self.power_sums[2 * a]
        spread = s2a * s1 * s1 - 2 * sa * sa1 * s1 + sa * sa * s2
        return self._estimate(float(Fraction(sa, a * s1)), _sqrt_ratio(spread, a * a * s1**4))

    def peak_violation(self, m: int, theta: float) -> SimEstimate:
        """Fraction of cycles with Y^m > theta."""
        for record in self.exceedances:
            if record.m == m and record.theta == float(theta):
                return self._proportion(record.exceed)
        raise InvalidParametersError(f"Threshold {theta} of order {m} was not tracked")

    def _proportion(self, hits: int) -> SimEstimate:
        n = self.cycles
        return self._estimate(hits / n, _sqrt_ratio(hits * (n - hits), n**3))

    def pmf(self) -> List[SimEstimate]:
        """Empirical P{Y = y} for y = 1..track_pmf_to."""
        return [self._proportion(count) for count in self.histogram[1:]]

    def delivery_rate(self) -> Optional[SimEstimate]:
        """Per-slot tagged delivery frequency with a batch-means standard error."""
        if not self.delivery_batches:
            return None
        deliveries = np.array([batch.deliveries for batch in self.delivery_batches], dtype=float)
        slots = np.array([batch.slots for batch in self.delivery_batches], dtype=float)
        rates = deliveries / slots
        std_error = float(np.std(rates) / math.sqrt(len(rates)))
        return SimEstimate(
            mean=float(deliveries.sum() / slots.sum()),
            std_error=std_error,
            samples=len(rates),
            elapsed_slots=int(slots.sum()),
        )

    def estimates(self) -> Dict[str, SimEstimate]:
        """Every tracked statistic under a stable name."""
        named: Dict[str, SimEstimate] = {"mean_cycle": self.mean_cycle()}
        for m in self.config.penalty_orders:
            named[f"avg_penalty[m={m}]"] = self.avg_penalty(m)
        for record in self.exceedances:
            named[peak_violation_name(record.m, record.theta)] = self._proportion(record.exceed)
        for y, estimate in enumerate(self.pmf(), start=1):
            named[f"pmf[y={y}]"] = estimate
        rate = self.delivery_rate()
        if rate is not None:
            named["delivery_rate"] = rate
        return named


class CycleAccumulator:
    """Mutable collector of completed cycle lengths for one replication."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.cycles = 0
        self.power_sums: Dict[int, int] = {p: 0 for p in required_powers(config)}
        self.pairs = config.threshold_pairs()
        self.floors = [floor_root(theta, m) for m, theta in self.pairs]
        self.exceed = [0] * len(self.pairs)
        self.histogram = np.zeros(config.track_pmf_to + 1, dtype=np.int64)

    def add(self, cycles: np.ndarray) -> None:
        """Fold a batch of completed cycle lengths into the running sums."""
        if cycles.size == 0:
            return
        self.cycles += int(cycles.size)
        values, counts = np.unique(cycles, return_counts=True)
        values_list, counts_list = values.tolist(), counts.tolist()
        for p in self.power_sums:
            self.power_sums[p] += sum(c * v**p for v, c in zip(values_list, counts_list))
        for i, f in enumerate(self.floors):
            self.exceed[i] += int(np.count_nonzero(cycles > f))
        if self.config.track_pmf_to:
            limit = self.config.track_pmf_to
            clipped = np.minimum(cycles, limit + 1)
            self.histogram += np.bincount(clipped, minlength=limit + 2)[: limit + 1]

    def bundle(
        self,
        params: SystemParams,
        replication: int,
        elapsed_slots: int,
        warmup_slots: int = 0,
        delivery_batches: Sequence[DeliveryBatch] = (),
    ) -> StatisticsBundle:
        if self.cycles == 0:
            raise InsufficientSamplesError(
                f"No update cycle completed within the budget of {self.config.budget} ({self.config.mode.value} mode)"
            )
        return StatisticsBundle(
            params=params,
            config=self.config,
            replications=(replication,),
            cycles=self.cycles,
            elapsed_slots=elapsed_slots,
            warmup_slots=warmup_slots,
            power_sums=dict(self.power_sums),
            exceedances=tuple(
                ExceedanceCount(m=m, theta=theta, exceed=count)
                for (m, theta), count in zip(self.pairs, self.exceed)
            ),
            histogram=tuple(int(c) for c in self.histogram),
            delivery_batches=tuple(delivery_batches),
        )


def merge(bundles: Sequence[StatisticsBundle]) -> StatisticsBundle:
    """
    Pool replications of the same run.

    Bundles are combined in replication order; inputs must share scenario and
    configuration and cover disjoint replication indices.
    """
    if not bundles:
        raise InvalidParametersError("Nothing to merge")
    ordered = sorted(bundles, key=lambda bundle: bundle.replications)
    if len(ordered) == 1:
        return ordered[0]

    first = ordered[0]
    for other in ordered[1:]:
        if other.params != first.params or other.config != first.config:
            raise InvalidParametersError("Cannot merge bundles produced with different scenarios or configurations")
    indices = tuple(index for bundle in ordered for index in bundle.replications)
    if len(set(indices)) != len(indices):
        raise InvalidParametersError(f"Replication indices overlap: {indices}")

    power_sums = {p: sum(bundle.power_sums[p] for bundle in ordered) for p in first.power_sums}
    exceedances = tuple(
        record.model_copy(update={"exceed": sum(bundle.exceedances[i].exceed for bundle in ordered)})
        for i, record in enumerate(first.exceedances)
    )
    histogram = tuple(sum(column) for column in zip(*(bundle.histogram for bundle in ordered)))
    logger.debug(f"Merged {len(ordered)} bundles covering replications {indices}")
    return StatisticsBundle(
        params=first.params,
        config=first.config,
        replications=indices,
        cycles=sum(bundle.cycles for bundle in ordered),
        elapsed_slots=sum(bundle.elapsed_slots for bundle in ordered),
        warmup_slots=first.warmup_slots,
        power_sums=power_sums,
        exceedances=exceedances,
        histogram=histogram,
        delivery_batches=tuple(batch for bundle in ordered for batch in bundle.delivery_batches),
    )
