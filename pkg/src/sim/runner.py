"""
Replication Orchestration and Analytic Comparison.

Replications run on a process pool driven from asyncio; results are gathered
in replication order and merged, so the pooled bundle is the same for any
number of workers.
"""

import asyncio
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from multiprocessing.context import BaseContext
from typing import List, Optional

from pydantic import BaseModel, ConfigDict

from src.analytic import GfDecomposition, avg_penalty, decompose, mean_cycle, peak_violation, pmf
from src.model import SystemParams, delivery_probability
from src.sim.config import SimConfig, SimMode
from src.sim.decoupled import simulate_decoupled
from src.sim.full_system import simulate_full
from src.sim.statistics import StatisticsBundle, merge, peak_violation_name
from src.utils.config_loader import config_loader
from src.utils.errors import InvalidParametersError

logger = logging.getLogger(__name__)


def simulate_replication(params: SystemParams, config: SimConfig, replication: int) -> StatisticsBundle:
    """Run one replication in the mode named by the configuration."""
    if config.mode is SimMode.FULL:
        return simulate_full(params, config, replication)
    return simulate_decoupled(params, config, replication)


def _use_parent_configuration(config_path: str) -> None:
    """Pool initializer: chunk and block sizes must match the parent, whatever the start method."""
    config_loader.use_file(config_path)


class ReplicationRunner:
    """Executes independent replications, optionally across processes."""

    def __init__(self, workers: int = 1, mp_context: Optional[BaseContext] = None):
        if workers < 1:
            raise InvalidParametersError(f"Worker count must be positive, got {workers}")
        self.workers = workers
        self.mp_context = mp_context
        self.logger = logging.getLogger(self.__class__.__name__)

    async def _gather(self, params: SystemParams, config: SimConfig, replications: int) -> List[StatisticsBundle]:
        loop = asyncio.get_running_loop()
        pool_options = {
            "max_workers": self.workers,
            "mp_context": self.mp_context,
            "initializer": _use_parent_configuration,
            "initargs": (str(config_loader.config_file_path.resolve()),),
        }
        with ProcessPoolExecutor(**pool_options) as pool:
            tasks = [
                loop.run_in_executor(pool, simulate_replication, params, config, index)
                for index in range(replications)
            ]
            return list(await asyncio.gather(*tasks))

    def run(self, params: SystemParams, config: SimConfig, replications: int = 1) -> StatisticsBundle:
        """
        Run ``replications`` replications and merge them.

        Args:
            params: Scenario
            config: Simulation configuration shared by all replications
            replications: Number of replications, indexed 0..replications-1

        Returns:
            Merged StatisticsBundle
        """
        if replications < 1:
            raise InvalidParametersError(f"Replication count must be positive, got {replications}")
        started = time.perf_counter()
        self.logger.info(
            f"Running {replications} {config.mode.value} replication(s) on {min(self.workers, replications)} worker(s)"
        )
        if self.workers == 1 or replications == 1:
            bundles = [simulate_replication(params, config, index) for index in range(replications)]
        else:
            bundles = asyncio.run(self._gather(params, config, replications))
        merged = merge(bundles)
        self.logger.info(f"Simulation finished in {time.perf_counter() - started:.2f}s with {merged.cycles} cycles")
        return merged


def run_replications(
    params: SystemParams,
    config: SimConfig,
    replications: int = 1,
    workers: int = 1,
) -> StatisticsBundle:
    """Convenience wrapper around ``ReplicationRunner``."""
    return ReplicationRunner(workers=workers).run(params, config, replications)


class ComparisonRow(BaseModel):
    """One simulated statistic next to its closed-form value."""
    model_config = ConfigDict(frozen=True)

    statistic: str
    simulated: float
    std_error: float
    analytic: float
    z_score: Optional[float]


def _z_score(simulated: float, std_error: float, analytic: float) -> Optional[float]:
    if std_error > 0.0:
        return (simulated - analytic) / std_error
    if math.isclose(simulated, analytic, rel_tol=1e-12, abs_tol=1e-15):
        return 0.0
    return None


def compare_with_analytic(
    bundle: StatisticsBundle,
    decomp: Optional[GfDecomposition] = None,
) -> List[ComparisonRow]:
    """
    Side-by-side rows of every tracked statistic.

    ``z_score`` is None when the standard error is zero and the values differ.
    """
    decomp = decomp or decompose(bundle.params)
    reference = {"mean_cycle": mean_cycle(decomp)}
    for m in bundle.config.penalty_orders:
        reference[f"avg_penalty[m={m}]"] = avg_penalty(decomp, m)
    for record in bundle.exceedances:
        reference[peak_violation_name(record.m, record.theta)] = peak_violation(decomp, record.m, record.theta)
    for y in range(1, bundle.config.track_pmf_to + 1):
        reference[f"pmf[y={y}]"] = pmf(decomp, y)
    reference["delivery_rate"] = delivery_probability(bundle.params)

    rows = []
    for name, estimate in bundle.estimates().items():
        analytic = reference[name]
        rows.append(
            ComparisonRow(
                statistic=name,
                simulated=estimate.mean,
                std_error=estimate.std_error,
                analytic=analytic,
                z_score=_z_score(estimate.mean, estimate.std_error, analytic),
            )
        )
    return rows
