"""
Full-System Simulator.

All n terminals transmit independently with probability alpha per slot, each
over its own Gilbert-Elliot channel. A packet is decoded only when it is the
single unerased packet of its slot; terminal 0 is the tagged source.

Channels are only observed when their terminal transmits. Between two
observations k slots apart the channel moves by the k-step law

    P{good | good} = pi_G + (1 - pi_G) lambda^k,  P{good | bad} = pi_G (1 - lambda^k)

with lambda = 1 - beta - gamma, which is the per-slot evolution of every
channel marginalised over the unobserved slots. The work per slot is
proportional to the number of transmissions rather than to n.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.model import SystemParams
from src.sim.config import SimConfig, SimMode, replication_generator
from src.sim.statistics import CycleAccumulator, DeliveryBatch, StatisticsBundle
from src.utils.config_loader import config_loader
from src.utils.errors import InvalidParametersError

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SLOTS = 65536
DEFAULT_DELIVERY_BATCHES = 32
EVENTS_PER_BLOCK = 256


@dataclass
class NodeState:
    """
    Channel knowledge of every terminal.

    ``good[i]`` is the channel of terminal i at slot ``known_at[i]`` (its
    latest transmission, or -1 for the stationary draw at start-up);
    ``next_tx[i]`` is its next transmission slot.
    """
    good: np.ndarray
    known_at: np.ndarray
    next_tx: np.ndarray
    last_update_slot: Optional[int] = None


def _transmission_times(rng: np.random.Generator, next_tx: np.ndarray, alpha: float, end: int) -> np.ndarray:
    """Per-terminal increasing transmission slots, each row reaching past ``end``."""
    expected = alpha * (end - int(next_tx.min()))
    width = max(int(math.ceil(expected + 6.0 * math.sqrt(expected + 1.0))) + 2, 2)
    gaps = rng.geometric(alpha, size=(next_tx.size, width - 1)).astype(np.int64)
    times = np.concatenate([next_tx[:, None], next_tx[:, None] + np.cumsum(gaps, axis=1)], axis=1)
    while np.any(times[:, -1] < end):
        gaps = rng.geometric(alpha, size=(next_tx.size, width)).astype(np.int64)
        times = np.concatenate([times, times[:, -1:] + np.cumsum(gaps, axis=1)], axis=1)
    return times


def _advance_block(
    rng: np.random.Generator,
    state: NodeState,
    params: SystemParams,
    start: int,
    end: int,
) -> np.ndarray:
    """Simulate slots [start, end); returns the tagged delivery slots in order."""
    pi_g = params.pi_g
    lam = 1.0 - params.beta - params.gamma

    times = _transmission_times(rng, state.next_tx, params.alpha, end)
    valid = times < end
    uniforms = rng.random(times.shape)
    unerased = np.zeros(times.shape, dtype=bool)

    good, known_at = state.good, state.known_at
    for j in range(times.shape[1]):
        column_valid = valid[:, j]
        if not column_valid.any():
            break
        t = times[:, j]
        persistence = np.power(lam, (t - known_at).astype(float))
        p_good = np.where(good, pi_g + (1.0 - pi_g) * persistence, pi_g * (1.0 - persistence))
        drawn = uniforms[:, j] < p_good
        good = np.where(column_valid, drawn, good)
        known_at = np.where(column_valid, t, known_at)
        unerased[:, j] = drawn & column_valid

    per_slot = np.bincount(times[unerased] - start, minlength=end - start)
    tagged = times[0][unerased[0]]
    delivered = tagged[per_slot[tagged - start] == 1]

    first_beyond = np.argmax(times >= end, axis=1)
    state.good = good
    state.known_at = known_at
    state.next_tx = times[np.arange(times.shape[0]), first_beyond]
    return delivered


def _batch_edges(warmup: int, slots: int, batches: int) -> np.ndarray:
    count = max(1, min(batches, slots - warmup))
    return warmup + (np.arange(count + 1, dtype=np.int64) * (slots - warmup)) // count


def simulate_full(params: SystemParams, config: SimConfig, replication: int = 0) -> StatisticsBundle:
    """
    Simulate ``config.slots`` slots of the whole network.

    Channels start from their stationary law. Measurement starts at the first
    tagged delivery at or after the warmup, and the cycle still open when the
    budget ends is discarded.

    Args:
        params: Scenario
        config: Full-mode configuration
        replication: Replication index selecting the random stream

    Returns:
        StatisticsBundle including the per-batch delivery counts
    """
    if config.mode is not SimMode.FULL:
        raise InvalidParametersError(f"simulate_full needs full mode, got {config.mode.value}")
    slots = config.slots
    warmup = config.resolve_warmup(params)
    if slots <= warmup:
        raise InvalidParametersError(f"Slot budget {slots} does not exceed the warmup of {warmup} slots")

    rng = replication_generator(config.seed, replication)
    n = params.n
    state = NodeState(
        good=rng.random(n) < params.pi_g,
        known_at=np.full(n, -1, dtype=np.int64),
        next_tx=rng.geometric(params.alpha, size=n).astype(np.int64) - 1,
    )

    block_cap = int(config_loader.get_configuration_value("simulation.block_slots", DEFAULT_BLOCK_SLOTS))
    block = int(min(block_cap, max(EVENTS_PER_BLOCK, math.ceil(EVENTS_PER_BLOCK / params.alpha))))
    batches = int(config_loader.get_configuration_value("simulation.delivery_batches", DEFAULT_DELIVERY_BATCHES))
    edges = _batch_edges(warmup, slots, batches)
    batch_deliveries = np.zeros(len(edges) - 1, dtype=np.int64)

    accumulator = CycleAccumulator(config)
    logger.info(f"Full-system replication {replication}: n={n}, {slots} slots, warmup {warmup}")

    for start in range(0, slots, block):
        end = min(start + block, slots)
        delivered = _advance_block(rng, state, params, start, end)
        measured = delivered[delivered >= warmup]
        if measured.size == 0:
            continue
        batch_index = np.searchsorted(edges, measured, side="right") - 1
        batch_deliveries += np.bincount(batch_index, minlength=len(batch_deliveries))[: len(batch_deliveries)]
        if state.last_update_slot is not None:
            measured = np.concatenate(([state.last_update_slot], measured))
        accumulator.add(np.diff(measured))
        state.last_update_slot = int(measured[-1])

    delivery_batches: List[DeliveryBatch] = [
        DeliveryBatch(deliveries=int(count), slots=int(edges[i + 1] - edges[i]))
        for i, count in enumerate(batch_deliveries)
    ]
    return accumulator.bundle(
        params,
        replication,
        elapsed_slots=slots,
        warmup_slots=warmup,
        delivery_batches=delivery_batches,
    )
