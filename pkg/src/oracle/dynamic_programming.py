"""
Brute-Force Reference for the Inter-Update Time.

A forward recursion over the transient states {Miss, Bad} of the chain yields
the first-return distribution of the success state without touching the
generating function, so every closed form can be checked against it.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from src.model import ChainState, SystemParams, transition_matrix
from src.utils.config_loader import config_loader
from src.utils.errors import InsufficientHorizonError, InvalidParametersError

logger = logging.getLogger(__name__)

DEFAULT_TAIL_TOLERANCE = 1e-13
DEFAULT_MAX_HORIZON = 20_000_000


@dataclass(frozen=True)
class DpTable:
    """
    First-passage probabilities of the success state.

    Attributes:
        horizon: Largest y computed
        first_passage: Array indexed by y = 0..horizon, entry 0 is zero
        residual: Mass still in transit after ``horizon`` steps, P{Y > horizon}
        decay: Spectral radius of the transient block
        max_mass_defect: Largest |absorbed + surviving - 1| over all steps
    """
    horizon: int
    first_passage: np.ndarray = field(repr=False)
    residual: float
    decay: float
    max_mass_defect: float

    def __post_init__(self) -> None:
        self.first_passage.setflags(write=False)


def pmf_dp(
    params: SystemParams,
    y_max: Optional[int] = None,
    tail_tol: Optional[float] = None,
) -> DpTable:
    """
    First-return distribution of the success state by forward recursion.

    Args:
        params: Scenario
        y_max: Fixed horizon; chosen from the surviving mass when omitted
        tail_tol: Surviving mass at which an automatic horizon stops

    Returns:
        DpTable with first_passage[y] for y = 0..horizon
    """
    if y_max is not None and y_max < 1:
        raise InvalidParametersError(f"Horizon must be at least 1, got {y_max}")
    tolerance = tail_tol if tail_tol is not None else float(
        config_loader.get_configuration_value("oracle.tail_tolerance", DEFAULT_TAIL_TOLERANCE)
    )
    cap = int(config_loader.get_configuration_value("oracle.max_horizon", DEFAULT_MAX_HORIZON))

    matrix = transition_matrix(params)
    miss_to_success = matrix[ChainState.MISS, ChainState.SUCCESS]
    bad_to_success = matrix[ChainState.BAD, ChainState.SUCCESS]
    mm, mb = matrix[ChainState.MISS, ChainState.MISS], matrix[ChainState.MISS, ChainState.BAD]
    bm, bb = matrix[ChainState.BAD, ChainState.MISS], matrix[ChainState.BAD, ChainState.BAD]
    decay = float(np.max(np.abs(np.linalg.eigvals(matrix.transient_block()))))

    absorbed = matrix[ChainState.SUCCESS, ChainState.SUCCESS]
    miss = matrix[ChainState.SUCCESS, ChainState.MISS]
    bad = matrix[ChainState.SUCCESS, ChainState.BAD]
    passage = [0.0, absorbed]
    max_defect = abs(absorbed + miss + bad - 1.0)

    y = 1
    while True:
        surviving = miss + bad
        if y_max is not None:
            if y >= y_max:
                break
        elif surviving < tolerance:
            break
        elif y >= cap:
            logger.warning(f"Oracle horizon capped at {cap} with surviving mass {surviving!r}")
            break

        step = miss * miss_to_success + bad * bad_to_success
        miss, bad = miss * mm + bad * bm, miss * mb + bad * bb
        absorbed += step
        passage.append(step)
        max_defect = max(max_defect, abs(absorbed + miss + bad - 1.0))
        y += 1

    logger.debug(f"Oracle DP horizon {y}, residual {miss + bad!r}, decay {decay!r}")
    return DpTable(
        horizon=y,
        first_passage=np.asarray(passage, dtype=float),
        residual=miss + bad,
        decay=decay,
        max_mass_defect=max_defect,
    )


def statistic_trunc(
    table: DpTable,
    weight: Callable[[np.ndarray], np.ndarray],
    growth_degree: int = 0,
    tol: float = 1e-12,
) -> float:
    """
    Truncated expectation sum_y weight(y) first_passage[y].

    The neglected tail is bounded by the surviving mass decaying at the
    dominant rate, with |weight| majorised by a polynomial of
    ``growth_degree`` beyond the horizon.

    Raises:
        InsufficientHorizonError: The tail bound exceeds ``tol`` (relative
            once the statistic exceeds one)
    """
    horizon = table.horizon
    ys = np.arange(horizon + 2)
    weights = np.asarray(weight(ys), dtype=float)
    total = float(np.dot(weights[: horizon + 1], table.first_passage))

    if table.residual > 0.0:
        lam = table.decay
        ratio = lam * ((horizon + 2.0) / (horizon + 1.0)) ** growth_degree
        if ratio >= 1.0:
            bound = math.inf
        else:
            envelope = float(np.max(np.abs(weights)))
            bound = table.residual * envelope * (1.0 - lam) / (1.0 - ratio)
        if bound > tol * max(1.0, abs(total)):
            raise InsufficientHorizonError(
                f"Tail bound {bound!r} at horizon {horizon} exceeds the tolerance {tol!r}"
            )
    return total
