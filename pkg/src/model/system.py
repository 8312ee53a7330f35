"""
System Parameters and the Inter-Update Markov Chain.

This module holds the slotted-ALOHA scenario (number of terminals, activation
probability, Gilbert-Elliot transition probabilities), the stationary
quantities derived from it, and the three-state chain whose recurrence time
of the success state is the update cycle Y.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from src.utils.errors import InvalidParametersError

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-12


class ChainState(str, Enum):
    """States of the inter-update chain."""
    SUCCESS = "S"
    MISS = "M"
    BAD = "B"

    @property
    def index(self) -> int:
        return _STATE_ORDER.index(self)


_STATE_ORDER = (ChainState.SUCCESS, ChainState.MISS, ChainState.BAD)


def stationary_good(beta: float, gamma: float) -> float:
    """
    Stationary probability of the good channel state, gamma / (beta + gamma).

    Args:
        beta: Good-to-bad transition probability
        gamma: Bad-to-good transition probability

    Returns:
        pi_G, equal to 1 when beta is 0
    """
    if not (0.0 <= beta <= 1.0) or not (0.0 <= gamma <= 1.0):
        raise InvalidParametersError(f"Channel probabilities must lie in [0, 1], got beta={beta}, gamma={gamma}")
    if beta == 0.0 and gamma == 0.0:
        raise InvalidParametersError("beta = gamma = 0 leaves the stationary channel law undefined")
    if beta == 0.0:
        return 1.0
    return gamma / (beta + gamma)


def _success_prob(n: int, alpha: float, pi_g: float) -> float:
    if n == 1:
        return alpha
    attempt_good = alpha * pi_g
    if attempt_good >= 1.0:
        return 0.0
    return math.exp((n - 1) * math.log1p(-attempt_good) + math.log(alpha))


class SystemParams(BaseModel):
    """
    Immutable scenario record.

    ``pi_g`` and ``p_s`` are derived on access and included when the record
    is serialised.
    """
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1, description="Number of terminals")
    alpha: float = Field(..., gt=0.0, le=1.0, description="Per-slot activation probability")
    beta: float = Field(..., ge=0.0, le=1.0, description="Good-to-bad transition probability")
    gamma: float = Field(..., gt=0.0, le=1.0, description="Bad-to-good transition probability")

    @model_validator(mode="after")
    def _check_success_probability(self) -> "SystemParams":
        if _success_prob(self.n, self.alpha, stationary_good(self.beta, self.gamma)) <= 0.0:
            raise ValueError(
                f"Success probability vanishes for n={self.n}, alpha={self.alpha}: no update is ever delivered"
            )
        return self

    @computed_field  # type: ignore[prop-decorator]
    @property
    def pi_g(self) -> float:
        return stationary_good(self.beta, self.gamma)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def p_s(self) -> float:
        return _success_prob(self.n, self.alpha, self.pi_g)

    @property
    def load(self) -> float:
        """Channel load n * alpha."""
        return self.n * self.alpha

    @classmethod
    def from_load(cls, n: int, load: float, beta: float, gamma: float) -> "SystemParams":
        """Build a scenario from the channel load instead of alpha."""
        return cls(n=n, alpha=load / n, beta=beta, gamma=gamma)

    def with_terminals(self, n: int) -> "SystemParams":
        """Same channel and activation probability with another terminal count."""
        return SystemParams(n=n, alpha=self.alpha, beta=self.beta, gamma=self.gamma)

    def record(self) -> Dict[str, float]:
        """Plain parameter record for reports and metadata."""
        return {
            "n": self.n,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "pi_g": self.pi_g,
            "p_s": self.p_s,
        }


def success_prob(params: SystemParams) -> float:
    """p_s = alpha (1 - alpha pi_G)^(n-1), evaluated in the log domain."""
    return params.p_s


def delivery_probability(params: SystemParams) -> float:
    """Per-slot probability that an update of the tagged source is received."""
    return params.pi_g * params.p_s


@dataclass(frozen=True)
class TransitionMatrix:
    """One-step transition probabilities of the S/M/B chain."""
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape != (3, 3):
            raise InvalidParametersError(f"Transition matrix must be 3x3, got {self.values.shape}")
        row_sums = self.values.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOLERANCE):
            raise InvalidParametersError(f"Transition matrix rows do not sum to one: {row_sums}")
        self.values.setflags(write=False)

    def __getitem__(self, key: Tuple[ChainState, ChainState]) -> float:
        source, target = key
        return float(self.values[source.index, target.index])

    def row(self, state: ChainState) -> np.ndarray:
        return self.values[state.index]

    def transient_block(self) -> np.ndarray:
        """Transitions among the non-success states (M, B)."""
        return self.values[1:, 1:]


def transition_matrix(params: SystemParams) -> TransitionMatrix:
    """Build the chain of the inter-update time from the scenario."""
    beta, gamma, p_s = params.beta, params.gamma, params.p_s
    good_row = [(1.0 - beta) * p_s, (1.0 - beta) * (1.0 - p_s), beta]
    bad_row = [gamma * p_s, gamma * (1.0 - p_s), 1.0 - gamma]
    values = np.array([good_row, good_row, bad_row], dtype=float)
    return TransitionMatrix(values=values)


def stationary_distribution(params: SystemParams) -> Dict[ChainState, float]:
    """
    Stationary law of the S/M/B chain.

    The success state is visited a fraction pi_G * p_s of the slots, so its
    mean recurrence time is 1 / (pi_G * p_s).
    """
    pi_g, p_s = params.pi_g, params.p_s
    return {
        ChainState.SUCCESS: pi_g * p_s,
        ChainState.MISS: pi_g * (1.0 - p_s),
        ChainState.BAD: 1.0 - pi_g,
    }
