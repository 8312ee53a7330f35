"""
Scenario parameters and the inter-update Markov chain.
"""

from .system import (
    ChainState,
    SystemParams,
    TransitionMatrix,
    delivery_probability,
    stationary_distribution,
    stationary_good,
    success_prob,
    transition_matrix,
)

__all__ = [
    "ChainState",
    "SystemParams",
    "TransitionMatrix",
    "delivery_probability",
    "stationary_distribution",
    "stationary_good",
    "success_prob",
    "transition_matrix",
]
