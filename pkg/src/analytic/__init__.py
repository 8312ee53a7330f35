"""
Closed-form engine for the inter-update time and the age penalties built on it.
"""

from .distribution import (
    MAX_MOMENT_ORDER,
    cycle_moment,
    mean_cycle,
    pmf,
    pmf_recurrence,
    pmf_values,
    tail_probability,
)
from .generating_function import (
    DistinctRoots,
    DoubleRoot,
    FiniteSupport,
    GfCoefficients,
    GfDecomposition,
    SingleRoot,
    decompose,
    decompose_rational,
    gf_coefficients,
    gf_eval,
)
from .penalties import (
    MAX_PENALTY_ORDER,
    PenaltySpec,
    avg_aoi_closed_form,
    avg_penalty,
    avg_penalty_general,
    floor_root,
    peak_violation,
)
from .series import eulerian_numbers, polylog_neg, stirling_second_kind

__all__ = [
    "MAX_MOMENT_ORDER",
    "MAX_PENALTY_ORDER",
    "DistinctRoots",
    "DoubleRoot",
    "FiniteSupport",
    "GfCoefficients",
    "GfDecomposition",
    "PenaltySpec",
    "SingleRoot",
    "avg_aoi_closed_form",
    "avg_penalty",
    "avg_penalty_general",
    "cycle_moment",
    "decompose",
    "decompose_rational",
    "eulerian_numbers",
    "floor_root",
    "gf_coefficients",
    "gf_eval",
    "mean_cycle",
    "peak_violation",
    "pmf",
    "pmf_recurrence",
    "pmf_values",
    "polylog_neg",
    "stirling_second_kind",
    "tail_probability",
]
