"""
Power-weighted geometric series.

``polylog_neg(k, r)`` returns sum_{y>=1} y^k r^y through the rational form
built from Eulerian numbers, so moments of geometric-type laws carry no
truncation error.
"""

from functools import lru_cache
from math import comb
from typing import Tuple, Union

from src.utils.errors import UnsupportedOrderError

Number = Union[float, complex]

# Moments need order 13; the extra order is kept for callers summing y^(k+1).
MAX_SERIES_ORDER = 14


@lru_cache(maxsize=None)
def eulerian_numbers(k: int) -> Tuple[int, ...]:
    """
    Row k of the Eulerian triangle, E(k, 0) .. E(k, k-1).

    Built with E(k, j) = (j + 1) E(k-1, j) + (k - j) E(k-1, j-1) in exact
    integer arithmetic.
    """
    if k < 1:
        raise ValueError(f"Eulerian row index must be positive, got {k}")
    if k == 1:
        return (1,)
    previous = eulerian_numbers(k - 1)
    row = []
    for j in range(k):
        keep = (j + 1) * previous[j] if j < len(previous) else 0
        shift = (k - j) * previous[j - 1] if j >= 1 else 0
        row.append(keep + shift)
    return tuple(row)


@lru_cache(maxsize=None)
def stirling_second_kind(k: int) -> Tuple[int, ...]:
    """Row k of the Stirling numbers of the second kind, S(k, 0) .. S(k, k)."""
    if k < 0:
        raise ValueError(f"Stirling row index must be nonnegative, got {k}")
    if k == 0:
        return (1,)
    previous = stirling_second_kind(k - 1)
    row = [0] * (k + 1)
    for j in range(1, k + 1):
        keep = j * previous[j] if j < len(previous) else 0
        row[j] = keep + previous[j - 1]
    return tuple(row)


def polylog_neg(k: int, r: Number) -> Number:
    """
    Evaluate L_k(r) = sum_{y>=1} y^k r^y for |r| < 1.

    Args:
        k: Power of y, 0 <= k <= 14 (k = 0 gives r / (1 - r))
        r: Ratio of the series, real or complex

    Returns:
        The series value with the type of ``r``
    """
    if k < 0 or k > MAX_SERIES_ORDER:
        raise UnsupportedOrderError(f"Series order {k} outside the supported range 0..{MAX_SERIES_ORDER}")
    one_minus = 1 - r
    if k == 0:
        return r / one_minus

    numerator: Number = 0
    for coefficient in reversed(eulerian_numbers(k)):
        numerator = numerator * r + coefficient
    return numerator * r / one_minus ** (k + 1)


def shifted_power_sum(k: int, shift: int, r: Number) -> Number:
    """sum_{j>=0} (j + shift)^k r^j, expanded binomially over ``polylog_neg``."""
    total: Number = 0
    for t in range(k + 1):
        term = 1 / (1 - r) if t == 0 else polylog_neg(t, r)
        total += comb(k, t) * shift ** (k - t) * term
    return total
