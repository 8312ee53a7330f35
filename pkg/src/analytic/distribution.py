"""
Law of the inter-update time Y: PMF, tail and moments in closed form.
"""

import logging
import math
from typing import Union

import numpy as np

from src.analytic.generating_function import (
    DistinctRoots,
    DoubleRoot,
    FiniteSupport,
    GfDecomposition,
    SingleRoot,
)
from src.analytic.series import polylog_neg, shifted_power_sum, stirling_second_kind
from src.utils.errors import InternalInconsistencyError, InvalidParametersError, UnsupportedOrderError

logger = logging.getLogger(__name__)

MAX_MOMENT_ORDER = 13
IMAGINARY_TOLERANCE = 1e-12


def _real(value: Union[complex, np.ndarray], what: str) -> Union[float, np.ndarray]:
    imaginary = np.max(np.abs(np.imag(value))) if np.size(value) else 0.0
    if imaginary >= IMAGINARY_TOLERANCE:
        raise InternalInconsistencyError(f"{what} has an imaginary residue of {imaginary!r}")
    return np.real(value)


def pmf_values(decomp: GfDecomposition, ys: np.ndarray) -> np.ndarray:
    """Vectorised ``pmf`` over an integer array."""
    ys = np.asarray(ys, dtype=np.int64)
    if np.any(ys < 0):
        raise InvalidParametersError("Inter-update times are nonnegative")
    roots = decomp.roots
    out: np.ndarray

    if isinstance(roots, DistinctRoots):
        exponents = -(ys + 1).astype(float)
        if roots.is_complex:
            raw = roots.u1 * np.power(complex(roots.rho1), exponents) + roots.u2 * np.power(
                complex(roots.rho2), exponents
            )
            out = np.asarray(_real(raw, "PMF"), dtype=float)
        else:
            pairs = ((np.real(roots.rho1), np.real(roots.u1)), (np.real(roots.rho2), np.real(roots.u2)))
            out = sum(float(u) * np.power(float(rho), exponents) for rho, u in pairs)
    elif isinstance(roots, DoubleRoot):
        out = roots.n1 * roots.complete_sums(ys - 1) + roots.n2 * roots.complete_sums(ys - 2)
    elif isinstance(roots, SingleRoot):
        out = roots.second * np.power(roots.rho, -(ys - 2).astype(float))
        out = np.where(ys == 1, roots.n1, out)
    else:
        masses = np.concatenate(([0.0], np.asarray(roots.masses, dtype=float)))
        out = np.where(ys < len(masses), masses[np.minimum(ys, len(masses) - 1)], 0.0)

    return np.where(ys == 0, 0.0, out)


def pmf(decomp: GfDecomposition, y: int) -> float:
    """
    P_Y(y) from the partial-fraction form.

    Args:
        decomp: Decomposed generating function
        y: Number of slots between consecutive deliveries

    Returns:
        Probability, exactly 0 for y = 0
    """
    if y == 0:
        return 0.0
    return float(pmf_values(decomp, np.array([y]))[0])


def pmf_recurrence(decomp: GfDecomposition, y_max: int) -> np.ndarray:
    """
    P_Y(0..y_max) through P(y) = b P(y-1) - c P(y-2), y >= 3.

    The recurrence works on the unreduced coefficients and is valid for every
    root branch, including the confluent and degenerate ones.
    """
    if y_max < 2:
        raise InvalidParametersError(f"Recurrence needs y_max >= 2, got {y_max}")
    b, c = decomp.b, decomp.c
    values = [0.0, decomp.n1, decomp.n2 + b * decomp.n1]
    previous, current = values[1], values[2]
    for _ in range(3, y_max + 1):
        previous, current = current, b * current - c * previous
        values.append(current)
    return np.asarray(values, dtype=float)


def tail_probability(decomp: GfDecomposition, f: int) -> float:
    """
    P{Y > f} for an integer f >= 0, summed in closed form.

    Returns exactly 1 for f = 0 since Y >= 1.
    """
    if f < 0:
        raise InvalidParametersError(f"Tail index must be nonnegative, got {f}")
    if f == 0:
        return 1.0
    roots = decomp.roots

    if isinstance(roots, DistinctRoots):
        total = sum(
            u * rho ** (-(f + 1)) / (rho - 1.0)
            for rho, u in ((roots.rho1, roots.u1), (roots.rho2, roots.u2))
        )
        return float(_real(total, "Tail probability"))
    if isinstance(roots, SingleRoot):
        r = 1.0 / roots.rho
        return roots.second * r ** (f - 1) / (1.0 - r)
    if isinstance(roots, DoubleRoot):
        # sum_{k>=j} h(k) = (h(j) - c h(j-1)) / D(1) from the three-term recurrence of h.
        h = roots.complete_sums(np.array([f - 2, f - 1, f]))
        sums = (h[1:] - roots.c * h[:-1]) / roots.mass_at_one
        return float(roots.n1 * sums[1] + roots.n2 * sums[0])
    return float(sum(roots.masses[f:]))


def _confluent_moment(roots: DoubleRoot, k: int) -> float:
    """
    E[Y^k] from the Taylor coefficients of G_Y around x = 1.

    Dividing N(1 + u) by D(1 + u) gives the binomial moments E[C(Y, j)], which
    Stirling numbers turn into powers; every term is nonnegative.
    """
    n1, n2, c = roots.n1, roots.n2, roots.c
    numerator = (n1 + n2, n1 + 2.0 * n2, n2)
    denominator = (roots.mass_at_one, 2.0 * (c - roots.mid), c)
    binomial = []
    for j in range(k + 1):
        value = numerator[j] if j < 3 else 0.0
        for lag in (1, 2):
            if j >= lag:
                value -= denominator[lag] * binomial[j - lag]
        binomial.append(value / denominator[0])
    row = stirling_second_kind(k)
    return float(sum(row[j] * math.factorial(j) * binomial[j] for j in range(1, k + 1)))


def cycle_moment(decomp: GfDecomposition, k: int) -> float:
    """
    E[Y^k] in closed form for 1 <= k <= 13.

    Each pole contributes (u / rho) L_k(1 / rho), with L_k evaluated through
    its Eulerian-number rational form.
    """
    if k < 1:
        raise InvalidParametersError(f"Moment order must be positive, got {k}")
    if k > MAX_MOMENT_ORDER:
        raise UnsupportedOrderError(f"Moment order {k} exceeds the supported maximum {MAX_MOMENT_ORDER}")
    roots = decomp.roots

    if isinstance(roots, DistinctRoots):
        total = sum(
            (u / rho) * polylog_neg(k, 1.0 / rho)
            for rho, u in ((roots.rho1, roots.u1), (roots.rho2, roots.u2))
        )
        return float(_real(total, "Moment"))
    if isinstance(roots, SingleRoot):
        return roots.n1 + roots.second * shifted_power_sum(k, 2, 1.0 / roots.rho)
    if isinstance(roots, DoubleRoot):
        return _confluent_moment(roots, k)
    return float(sum((y + 1) ** k * mass for y, mass in enumerate(roots.masses)))


def mean_cycle(decomp: GfDecomposition) -> float:
    """E[Y], which renewal theory fixes at 1 / (pi_G p_s)."""
    return cycle_moment(decomp, 1)
