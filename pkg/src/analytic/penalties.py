"""
Age Penalties of Power-Law and General Form.

The penalty of order m grows as (t - tau(t))^m between deliveries. Its time
average is a renewal-reward ratio E[Y^(m+1)] / ((m + 1) E[Y]) and its peak,
reached just before a delivery, exceeds theta exactly when Y > floor(theta^(1/m)).
"""

import logging
import math
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.analytic.distribution import cycle_moment, mean_cycle, pmf_values, tail_probability
from src.analytic.generating_function import DoubleRoot, FiniteSupport, GfDecomposition, SingleRoot
from src.model import SystemParams
from src.utils.config_loader import config_loader
from src.utils.errors import DivergenceError, InvalidParametersError, UnsupportedOrderError

logger = logging.getLogger(__name__)

MAX_PENALTY_ORDER = 12
DEFAULT_TAIL_TOLERANCE = 1e-12
DEFAULT_CHUNK = 4096
DEFAULT_MAX_HORIZON = 100_000_000


class PenaltySpec(BaseModel):
    """Penalty order m and an optional peak threshold theta (slots^m)."""
    model_config = ConfigDict(frozen=True)

    m: int = Field(1, ge=1, le=MAX_PENALTY_ORDER, description="Penalty order")
    theta: Optional[float] = Field(None, ge=0.0, allow_inf_nan=False, description="Peak threshold in slots^m")


def _check_order(m: int) -> None:
    if m < 1:
        raise InvalidParametersError(f"Penalty order must be positive, got {m}")
    if m > MAX_PENALTY_ORDER:
        raise UnsupportedOrderError(f"Penalty order {m} exceeds the supported maximum {MAX_PENALTY_ORDER}")


def floor_root(theta: float, m: int) -> int:
    """
    Largest integer f >= 0 with f^m <= theta.

    The float root only seeds an integer search; comparisons are exact.
    """
    if not math.isfinite(theta) or theta < 0.0:
        raise InvalidParametersError(f"Threshold must be finite and nonnegative, got {theta}")
    if theta < 1.0:
        return 0
    f = max(int(round(theta ** (1.0 / m))), 0)
    while f > 0 and f**m > theta:
        f -= 1
    while (f + 1) ** m <= theta:
        f += 1
    return f


def avg_penalty(decomp: GfDecomposition, m: int) -> float:
    """Time-average penalty of order m, E[Y^(m+1)] / ((m + 1) E[Y])."""
    _check_order(m)
    return cycle_moment(decomp, m + 1) / ((m + 1) * mean_cycle(decomp))


def avg_aoi_closed_form(params: SystemParams) -> float:
    """Average age, 1/p_s + (p_s + beta (1 - p_s)) / (gamma p_s) - 1/(gamma + beta) - 1/2."""
    p_s, beta, gamma = params.p_s, params.beta, params.gamma
    return 1.0 / p_s + (p_s + beta * (1.0 - p_s)) / (gamma * p_s) - 1.0 / (gamma + beta) - 0.5


def peak_violation(decomp: GfDecomposition, m: int, theta: float) -> float:
    """
    Probability that the within-cycle peak Y^m exceeds theta.

    Args:
        decomp: Decomposed generating function
        m: Penalty order
        theta: Threshold in slots^m

    Returns:
        P{Y > f} with f the integer floor of theta^(1/m); 1 when theta < 1
    """
    _check_order(m)
    return tail_probability(decomp, floor_root(theta, m))


def _envelope(decomp: GfDecomposition):
    """Constants (W, e, r) with |P_Y(y)| <= W (y + 1)^e r^y beyond the first two slots."""
    roots = decomp.roots
    r = decomp.decay
    if isinstance(roots, DoubleRoot):
        return abs(roots.n1) / r + abs(roots.n2) / (r * r), 1, r
    if isinstance(roots, SingleRoot):
        return abs(roots.second) / (r * r), 0, r
    u1, u2 = roots.u1, roots.u2
    return abs(u1 / roots.rho1) + abs(u2 / roots.rho2), 0, r


def _array_primitive(primitive: Callable, vectorized: Optional[bool]) -> Callable:
    """Return ``primitive`` itself if it maps arrays element-wise, else its np.vectorize wrapper."""
    if vectorized is None:
        trial = np.array([1.0, 2.0])
        try:
            vectorized = np.shape(primitive(trial)) == trial.shape
        except (TypeError, ValueError):
            vectorized = False
        if not vectorized:
            logger.debug("Penalty primitive takes scalars only, evaluating it element-wise")
    return primitive if vectorized else np.vectorize(primitive, otypes=[float])


def avg_penalty_general(
    decomp: GfDecomposition,
    primitive: Callable,
    tail_tol: Optional[float] = None,
    growth_degree: int = 1,
    vectorized: Optional[bool] = None,
) -> float:
    """
    Time-average of an arbitrary nondecreasing penalty f.

    Args:
        decomp: Decomposed generating function
        primitive: F(y) = integral of f over [0, y]
        tail_tol: Bound on the neglected tail, relative once the sum exceeds one
        growth_degree: Degree of a polynomial majorant of F
        vectorized: Whether F maps float arrays element-wise; detected when None

    Returns:
        sum_y F(y) P_Y(y) / E[Y]
    """
    if growth_degree < 0:
        raise InvalidParametersError(f"Growth degree must be nonnegative, got {growth_degree}")
    tolerance = tail_tol if tail_tol is not None else float(
        config_loader.get_configuration_value("analysis.general_penalty_tail_tolerance", DEFAULT_TAIL_TOLERANCE)
    )
    chunk = int(config_loader.get_configuration_value("analysis.general_penalty_chunk", DEFAULT_CHUNK))
    max_horizon = int(
        config_loader.get_configuration_value("analysis.general_penalty_max_horizon", DEFAULT_MAX_HORIZON)
    )

    mapped = _array_primitive(primitive, vectorized)

    def evaluate(ys: np.ndarray) -> np.ndarray:
        values = np.asarray(mapped(ys), dtype=float)
        if not np.all(np.isfinite(values)):
            raise DivergenceError("Penalty primitive returned non-finite values")
        return values

    mean = mean_cycle(decomp)
    if isinstance(decomp.roots, FiniteSupport):
        ys = np.arange(1, decomp.support_end + 1, dtype=float)
        return float(np.dot(evaluate(ys), pmf_values(decomp, ys.astype(np.int64)))) / mean

    weight, extra, r = _envelope(decomp)
    power = growth_degree + extra
    if r > 0.0 and power / -math.log(r) > max_horizon:
        raise DivergenceError(
            f"Growth degree {growth_degree} against decay {r!r} needs more than {max_horizon} terms"
        )

    total = 0.0
    start = 1
    while True:
        ys = np.arange(start, start + chunk, dtype=float)
        total += float(np.dot(evaluate(ys), pmf_values(decomp, ys.astype(np.int64))))
        horizon = start + chunk - 1
        start = horizon + 1

        # F(y) <= F(H) (y / H)^d beyond H, then a ratio bound on the series.
        ratio = r * ((horizon + 2.0) / (horizon + 1.0)) ** power
        if ratio < 1.0:
            scale = evaluate(np.array([float(horizon)]))[0] / horizon**growth_degree
            lead = weight * (horizon + 2.0) ** power * r ** (horizon + 1)
            bound = abs(scale) * lead / (1.0 - ratio)
            if bound <= tolerance * max(1.0, abs(total)):
                logger.debug(f"General penalty truncated at y={horizon} with tail bound {bound!r}")
                break
        if horizon >= max_horizon:
            raise DivergenceError(f"General penalty did not converge within {max_horizon} terms")

    return total / mean
