"""
Generating Function of the Inter-Update Time.

The recurrence time Y of the success state has the rational generating
function

    G_Y(x) = -k (1 + (a x - 1) / (1 - b x + c x^2))
           = (n1 x + n2 x^2) / (1 - b x + c x^2)

with n1 = (1 - beta) p_s and n2 = -p_s (1 - beta - gamma). The numerator
form stays finite when p_s = 1 and is the one evaluated here. ``decompose``
turns it into one of four root branches from which the PMF, the tail and the
moments follow in closed form.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Tuple, Union

import numpy as np

from src.model import SystemParams
from src.utils.config_loader import config_loader
from src.utils.errors import InternalInconsistencyError, InvalidParametersError

logger = logging.getLogger(__name__)

DEFAULT_LINEAR_TOLERANCE = 1e-14
DEFAULT_DOUBLE_ROOT_TOLERANCE = 1e-10
# Beyond this squared relative split the two powers are differenced directly.
CONFLUENT_SERIES_LIMIT = 0.25


class GfCoefficients(NamedTuple):
    """Ancillary quantities of the generating function."""
    a: float
    b: float
    c: float
    k: float


@dataclass(frozen=True)
class DistinctRoots:
    """
    Two simple poles: P_Y(y) = u1 rho1^-(y+1) + u2 rho2^-(y+1) for y >= 1.

    Roots may be a complex-conjugate pair; they are ordered by modulus.
    """
    rho1: complex
    rho2: complex
    u1: complex
    u2: complex

    def __post_init__(self) -> None:
        if abs(self.rho1) > abs(self.rho2):
            raise InternalInconsistencyError("Distinct roots must be ordered by modulus")
        if abs(self.rho1) <= 1.0:
            raise InternalInconsistencyError(
                f"Root modulus {abs(self.rho1)!r} is not above one: the inter-update time would be improper"
            )

    @property
    def is_complex(self) -> bool:
        return any(isinstance(v, complex) and v.imag != 0.0 for v in (self.rho1, self.rho2, self.u1, self.u2))


@dataclass(frozen=True)
class SingleRoot:
    """
    One pole after a degree drop: P_Y(1) = n1, P_Y(y) = (n1 / rho + n2) rho^-(y-2) for y >= 2.
    """
    rho: float
    n1: float
    n2: float

    def __post_init__(self) -> None:
        if self.rho <= 1.0:
            raise InternalInconsistencyError(f"Single root {self.rho!r} is not above one")

    @property
    def second(self) -> float:
        """P_Y(2)."""
        return self.n1 / self.rho + self.n2


@dataclass(frozen=True)
class DoubleRoot:
    """
    Confluent or nearly confluent poles around rho = 2 / b.

    The reciprocal roots are ``mid`` +- s with s^2 = ``spread`` (negative for
    a conjugate pair). P_Y(y) = n1 h(y-1) + n2 h(y-2), where h(k) is the
    divided difference (r+^(k+1) - r-^(k+1)) / (r+ - r-), which tends to
    (k + 1) mid^k as the spread vanishes.
    """
    mid: float
    spread: float
    n1: float
    n2: float

    def __post_init__(self) -> None:
        if self.modulus >= 1.0:
            raise InternalInconsistencyError(f"Double root {self.rho!r} is not above one")

    @property
    def rho(self) -> float:
        return 1.0 / self.mid

    @property
    def c(self) -> float:
        """Product of the reciprocal roots."""
        return self.mid * self.mid - self.spread

    @property
    def modulus(self) -> float:
        """Largest modulus among the reciprocal roots."""
        if self.spread < 0.0:
            return math.sqrt(self.mid * self.mid - self.spread)
        return abs(self.mid) + math.sqrt(self.spread)

    @property
    def mass_at_one(self) -> float:
        """(1 - r+)(1 - r-), the denominator evaluated at x = 1."""
        return (1.0 - self.mid) ** 2 - self.spread

    def complete_sums(self, ks: np.ndarray) -> np.ndarray:
        """
        h(k) = sum_{j=0..k} r+^j r-^(k-j) for integers k >= -1, with h(-1) = 0.

        Close roots go through expm1 (or a sine for a conjugate pair) so the
        difference of the two powers never cancels.
        """
        ks = np.asarray(ks, dtype=float)
        counts = ks + 1.0
        tau = self.spread / (self.mid * self.mid)
        if abs(tau) > CONFLUENT_SERIES_LIMIT:
            split = cmath.sqrt(self.spread)
            upper, lower = self.mid + split, self.mid - split
            raw = (np.power(upper, counts) - np.power(lower, counts)) / (2.0 * split)
            return np.real(raw)
        if tau > 0.0:
            t = math.sqrt(tau)
            factor = -np.expm1(-2.0 * counts * math.atanh(t)) / (2.0 * t)
            return factor * (1.0 + t) * np.power(self.mid * (1.0 + t), ks)
        if tau < 0.0:
            w = math.sqrt(-tau)
            stretch = math.hypot(1.0, w)
            return np.power(self.mid * stretch, ks) * stretch * np.sin(counts * math.atan(w)) / w
        return counts * np.power(self.mid, ks)


@dataclass(frozen=True)
class FiniteSupport:
    """Polynomial generating function: ``masses[i]`` is P_Y(i + 1)."""
    masses: Tuple[float, ...]


RootBranch = Union[DistinctRoots, SingleRoot, DoubleRoot, FiniteSupport]


@dataclass(frozen=True)
class GfDecomposition:
    """
    Partial-fraction form of G_Y together with the coefficients it came from.

    ``degenerate`` marks p_s = 1, where k is infinite and only the numerator
    form of the generating function is meaningful.
    """
    a: float
    b: float
    c: float
    k: float
    n1: float
    n2: float
    p_s: float
    roots: RootBranch
    degenerate: bool = False

    @property
    def branch(self) -> str:
        return {
            DistinctRoots: "distinct",
            SingleRoot: "single",
            DoubleRoot: "double",
            FiniteSupport: "finite",
        }[type(self.roots)]

    @property
    def decay(self) -> float:
        """Geometric decay rate of the PMF, 1 / min |root| (0 for finite support)."""
        roots = self.roots
        if isinstance(roots, FiniteSupport):
            return 0.0
        if isinstance(roots, DistinctRoots):
            return 1.0 / abs(roots.rho1)
        if isinstance(roots, DoubleRoot):
            return roots.modulus
        return 1.0 / roots.rho

    @property
    def support_end(self) -> int:
        """Largest y with positive mass, or -1 for unbounded support."""
        if isinstance(self.roots, FiniteSupport):
            return len(self.roots.masses)
        return -1


def gf_coefficients(params: SystemParams) -> GfCoefficients:
    """
    Ancillary quantities a, b, c and the prefactor k of G_Y.

    k is ``math.inf`` when p_s = 1; that scenario is handled through the
    numerator form and flagged as degenerate by ``decompose``.
    """
    beta, gamma, p_s = params.beta, params.gamma, params.p_s
    a = 1.0 - gamma
    b = (1.0 - beta) * (1.0 - p_s) + (1.0 - gamma)
    c = (1.0 - p_s) * (1.0 - beta - gamma)
    k = math.inf if p_s >= 1.0 else p_s / (1.0 - p_s)
    return GfCoefficients(a=a, b=b, c=c, k=k)


def gf_eval(decomp: GfDecomposition, x: float) -> float:
    """
    Evaluate G_Y(x) for |x| <= 1.

    Equal to -k (1 + (a x - 1) / (1 - b x + c x^2)); computed in numerator
    form so that p_s = 1 needs no special case.
    """
    if abs(x) > 1.0:
        raise InvalidParametersError(f"Generating function is evaluated on |x| <= 1, got x={x}")
    denominator = 1.0 - decomp.b * x + decomp.c * x * x
    assert denominator != 0.0, "denominator of G_Y vanishes inside the unit disc"
    return (decomp.n1 * x + decomp.n2 * x * x) / denominator


def _tolerances() -> Tuple[float, float]:
    linear = config_loader.get_configuration_value("analysis.linear_tolerance", DEFAULT_LINEAR_TOLERANCE)
    double = config_loader.get_configuration_value("analysis.double_root_tolerance", DEFAULT_DOUBLE_ROOT_TOLERANCE)
    return float(linear), float(double)


def decompose_rational(
    n1: float,
    n2: float,
    b: float,
    c: float,
    discriminant: Union[float, None] = None,
) -> RootBranch:
    """
    Partial fractions of (n1 x + n2 x^2) / (1 - b x + c x^2).

    Args:
        n1: Linear numerator coefficient (equal to P_Y(1))
        n2: Quadratic numerator coefficient
        b: Linear denominator coefficient
        c: Quadratic denominator coefficient
        discriminant: b^2 - 4c when a cancellation-free form is available

    Returns:
        The root branch selected by the degree and the discriminant
    """
    linear_tol, double_tol = _tolerances()
    disc = b * b - 4.0 * c if discriminant is None else discriminant

    if abs(c) <= linear_tol:
        if abs(b) <= linear_tol:
            logger.debug("Polynomial generating function, finite support")
            return FiniteSupport(masses=(n1, n2 + b * n1))
        logger.debug(f"Degree drop, single root 1/b with b={b!r}")
        return SingleRoot(rho=1.0 / b, n1=n1, n2=n2)

    if b != 0.0 and abs(disc) <= double_tol * max(b * b, 1.0):
        logger.debug(f"Double root rho={2.0 / b!r} (discriminant {disc!r})")
        return DoubleRoot(mid=0.5 * b, spread=0.25 * disc, n1=n1, n2=n2)

    # Reciprocal roots r of r^2 - b r + c: q = (b + sign(b) sqrt(disc)) / 2 and c / q.
    root_disc = math.sqrt(disc) if disc > 0.0 else cmath.sqrt(disc)
    sign = 1.0 if b >= 0.0 else -1.0
    q = 0.5 * (b + sign * root_disc)
    candidates = []
    for reciprocal, derivative in ((q, -sign * root_disc), (c / q, sign * root_disc)):
        rho = 1.0 / reciprocal
        numerator = n1 * rho + n2 * rho * rho
        candidates.append((rho, -numerator / derivative))
    candidates.sort(key=lambda pair: abs(pair[0]))
    (rho1, u1), (rho2, u2) = candidates
    logger.debug(f"Distinct roots rho1={rho1!r}, rho2={rho2!r}")
    return DistinctRoots(rho1=rho1, rho2=rho2, u1=u1, u2=u2)


def decompose(params: SystemParams) -> GfDecomposition:
    """
    Decompose the generating function of Y for a scenario.

    With beta = 0 the numerator carries the factor 1 - (1 - gamma) x of the
    denominator, which is cancelled before selecting a branch; the result is
    the geometric law with parameter p_s (a point mass when p_s = 1).
    """
    a, b, c, k = gf_coefficients(params)
    beta, gamma, p_s = params.beta, params.gamma, params.p_s
    n1 = (1.0 - beta) * p_s
    n2 = -p_s * (1.0 - beta - gamma)
    degenerate = p_s >= 1.0
    if degenerate:
        logger.warning(f"Degenerate scenario p_s = 1 (n={params.n}, alpha={params.alpha}): every attempt succeeds")

    if beta == 0.0:
        ratio = 1.0 - p_s
        roots: RootBranch
        if ratio == 0.0:
            roots = FiniteSupport(masses=(1.0,))
        else:
            roots = SingleRoot(rho=1.0 / ratio, n1=p_s, n2=0.0)
    else:
        # b^2 - 4c rewritten as a sum of squares: real roots for every scenario.
        spread = (1.0 - beta) * (1.0 - p_s) - (1.0 - gamma)
        discriminant = spread * spread + 4.0 * beta * gamma * (1.0 - p_s)
        roots = decompose_rational(n1, n2, b, c, discriminant=discriminant)

    return GfDecomposition(a=a, b=b, c=c, k=k, n1=n1, n2=n2, p_s=p_s, roots=roots, degenerate=degenerate)
