"""
Error hierarchy for the freshness toolkit.

Each error carries the exit code the command line interface reports for it,
so library callers and scripts see the same classification.
"""


class FreshnessToolkitError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code: int = 1


class InvalidParametersError(FreshnessToolkitError, ValueError):
    """Parameters outside the admissible ranges or inconsistent inputs."""

    exit_code = 2


class UnsupportedOrderError(InvalidParametersError):
    """Moment or penalty order above the supported maximum."""


class DivergenceError(InvalidParametersError):
    """A series that cannot be summed to the requested tolerance."""


class InsufficientHorizonError(InvalidParametersError):
    """A truncated oracle sum whose tail bound exceeds the tolerance."""


class InternalInconsistencyError(FreshnessToolkitError, RuntimeError):
    """Two computations that must agree did not."""

    exit_code = 3


class InsufficientSamplesError(FreshnessToolkitError, RuntimeError):
    """A simulation finished without a single completed update cycle."""

    exit_code = 4
