"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, numeric failures (non-convergence, unusable estimators) with 3.
"""

__all__ = [
    "TalbotLabError",
    "ConfigError",
    "NumericError",
    "UndersampledGridError",
    "EstimatorUndefinedError",
    "InsufficientScalesError",
    "NonConvergenceError",
]


class TalbotLabError(Exception):
    """Base class for package-specific errors."""


class ConfigError(TalbotLabError, ValueError):
    """Invalid experiment configuration or config file."""


class NumericError(TalbotLabError, RuntimeError):
    """A numeric procedure failed to produce a trustworthy result."""


class UndersampledGridError(TalbotLabError, ValueError):
    """Grid too coarse for the requested spectral content."""


class EstimatorUndefinedError(NumericError):
    """A regression-based estimator has too little usable data."""


class InsufficientScalesError(TalbotLabError, ValueError):
    """Fewer dyadic scales available than a slope fit needs."""


class NonConvergenceError(NumericError):
    """Iteration failed to converge; carries the residual history."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])
