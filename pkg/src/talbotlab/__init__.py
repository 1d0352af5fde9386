"""talbotlab: periodic Schrodinger evolution, revivals, and fractal diagnostics."""

from .errors import (
    ConfigError,
    EstimatorUndefinedError,
    InsufficientScalesError,
    NonConvergenceError,
    NumericError,
    TalbotLabError,
    UndersampledGridError,
)
from .fields import (
    GridField,
    SpectralField,
    analyze,
    cesaro,
    lp_block_index,
    lp_block_range,
    lp_max_level,
    lp_project,
    multiply,
    resize,
    synthesize,
)

__version__ = "0.1.0"

__all__ = [
    "TalbotLabError",
    "ConfigError",
    "NumericError",
    "UndersampledGridError",
    "EstimatorUndefinedError",
    "InsufficientScalesError",
    "NonConvergenceError",
    "SpectralField",
    "GridField",
    "synthesize",
    "analyze",
    "multiply",
    "lp_project",
    "lp_block_index",
    "lp_block_range",
    "lp_max_level",
    "resize",
    "cesaro",
    "__version__",
]
