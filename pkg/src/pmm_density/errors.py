"""Exception types raised across the package.

All derive from ``ValueError`` so callers that only care about bad input can
catch that.
"""


class ConfigError(ValueError):
    """Invalid user configuration (bad k-set, negative temperature, ...)."""


class InsufficientDataError(ValueError):
    """Too few particles or samples for the requested computation."""


class DegenerateError(ValueError):
    """Zero radii, zero variance or other degenerate numerical input."""
