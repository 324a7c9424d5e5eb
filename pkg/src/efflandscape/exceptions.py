"""Exception types raised across the package."""


class LandscapeError(Exception):
    """Base class for all package errors."""


class GridError(LandscapeError, ValueError):
    """Invalid grid, window or box-partition parameters."""


class PotentialError(LandscapeError, ValueError):
    """Potential cannot be sampled or integrated as requested."""


class IndefiniteOperatorError(LandscapeError):
    """The shifted operator is not positive definite.

    ``count`` is the number of eigenvalues <= 0 found by the inertia count.
    """

    def __init__(self, message, count):
        super().__init__(message)
        self.count = count


class SolverError(LandscapeError):
    """Linear solve failed its residual or positivity post-condition."""


class IterationError(LandscapeError):
    """Ground-state iteration left its admissible domain or stalled."""


class ConfigError(LandscapeError, ValueError):
    """Scenario configuration is unreadable or inconsistent."""
