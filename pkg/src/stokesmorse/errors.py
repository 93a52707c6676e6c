"""Exception types shared across the package."""


class StokesMorseError(Exception):
    """Base class for all package errors."""


class SymmetryError(StokesMorseError, ValueError):
    """Fourier coefficients do not describe a real-valued function."""


class ResolutionError(StokesMorseError):
    """A grid or truncation is too coarse for the requested computation."""


class DivergenceError(StokesMorseError):
    """Newton iteration failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularWaveError(StokesMorseError):
    """The iterate left the regular region ``min lambda(v) > 0``."""


class ConfigError(StokesMorseError, ValueError):
    """Invalid experiment configuration or potential specification."""
