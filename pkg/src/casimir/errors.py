"""Exception hierarchy for the world-line Casimir engine."""

from typing import Optional


class CasimirError(Exception):
    """Base error for casimir."""
    pass


class GeometryError(CasimirError):
    """Invalid lines, polygons, paths or loops."""
    pass


class DivergentWeightError(GeometryError):
    """The objects share a common point, so the irreducible weight diverges."""

    def __init__(self, message: str = "divergent weight: objects share a common point"):
        super().__init__(message)


class BridgeError(CasimirError):
    """Invalid bridge or ensemble parameters."""
    pass


class SpectralError(CasimirError):
    """Invalid input to the Feynman-Kac estimators."""
    pass


class ConfigError(CasimirError):
    """Invalid run configuration."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field
