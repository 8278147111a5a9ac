"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so library code should
raise the most specific type that applies instead of bare ValueError.
"""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SimulationError):
    """An argument or contract violation detected before any work ran."""


class ShapeMismatchError(ValidationError):
    """Array shapes incompatible with the lattice or with each other."""


class NormalizationError(SimulationError):
    """A state that must be unit norm is not."""


class BoundaryOverflowError(SimulationError):
    """Translation on an open lattice would push weight off the edge.

    Silently dropping that weight would break unitarity, so it is fatal.
    """


class DimensionCapError(SimulationError):
    """A dense matrix was requested above the configured size cap."""


class GapClosureError(SimulationError):
    """A spectral gap required by a topological diagnostic is closed."""


class ChiralSymmetryError(SimulationError):
    """Bloch vectors are not confined to a plane, winding is undefined."""


class ConfigError(SimulationError):
    """Bad or unknown experiment configuration."""
