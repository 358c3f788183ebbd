"""Exception types shared across the package."""


class IfsdimError(Exception):
    """Base class for errors raised by this package."""


class NonFiniteError(IfsdimError):
    """A matrix or vector contains NaN or infinite entries."""


class SingularMatrixError(IfsdimError):
    """A matrix required to be invertible is numerically singular."""


class ContractionError(IfsdimError):
    """A map that must be a contraction fails its certificate."""


class InadmissibleWordError(IfsdimError):
    """A symbol word violates the transfer-matrix constraints."""


class PointOutsideDomainError(IfsdimError):
    """A point lies outside the system's domain box."""


class NonContractivePotentialError(IfsdimError):
    """A stopping-rule potential failed to decrease along an extension."""


class MeasureSupportError(IfsdimError):
    """A shift measure puts mass on transitions the subshift forbids."""


class BudgetExceededError(IfsdimError):
    """An enumeration would exceed the configured work budget."""


class InsufficientResolutionError(IfsdimError):
    """A scale grid reaches below the resolution of the point cloud."""


class ConfigError(IfsdimError):
    """A run configuration failed to parse or validate."""
