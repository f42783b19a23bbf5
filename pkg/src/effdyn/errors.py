"""Exception hierarchy shared by all effdyn modules."""


class EffdynError(Exception):
    """Base class for every error raised by effdyn."""


class InvalidArgumentError(EffdynError, ValueError):
    """An argument violates a documented precondition."""


class CoverageError(EffdynError):
    """A tabulated potential does not cover the working grid."""


class NumericalFailure(EffdynError):
    """A numerical routine did not converge or produced an inconsistent result."""


class GridClippingError(NumericalFailure):
    """An eigenvector has non-negligible amplitude at the box boundary."""


class RangeError(EffdynError):
    """A constrained mean position cannot be reached inside the box."""


class DomainError(EffdynError):
    """A query lies outside the range where a table or curve is defined."""


class InsufficientDataError(EffdynError):
    """A series is too short to extract the requested quantity."""


class ReflectionError(NumericalFailure):
    """A propagated wave packet reached the box boundary."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class StiffnessError(NumericalFailure):
    """The adaptive flow integrator collapsed its step size."""

    def __init__(self, message, k=None):
        super().__init__(message)
        self.k = k


class FlowQualityError(NumericalFailure):
    """The infrared potential of an RG flow violates convexity."""


class ModelInvariantError(EffdynError):
    """A dynamics model is inconsistent (e.g. non-positive Z_eff)."""


class EnergyDriftError(NumericalFailure):
    """A classical run drifted off its conserved energy."""

    def __init__(self, message, drift=None):
        super().__init__(message)
        self.drift = drift
