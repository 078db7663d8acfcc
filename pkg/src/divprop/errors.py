"""Exception types raised by divprop."""


class DivpropError(ValueError):
    """Base class for all domain errors."""


class InvalidDimensionError(DivpropError):
    pass


class NotHermiticityPreservingError(DivpropError):
    pass


class HermiticityViolationError(DivpropError):
    pass


class NotCompletelyPositiveError(DivpropError):
    pass


class NotTracePreservingError(DivpropError):
    pass


class NotGeneralizedInverseError(DivpropError):
    pass


class ImageMismatchError(DivpropError):
    pass


class NotAProjectorError(DivpropError):
    pass


class NotAComplementError(DivpropError):
    pass


class InvalidKernelMapError(DivpropError):
    pass


class NotDiagonalizableError(DivpropError):
    pass


class NotDivisibleError(DivpropError):
    pass


class FamilyTooLargeError(DivpropError):
    pass


class ModelInconsistencyError(DivpropError):
    pass


class InvalidHamiltonianError(DivpropError):
    pass


class IntegrationError(DivpropError):
    """Raised when the time-ordered integrator cannot reach the requested time."""

    def __init__(self, message: str, last_time: float):
        super().__init__(f"{message} (last valid time {last_time:.17g})")
        self.last_time = last_time


class NoRightInverseError(DivpropError):
    pass


class InvalidEnsembleError(DivpropError):
    pass


class OrderingError(DivpropError):
    pass
