"""Exception hierarchy."""


class Opde3Error(Exception):
    """Base class for all library errors."""


class NotSymmetric(Opde3Error, ValueError):
    pass


class NotPositiveDefinite(Opde3Error, ValueError):
    pass


class GrowthRejected(Opde3Error, ValueError):
    """Raised for exponentials with Re(omega) > 0, which do not decay on R+."""


class EvaluationOutsideGrid(Opde3Error, ValueError):
    pass


class PowerIterationDiverged(Opde3Error, RuntimeError):
    pass


class ContractionFailure(Opde3Error, RuntimeError):
    pass


class KappaOutOfRange(Opde3Error, ValueError):
    pass


class _AchievedValues(Opde3Error, RuntimeError):
    def __init__(self, message, **achieved):
        super().__init__(message)
        self.achieved = achieved


class ResidualExceeded(_AchievedValues):
    pass


class BoundaryConditionViolated(_AchievedValues):
    pass


class NotContracting(_AchievedValues):
    pass


class IterationCapExceeded(_AchievedValues):
    pass


class NotSolvable(Opde3Error, RuntimeError):
    """Raised when a solve is requested for an instance the analyzer does not certify."""
