"""Exception types shared across the package."""


class LabError(Exception):
    """Base class for all package errors."""


class DomainError(LabError, ValueError):
    pass


class SingularJet(LabError, ArithmeticError):
    pass


class EmptyDriving(LabError, ValueError):
    pass


class NonSimpleCurve(LabError, ValueError):
    pass


class OutOfRange(LabError, ValueError):
    pass


class InvalidHull(LabError, ValueError):
    pass


class HullHit(LabError):
    pass


class SupportError(LabError, ValueError):
    pass


class PoleOnContour(LabError, ValueError):
    pass


class BranchError(LabError, ValueError):
    pass


class PreconditionError(LabError, ValueError):
    pass


class GeometryError(LabError, ValueError):
    pass


class BoundaryProximity(LabError, ValueError):
    pass


class NotUnivalent(LabError, ValueError):
    pass


class ExtractionError(LabError, RuntimeError):
    pass
