from typing import Any, Dict, Optional


class LabError(Exception):
    """Base class for every failure raised by the lab."""

    def __init__(self, message: str, report: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.report: Dict[str, Any] = report or {}


# geometry
class CurveInvariantError(LabError):
    pass


class NonPositiveRadius(LabError):
    pass


class InsufficientSamples(LabError):
    pass


class MeshQualityFailure(LabError):
    pass


# boundary characters
class NotUnimodal(LabError):
    pass


class PlateauOverlap(LabError):
    pass


class ZeroRange(LabError):
    pass


class NotStrictlyConvex(LabError):
    pass


class ConvexityFailure(LabError):
    """A projection Φ·ξ failed unimodality; carries the direction and the nested report."""

    def __init__(self, message: str, direction_index: int, direction: Any, cause: LabError) -> None:
        report = {
            "direction_index": direction_index,
            "direction": [float(direction[0]), float(direction[1])],
            "cause": type(cause).__name__,
            "cause_report": cause.report,
        }
        super().__init__(message, report)
        self.direction_index = direction_index
        self.cause = cause


# coefficients
class SingularMatrix(LabError):
    pass


class EllipticityViolation(LabError):
    pass


class A0OutOfRange(LabError):
    pass


# solver / jacobian
class SolveFailure(LabError):
    pass


class SingularSystem(LabError):
    pass


class MeshMismatch(LabError):
    pass


class InsufficientBins(LabError):
    pass


# oracles
class OriginDerivative(LabError):
    pass


class ODEStepFailure(LabError):
    pass


# composites
class InfeasibleClass(LabError):
    pass


class OrderingViolation(LabError):
    pass


# runner
class ConfigError(LabError):
    pass
