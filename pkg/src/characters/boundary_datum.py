from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from src.geometry.boundary_curve import BoundaryCurve, Parametrization
from src.utils.utils import periodic_derivative, rotation_matrix

TraceFunction = Callable[[np.ndarray], np.ndarray]
ParameterFunction = Callable[[np.ndarray], np.ndarray]


def holder_constant(parameters: np.ndarray, derivatives: np.ndarray, period: float, alpha: float) -> float:
    """Smallest E with |φ'(s) - φ'(s')| ≤ E|s - s'|^α over all sample pairs (periodic distance)."""
    gaps = np.abs(parameters[:, None] - parameters[None, :])
    gaps = np.minimum(gaps, period - gaps)
    jumps = np.abs(derivatives[:, None] - derivatives[None, :])
    off_diagonal = gaps > 0.0
    return float(np.max(jumps[off_diagonal] / gaps[off_diagonal] ** alpha, initial=0.0))


@dataclass(frozen=True, eq=False)
class ScalarBoundaryDatum:
    """
    Periodic scalar boundary data sampled at arclength parameters.
    `trace`, when present, evaluates the datum at arbitrary boundary points (used by the solver).
    """

    parameters: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    period: float
    holder: Optional[Tuple[float, float]] = None
    trace: Optional[TraceFunction] = None
    description: str = ""

    @property
    def n_samples(self) -> int:
        return int(self.parameters.size)

    def values_at(self, parameters: np.ndarray, points: Optional[np.ndarray] = None) -> np.ndarray:
        if self.trace is not None and points is not None:
            return np.asarray(self.trace(points), dtype=float)
        return np.interp(parameters, self.parameters, self.values, period=self.period)

    def affine(self, scale: float, shift: float) -> "ScalarBoundaryDatum":
        trace = None if self.trace is None else (lambda points: scale * self.trace(points) + shift)
        return ScalarBoundaryDatum(
            self.parameters, scale * self.values + shift, scale * self.derivatives, self.period,
            None, trace, f"{scale:g}*({self.description})+{shift:g}",
        )


@dataclass(frozen=True, eq=False)
class VectorBoundaryDatum:
    """Periodic planar boundary map Φ sampled at arclength parameters, values shape (n, 2)."""

    parameters: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    period: float
    trace: Optional[TraceFunction] = None
    description: str = ""

    def project(self, direction: np.ndarray) -> ScalarBoundaryDatum:
        """The scalar datum φ_ξ = Φ·ξ."""
        direction = np.asarray(direction, dtype=float)
        trace = None if self.trace is None else (lambda points: self.trace(points) @ direction)
        return ScalarBoundaryDatum(
            self.parameters, self.values @ direction, self.derivatives @ direction, self.period,
            trace=trace, description=f"{self.description}·({direction[0]:.4f},{direction[1]:.4f})",
        )

    def component(self, index: int) -> ScalarBoundaryDatum:
        return self.project(np.eye(2)[index])

    def rotated(self, angle: float) -> "VectorBoundaryDatum":
        rotation = rotation_matrix(angle)
        trace = None if self.trace is None else (lambda points: self.trace(points) @ rotation.T)
        return VectorBoundaryDatum(
            self.parameters, self.values @ rotation.T, self.derivatives @ rotation.T, self.period,
            trace, f"R({angle:g}){self.description}",
        )


# ============================================================
# Constructors
# ============================================================

def _check_periodic(function: ParameterFunction, period: float) -> None:
    ends = np.asarray(function(np.array([0.0, period])), dtype=float)
    if np.max(np.abs(ends[0] - ends[1])) > 1e-9 * max(1.0, float(np.max(np.abs(ends)))):
        raise ValueError("boundary datum is not periodic over the given period")


def sample_scalar_datum(
        function: ParameterFunction,
        period: float,
        n_samples: int,
        derivative: Optional[ParameterFunction] = None,
        holder_alpha: Optional[float] = None,
        trace: Optional[TraceFunction] = None,
        description: str = "",
) -> ScalarBoundaryDatum:
    """Sample φ(t) on a uniform grid; φ' analytic when given, else 4th-order periodic differences."""
    _check_periodic(function, period)
    parameters = period * np.arange(n_samples) / n_samples
    values = np.asarray(function(parameters), dtype=float)
    if derivative is not None:
        derivatives = np.asarray(derivative(parameters), dtype=float)
    else:
        derivatives = periodic_derivative(values, period / n_samples)
    holder = None
    if holder_alpha is not None:
        holder = (holder_alpha, holder_constant(parameters, derivatives, period, holder_alpha))
    return ScalarBoundaryDatum(parameters, values, derivatives, period, holder, trace, description)


def trace_scalar_datum(
        parametrization: Parametrization,
        trace: TraceFunction,
        n_samples: int,
        holder_alpha: Optional[float] = None,
        description: str = "",
) -> ScalarBoundaryDatum:
    """Datum t ↦ φ(Φ(t)) for a function φ of boundary points; the solver reuses `trace`."""
    return sample_scalar_datum(
        lambda t: trace(parametrization.points(t)),
        parametrization.length,
        n_samples,
        holder_alpha=holder_alpha,
        trace=trace,
        description=description,
    )


def sample_vector_datum(
        function: ParameterFunction,
        period: float,
        n_samples: int,
        derivative: Optional[ParameterFunction] = None,
        trace: Optional[TraceFunction] = None,
        description: str = "",
) -> VectorBoundaryDatum:
    _check_periodic(function, period)
    parameters = period * np.arange(n_samples) / n_samples
    values = np.asarray(function(parameters), dtype=float)
    if derivative is not None:
        derivatives = np.asarray(derivative(parameters), dtype=float)
    else:
        derivatives = periodic_derivative(values, period / n_samples)
    return VectorBoundaryDatum(parameters, values, derivatives, period, trace, description)


def identity_datum(curve: BoundaryCurve) -> VectorBoundaryDatum:
    """Φ = identity on the boundary: values are the curve samples, derivatives the unit tangents."""
    return VectorBoundaryDatum(
        curve.parameters, curve.points, curve.tangents, curve.total_length,
        trace=lambda points: np.asarray(points, dtype=float), description="identity",
    )
