from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

FluxFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class OracleEvaluation:
    """Value, Jacobian (rows are component gradients) and determinant of a closed-form map at one point."""

    U: np.ndarray
    DU: np.ndarray
    detDU: float
    residual: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "U": self.U.tolist(),
            "DU": self.DU.tolist(),
            "detDU": self.detDU,
            "residual": self.residual,
        }


def divergence(flux: FluxFunction, point: np.ndarray, step: float) -> float:
    """Centered-difference divergence of a vector field at one point."""
    point = np.asarray(point, dtype=float)
    total = 0.0
    for axis in range(point.size):
        offset = np.zeros_like(point)
        offset[axis] = step
        total += (flux(point + offset)[axis] - flux(point - offset)[axis]) / (2.0 * step)
    return float(total)


def laplacian(function: Callable[[np.ndarray], float], point: np.ndarray, step: float) -> float:
    """Second-difference Laplacian; exact up to roundoff for cubic polynomials."""
    point = np.asarray(point, dtype=float)
    center = function(point)
    total = 0.0
    for axis in range(point.size):
        offset = np.zeros_like(point)
        offset[axis] = step
        total += (function(point + offset) - 2.0 * center + function(point - offset)) / (step * step)
    return float(total)
