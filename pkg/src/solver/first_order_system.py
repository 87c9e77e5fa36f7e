from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from src.coefficients.coefficient_field import CoefficientField
from src.coefficients.dilatations import beltrami_dilatations
from src.config.log_config import logger
from src.solver.fem_solver import DiscreteSolution
from src.solver.stream_function import StreamFunction

RegionMask = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class FirstOrderReport:
    max_residual: float
    element_residuals: np.ndarray
    checked_elements: int
    min_jacobian: float

    def to_dict(self) -> dict:
        return {"max_residual": self.max_residual, "checked_elements": self.checked_elements,
                "min_jacobian": self.min_jacobian}


def complex_derivatives(solution: DiscreteSolution, stream: StreamFunction):
    """(f_z, f_z̄) per element for f = u + iũ, with ũ the least-squares potential."""
    u_x, u_y = solution.element_gradients[:, 0], solution.element_gradients[:, 1]
    v_x, v_y = stream.fitted_gradients[:, 0], stream.fitted_gradients[:, 1]
    f_z = 0.5 * ((u_x + v_y) + 1j * (v_x - u_y))
    f_zbar = 0.5 * ((u_x - v_y) + 1j * (v_x + u_y))
    return f_z, f_zbar


def check_first_order_system(
        solution: DiscreteSolution,
        stream: StreamFunction,
        coefficient_field: CoefficientField,
        margin_factor: float = 2.0,
        region: Optional[RegionMask] = None,
) -> FirstOrderReport:
    """
    Relative residual |f_z̄ - μf_z - ν conj(f_z)| / |f_z| per element, maximized over
    elements farther than margin_factor·h from the boundary and from the field's
    singular points (and inside `region` when given).
    """
    mesh = solution.mesh
    f_z, f_zbar = complex_derivatives(solution, stream)
    pair = beltrami_dilatations(coefficient_field(mesh.centroids))
    magnitude = np.abs(f_z)
    residuals = np.abs(f_zbar - pair.mu * f_z - pair.nu * np.conj(f_z)) / np.where(magnitude > 0.0, magnitude, np.inf)

    margin = margin_factor * mesh.h
    mask = mesh.centroid_boundary_distance > margin
    mask &= coefficient_field.distance_to_singularities(mesh.centroids) > margin
    if region is not None:
        mask &= np.asarray(region(mesh.centroids), dtype=bool)

    jacobian = np.abs(f_z) ** 2 - np.abs(f_zbar) ** 2
    max_residual = float(np.max(residuals[mask], initial=0.0))
    report = FirstOrderReport(
        max_residual=max_residual,
        element_residuals=residuals,
        checked_elements=int(np.count_nonzero(mask)),
        min_jacobian=float(np.min(jacobian[mask], initial=np.inf)),
    )
    logger.info(
        "First-order system residual %.3e over %s elements (min |f_z|^2-|f_zbar|^2 = %.3e)",
        max_residual, report.checked_elements, report.min_jacobian,
    )
    return report
