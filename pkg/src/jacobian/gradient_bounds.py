from dataclasses import dataclass

import numpy as np

from src.characters.unimodal_certifier import ExtremalArcs
from src.config.log_config import logger
from src.solver.fem_solver import DiscreteSolution


@dataclass(frozen=True)
class GradientBoundReport:
    """Measured minima of |∇u| standing in for the non-constructive constants κ, L and C."""

    near_arcs_min: float
    boundary_layer_min: float
    global_min: float
    delta: float
    r: float
    status: str

    @property
    def positive(self) -> bool:
        return min(self.near_arcs_min, self.boundary_layer_min, self.global_min) > 0.0

    def to_dict(self) -> dict:
        return {
            "near_arcs_min": self.near_arcs_min,
            "boundary_layer_min": self.boundary_layer_min,
            "global_min": self.global_min,
            "delta": self.delta,
            "r": self.r,
            "status": self.status,
        }


def verify_gradient_bounds(
        solution: DiscreteSolution,
        arcs: ExtremalArcs,
        delta: float,
        r: float,
        hypotheses_hold: bool = True,
) -> GradientBoundReport:
    """
    min |∇u_h| over elements within δ of Γ_min ∪ Γ_max, within r of ∂Ω, and overall.
    Non-positive minima are reported as degenerate; when the caller states the
    coefficient violates the regularity hypotheses the status is expected_degenerate.
    """
    mesh = solution.mesh
    magnitudes = np.linalg.norm(solution.element_gradients, axis=1)
    spacing = mesh.total_length / mesh.boundary_nodes.size

    on_arcs = arcs.contains(mesh.boundary_params, tolerance=0.5 * spacing)
    arc_points = mesh.nodes[mesh.boundary_nodes[on_arcs]]
    if arc_points.shape[0] == 0:
        near_arcs = np.zeros(mesh.n_triangles, dtype=bool)
    else:
        arc_distance = np.linalg.norm(mesh.centroids[:, None, :] - arc_points[None, :, :], axis=2).min(axis=1)
        near_arcs = arc_distance <= delta
    layer = mesh.centroid_boundary_distance <= r

    def region_min(mask: np.ndarray) -> float:
        return float(magnitudes[mask].min()) if np.any(mask) else float("nan")

    near_arcs_min, layer_min, global_min = region_min(near_arcs), region_min(layer), float(magnitudes.min())
    degenerate = not min(near_arcs_min, layer_min, global_min) > 0.0
    if not hypotheses_hold:
        status = "expected_degenerate"
    else:
        status = "degenerate" if degenerate else "ok"
    report = GradientBoundReport(near_arcs_min, layer_min, global_min, delta, r, status)
    if status != "ok":
        logger.warning("Gradient bound degenerate (%s): %s", status, report.to_dict())
    else:
        logger.info(
            "Gradient bounds: near arcs %.4g, boundary layer %.4g, global %.4g",
            near_arcs_min, layer_min, global_min,
        )
    return report
