from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.coefficients.coefficient_field import CoefficientField
from src.config.config_loader import config
from src.config.log_config import logger
from src.solver.fem_solver import DiscreteSolution
from src.utils.errors import MeshMismatch
from src.utils.utils import unit_directions

SolutionPair = Tuple[DiscreteSolution, DiscreteSolution]


@dataclass(frozen=True, eq=False)
class JacobianReport:
    """Per-element det DU of a discrete mapping; rows of DU are the element gradients of u1, u2."""

    jacobians: np.ndarray
    determinants: np.ndarray
    centroids: np.ndarray
    boundary_distance: np.ndarray
    diameter: float
    interior_min: Dict[float, float]
    global_min: float
    eigen_mins: np.ndarray
    sign_changes: int
    powerlaw_fit: Optional[Tuple[float, float]] = None

    def to_dict(self) -> dict:
        report = {
            "global_min": self.global_min,
            "interior_min": {f"{delta:g}": value for delta, value in sorted(self.interior_min.items())},
            "sign_changes": self.sign_changes,
            "max_det": float(self.determinants.max()),
            "min_eigen": float(self.eigen_mins.min()),
            "elements": int(self.determinants.size),
        }
        if self.powerlaw_fit is not None:
            report["powerlaw_exponent"], report["powerlaw_r2"] = self.powerlaw_fit
        return report


def _check_same_mesh(mapping: SolutionPair) -> None:
    first, second = mapping
    if not first.mesh.same_as(second.mesh):
        raise MeshMismatch("the two components live on different meshes")


def jacobian_matrices(mapping: SolutionPair) -> np.ndarray:
    _check_same_mesh(mapping)
    return np.stack([mapping[0].element_gradients, mapping[1].element_gradients], axis=1)


def jacobian_field(mapping: SolutionPair, delta_fractions: Optional[Sequence[float]] = None) -> JacobianReport:
    """
    det DU per element, minima over the elements whose centroid lies at least
    δ·diameter from the boundary, eigenvalue minima of DUᵀDU and the count of det ≤ 0.
    """
    jacobians = jacobian_matrices(mapping)
    mesh = mapping[0].mesh
    determinants = np.linalg.det(jacobians)
    eigen_mins = np.linalg.eigvalsh(np.einsum("mji,mjk->mik", jacobians, jacobians))[:, 0]
    distance = mesh.centroid_boundary_distance

    interior_min = {}
    for delta in delta_fractions if delta_fractions is not None else config.jacobian.delta_fractions:
        selected = distance >= delta * mesh.diameter
        interior_min[float(delta)] = float(determinants[selected].min()) if np.any(selected) else float("nan")

    report = JacobianReport(
        jacobians=jacobians,
        determinants=determinants,
        centroids=mesh.centroids,
        boundary_distance=distance,
        diameter=mesh.diameter,
        interior_min=interior_min,
        global_min=float(determinants.min()),
        eigen_mins=eigen_mins,
        sign_changes=int(np.count_nonzero(determinants <= 0.0)),
    )
    logger.info(
        "Jacobian field: min det %.6g, %s elements with det <= 0", report.global_min, report.sign_changes
    )
    return report


@dataclass(frozen=True, eq=False)
class DirectionalBound:
    minimum: float
    per_direction: np.ndarray
    directions: np.ndarray
    det_squared_error: float

    def to_dict(self) -> dict:
        return {"minimum": self.minimum, "det_squared_error": self.det_squared_error,
                "directions": int(self.directions.shape[0])}


def directional_gradient_bound(mapping: SolutionPair, directions=None) -> DirectionalBound:
    """
    min over ξ and elements of |∇(U·ξ)| = |DUᵀξ|, its per-direction minima, and the
    worst relative mismatch of (det DU)² against det(DUᵀDU).
    """
    if directions is None:
        directions = unit_directions(config.jacobian.n_directions)
    elif np.isscalar(directions):
        directions = unit_directions(int(directions))
    directions = np.asarray(directions, dtype=float)
    if directions.shape[0] < 16:
        raise ValueError("need at least 16 directions")

    jacobians = jacobian_matrices(mapping)
    projected = np.linalg.norm(np.einsum("mia,di->mda", jacobians, directions), axis=2)
    per_direction = projected.min(axis=0)

    gram = np.einsum("mji,mjk->mik", jacobians, jacobians)
    det_squared = np.linalg.det(jacobians) ** 2
    gram_det = np.linalg.det(gram)
    scale = np.maximum(np.abs(gram_det), np.finfo(float).tiny)
    det_squared_error = float(np.max(np.abs(det_squared - gram_det) / scale))

    bound = DirectionalBound(
        minimum=float(per_direction.min()),
        per_direction=per_direction,
        directions=directions,
        det_squared_error=det_squared_error,
    )
    logger.info("Directional gradient bound %.6g over %s directions", bound.minimum, directions.shape[0])
    return bound


def power_density(mapping: SolutionPair, coefficient_field: CoefficientField) -> np.ndarray:
    """H_ij = σ∇u_i·∇u_j per element, i.e. H = DU σᵀ DUᵀ, shape (M, 2, 2)."""
    if coefficient_field.dim != 2:
        raise ValueError("power densities need a 2x2 coefficient field")
    jacobians = jacobian_matrices(mapping)
    sigma = coefficient_field(mapping[0].mesh.centroids)
    return jacobians @ np.swapaxes(sigma, 1, 2) @ np.swapaxes(jacobians, 1, 2)


@dataclass(frozen=True, eq=False)
class QuotientReport:
    values: np.ndarray
    flagged: int
    minimum: float
    maximum: float

    def to_dict(self) -> dict:
        return {"flagged": self.flagged, "min": self.minimum, "max": self.maximum}


def dilatation_quotient(mapping: SolutionPair) -> QuotientReport:
    """Trace(DUᵀDU) / (2 det DU) per element; NaN and flagged where det DU ≤ 0."""
    jacobians = jacobian_matrices(mapping)
    determinants = np.linalg.det(jacobians)
    frobenius = np.einsum("mij,mij->m", jacobians, jacobians)
    valid = determinants > 0.0
    values = np.full(determinants.shape, np.nan)
    values[valid] = frobenius[valid] / (2.0 * determinants[valid])
    flagged = int(np.count_nonzero(~valid))
    if flagged:
        logger.warning("Dilatation quotient skipped on %s elements with det <= 0", flagged)
    return QuotientReport(
        values=values,
        flagged=flagged,
        minimum=float(np.nanmin(values)) if np.any(valid) else float("nan"),
        maximum=float(np.nanmax(values)) if np.any(valid) else float("nan"),
    )
