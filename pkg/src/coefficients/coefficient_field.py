from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from src.coefficients.dilatations import beltrami_dilatations
from src.config.config_loader import config
from src.config.log_config import logger
from src.utils.errors import SingularMatrix
from src.utils.utils import unit_directions

MatrixEvaluator = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """
    Position-dependent coefficient matrix σ. `evaluator` maps points (P, dim)
    to matrices (P, dim, dim); calling the field accepts a single point as well.
    """

    evaluator: MatrixEvaluator
    K: float
    dim: int = 2
    holder: Optional[Tuple[float, float]] = None
    symmetric: bool = True
    description: str = ""
    descriptor: dict = field(default_factory=dict)
    singular_points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __call__(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            return self.evaluator(points[None, :])[0]
        return self.evaluator(points)

    def distance_to_singularities(self, points: np.ndarray) -> np.ndarray:
        if self.singular_points.size == 0:
            return np.full(np.asarray(points).shape[0], np.inf)
        offsets = np.asarray(points)[:, None, :] - self.singular_points[None, :, :]
        return np.linalg.norm(offsets, axis=2).min(axis=1)


@dataclass(frozen=True)
class EllipticityReport:
    passed: bool
    worst_ratio_forward: float
    worst_ratio_inverse: float
    worst_point: Tuple[float, ...]
    worst_direction: Optional[Tuple[float, ...]]
    K: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "worst_ratio_forward": self.worst_ratio_forward,
            "worst_ratio_inverse": self.worst_ratio_inverse,
            "worst_point": list(self.worst_point),
            "worst_direction": None if self.worst_direction is None else list(self.worst_direction),
            "K": self.K,
        }


@dataclass(frozen=True)
class HolderReport:
    passed: bool
    worst_excess: float
    worst_ratio: float
    n_pairs: int

    def to_dict(self) -> dict:
        return {"passed": self.passed, "worst_excess": self.worst_excess,
                "worst_ratio": self.worst_ratio, "n_pairs": self.n_pairs}


def _check_determinants(matrices: np.ndarray, points: np.ndarray) -> None:
    determinants = np.linalg.det(matrices)
    if np.any(determinants <= config.coefficients.singular_det):
        index = int(np.argmin(determinants))
        raise SingularMatrix(
            f"det sigma = {determinants[index]:.3e} at {points[index].tolist()}",
            {"point": points[index].tolist(), "det": float(determinants[index])},
        )


def verify_ellipticity(
        coefficient_field: CoefficientField,
        sample_points: np.ndarray,
        n_directions: Optional[int] = None,
) -> EllipticityReport:
    """
    Worst values of σξ·ξ and σ⁻¹ξ·ξ over unit ξ and the sample points; passes when
    both stay above K⁻¹ within the configured slack. 2×2 fields use a direction
    grid, 3×3 fields the smallest eigenvalue of the symmetric part.
    """
    points = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if points.shape[0] == 0:
        raise ValueError("sample_points is empty")
    matrices = coefficient_field(points)
    _check_determinants(matrices, points)
    inverses = np.linalg.inv(matrices)

    if coefficient_field.dim == 2:
        directions = unit_directions(n_directions or config.coefficients.n_directions)
        forward = np.einsum("di,pij,dj->pd", directions, matrices, directions)
        inverse = np.einsum("di,pij,dj->pd", directions, inverses, directions)
    else:
        directions = None
        forward = np.linalg.eigvalsh(0.5 * (matrices + np.swapaxes(matrices, 1, 2)))
        inverse = np.linalg.eigvalsh(0.5 * (inverses + np.swapaxes(inverses, 1, 2)))

    worst_forward = float(forward.min())
    worst_inverse = float(inverse.min())
    threshold = 1.0 / coefficient_field.K - config.coefficients.ellipticity_slack
    passed = worst_forward >= threshold and worst_inverse >= threshold

    worst_table = forward if worst_forward <= worst_inverse else inverse
    point_index, direction_index = np.unravel_index(int(np.argmin(worst_table)), worst_table.shape)
    report = EllipticityReport(
        passed=bool(passed),
        worst_ratio_forward=worst_forward,
        worst_ratio_inverse=worst_inverse,
        worst_point=tuple(points[point_index].tolist()),
        worst_direction=None if directions is None else tuple(directions[direction_index].tolist()),
        K=coefficient_field.K,
    )
    if not passed:
        logger.warning(
            "Ellipticity check failed for '%s': forward %.6g inverse %.6g < 1/K=%.6g",
            coefficient_field.description, worst_forward, worst_inverse, 1.0 / coefficient_field.K,
        )
    return report


def verify_holder(
        coefficient_field: CoefficientField,
        n_pairs: Optional[int] = None,
        seed: int = 0,
        window: Optional[float] = None,
) -> HolderReport:
    """
    Statistical Hölder check |σ_ij(x) - σ_ij(x')| ≤ E|x - x'|^α over random pairs,
    half of them at log-uniform small separations.
    """
    if coefficient_field.holder is None:
        raise ValueError(f"field '{coefficient_field.description}' declares no Hölder data")
    alpha, constant = coefficient_field.holder
    n_pairs = n_pairs or config.coefficients.holder_pairs
    window = window or config.coefficients.random_window
    rng = np.random.default_rng(seed)

    first = rng.uniform(-window, window, size=(n_pairs, coefficient_field.dim))
    far = rng.uniform(-window, window, size=(n_pairs // 2, coefficient_field.dim))
    near_count = n_pairs - far.shape[0]
    offsets = rng.normal(size=(near_count, coefficient_field.dim))
    offsets /= np.linalg.norm(offsets, axis=1)[:, None]
    offsets *= 10.0 ** rng.uniform(-4.0, 0.0, size=(near_count, 1))
    second = np.vstack([far, first[far.shape[0]:] + offsets])

    jumps = np.abs(coefficient_field(first) - coefficient_field(second)).max(axis=(1, 2))
    bounds = constant * np.linalg.norm(first - second, axis=1) ** alpha
    excess = jumps - bounds
    ratios = jumps / np.maximum(bounds, 1e-300)
    report = HolderReport(
        passed=bool(np.all(excess <= config.coefficients.holder_slack)),
        worst_excess=float(excess.max()),
        worst_ratio=float(ratios.max()),
        n_pairs=n_pairs,
    )
    logger.info("Hölder check for '%s': worst ratio %.4f", coefficient_field.description, report.worst_ratio)
    return report


def ellipticity_constant(matrix: np.ndarray) -> float:
    """
    Smallest K with σξ·ξ ≥ K⁻¹|ξ|² and σ⁻¹ξ·ξ ≥ K⁻¹|ξ|². For 2×2 matrices the
    constant is also raised, if needed, so that |μ| + |ν| ≤ (K-1)/(K+1).
    """
    matrix = np.asarray(matrix, dtype=float)
    inverse = np.linalg.inv(matrix)
    smallest = min(
        float(np.linalg.eigvalsh(0.5 * (matrix + matrix.T)).min()),
        float(np.linalg.eigvalsh(0.5 * (inverse + inverse.T)).min()),
    )
    if smallest <= 0.0:
        raise SingularMatrix("matrix is not positive definite", {"min_eigenvalue": smallest})
    constant = 1.0 / smallest
    if matrix.shape == (2, 2):
        pair = beltrami_dilatations(matrix)
        total = float(abs(pair.mu) + abs(pair.nu))
        constant = max(constant, (1.0 + total) / (1.0 - total))
    return max(constant, 1.0)
