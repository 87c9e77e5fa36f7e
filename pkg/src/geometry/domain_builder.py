from typing import Optional

import numpy as np

from src.config.config_loader import config
from src.config.log_config import logger
from src.geometry.boundary_curve import (
    BoundaryCurve,
    CircleParametrization,
    DomainSpec,
    RadiusFunction,
    StarParametrization,
)


def _check_sample_count(n_boundary: int) -> None:
    if n_boundary < config.mesh.min_boundary_samples:
        raise ValueError(f"n_boundary must be >= {config.mesh.min_boundary_samples}, got {n_boundary}")


def make_disk_domain(n_boundary: int) -> DomainSpec:
    """Unit disk sampled uniformly in arclength, tangent (-sin t, cos t)."""
    _check_sample_count(n_boundary)
    parametrization = CircleParametrization(1.0)
    boundary = BoundaryCurve.from_parametrization(parametrization, n_boundary)
    logger.info("Built unit disk domain with %s boundary samples", n_boundary)
    return DomainSpec(boundary, parametrization, description="disk", descriptor={"shape": "disk"})


def make_star_domain(
        radius_fn: RadiusFunction,
        n_boundary: int,
        radius_derivative: Optional[RadiusFunction] = None,
        radius_second_derivative: Optional[RadiusFunction] = None,
        description: str = "star",
) -> DomainSpec:
    """
    Star-shaped domain {r < ρ(θ)} reparametrized by arclength.
    Missing radius derivatives are taken by centered differences.
    """
    _check_sample_count(n_boundary)
    parametrization = StarParametrization(radius_fn, n_boundary, radius_derivative, radius_second_derivative)
    boundary = BoundaryCurve.from_parametrization(parametrization, n_boundary)
    logger.info(
        "Built star domain '%s': %s samples, length %.10f", description, n_boundary, parametrization.length
    )
    return DomainSpec(boundary, parametrization, description=description, descriptor={"shape": description})


def make_ellipse_domain(a: float, b: float, n_boundary: int) -> DomainSpec:
    """Ellipse with semi-axes a (along x1) and b (along x2) as a star domain with analytic radius."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("semi-axes must be positive")

    def radius(theta: np.ndarray) -> np.ndarray:
        return a * b / np.sqrt((b * np.cos(theta)) ** 2 + (a * np.sin(theta)) ** 2)

    def radius_derivative(theta: np.ndarray) -> np.ndarray:
        denominator = (b * np.cos(theta)) ** 2 + (a * np.sin(theta)) ** 2
        return -0.5 * a * b * (a * a - b * b) * np.sin(2.0 * theta) / denominator ** 1.5

    domain = make_star_domain(radius, n_boundary, radius_derivative, description=f"ellipse({a:g},{b:g})")
    return DomainSpec(domain.boundary, domain.parametrization, description=domain.description,
                      descriptor={"shape": "ellipse", "a": a, "b": b})
