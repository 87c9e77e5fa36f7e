from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Protocol

import numpy as np
from scipy.spatial.distance import pdist

from src.config.config_loader import config
from src.utils.errors import CurveInvariantError, NonPositiveRadius
from src.utils.utils import central_derivative, central_second_derivative

RadiusFunction = Callable[[np.ndarray], np.ndarray]


class Parametrization(Protocol):
    """Arclength parametrization t ∈ [0, length) of a closed planar curve."""

    length: float

    def points(self, t: np.ndarray) -> np.ndarray: ...

    def tangents(self, t: np.ndarray) -> np.ndarray: ...

    def accelerations(self, t: np.ndarray) -> np.ndarray: ...


class CircleParametrization:
    """Circle of given radius about the origin, counter-clockwise, exact formulas."""

    def __init__(self, radius: float = 1.0) -> None:
        self.radius = float(radius)
        self.length = 2.0 * np.pi * self.radius

    def points(self, t: np.ndarray) -> np.ndarray:
        angle = np.asarray(t, dtype=float) / self.radius
        return self.radius * np.column_stack([np.cos(angle), np.sin(angle)])

    def tangents(self, t: np.ndarray) -> np.ndarray:
        angle = np.asarray(t, dtype=float) / self.radius
        return np.column_stack([-np.sin(angle), np.cos(angle)])

    def accelerations(self, t: np.ndarray) -> np.ndarray:
        angle = np.asarray(t, dtype=float) / self.radius
        return -np.column_stack([np.cos(angle), np.sin(angle)]) / self.radius


class StarParametrization:
    """
    Star-shaped curve ρ(θ)(cos θ, sin θ) reparametrized by arclength.
    Arclength is tabulated by composite Simpson quadrature of the speed and
    inverted by Newton iterations; points always lie exactly on the curve.
    """

    def __init__(
            self,
            radius_fn: RadiusFunction,
            n_boundary: int,
            radius_derivative: Optional[RadiusFunction] = None,
            radius_second_derivative: Optional[RadiusFunction] = None,
    ) -> None:
        self.radius_fn = radius_fn
        self._radius_derivative = radius_derivative
        self._radius_second_derivative = radius_second_derivative
        self._subpoints = int(config.mesh.simpson_subpoints)
        self._tolerance = float(config.mesh.arclength_tolerance)

        angles = np.linspace(0.0, 2.0 * np.pi, 16 * max(n_boundary, 64), endpoint=False)
        min_radius = float(np.min(radius_fn(angles)))
        if min_radius <= 0.0:
            raise NonPositiveRadius(
                f"radius function reaches {min_radius:.3e} <= 0", {"min_radius": min_radius}
            )

        n_segments = int(config.mesh.arclength_grid_factor) * max(n_boundary, 64)
        self._theta_grid = np.linspace(0.0, 2.0 * np.pi, n_segments + 1)
        segment_lengths = self._simpson(self._theta_grid[:-1], self._theta_grid[1:])
        self._cumulative = np.concatenate([[0.0], np.cumsum(segment_lengths)])
        self.length = float(self._cumulative[-1])

    # ============================================================
    # Radius derivatives (analytic when given, finite differences otherwise)
    # ============================================================

    def _rho_prime(self, theta: np.ndarray) -> np.ndarray:
        if self._radius_derivative is not None:
            return self._radius_derivative(theta)
        return central_derivative(self.radius_fn, theta, 1e-4)

    def _rho_second(self, theta: np.ndarray) -> np.ndarray:
        if self._radius_second_derivative is not None:
            return self._radius_second_derivative(theta)
        if self._radius_derivative is not None:
            return central_derivative(self._radius_derivative, theta, 1e-4)
        return central_second_derivative(self.radius_fn, theta, 1e-3)

    def speed(self, theta: np.ndarray) -> np.ndarray:
        rho = self.radius_fn(theta)
        rho_prime = self._rho_prime(theta)
        return np.sqrt(rho * rho + rho_prime * rho_prime)

    def _simpson(self, start: np.ndarray, end: np.ndarray) -> np.ndarray:
        """Composite Simpson integral of the speed over each [start_i, end_i]."""
        fractions = np.linspace(0.0, 1.0, self._subpoints + 1)
        weights = np.ones(self._subpoints + 1)
        weights[1:-1:2] = 4.0
        weights[2:-1:2] = 2.0
        width = end - start
        nodes = start[:, None] + width[:, None] * fractions[None, :]
        values = self.speed(nodes.ravel()).reshape(nodes.shape)
        return (values @ weights) * width / (3.0 * self._subpoints)

    # ============================================================
    # Arclength inversion
    # ============================================================

    def theta_of(self, t: np.ndarray) -> np.ndarray:
        """Polar angle θ whose arclength from θ=0 equals t (mod length)."""
        target = np.mod(np.asarray(t, dtype=float), self.length)
        theta = np.interp(target, self._cumulative, self._theta_grid)
        last_segment = self._theta_grid.size - 2
        for _ in range(12):
            index = np.clip(np.searchsorted(self._theta_grid, theta, side="right") - 1, 0, last_segment)
            arclength = self._cumulative[index] + self._simpson(self._theta_grid[index], theta)
            correction = (arclength - target) / self.speed(theta)
            theta = theta - correction
            if np.max(np.abs(correction), initial=0.0) * self.length < self._tolerance * 1e-3:
                break
        return theta

    def points(self, t: np.ndarray) -> np.ndarray:
        theta = self.theta_of(t)
        rho = self.radius_fn(theta)
        return np.column_stack([rho * np.cos(theta), rho * np.sin(theta)])

    def tangents(self, t: np.ndarray) -> np.ndarray:
        theta = self.theta_of(t)
        rho, rho_prime = self.radius_fn(theta), self._rho_prime(theta)
        velocity = np.column_stack([
            rho_prime * np.cos(theta) - rho * np.sin(theta),
            rho_prime * np.sin(theta) + rho * np.cos(theta),
        ])
        return velocity / np.linalg.norm(velocity, axis=1)[:, None]

    def accelerations(self, t: np.ndarray) -> np.ndarray:
        """Φ''(t) = κ(t) J Φ'(t) with the signed polar-curve curvature κ."""
        theta = self.theta_of(t)
        rho, rho_prime, rho_second = self.radius_fn(theta), self._rho_prime(theta), self._rho_second(theta)
        curvature = (rho * rho + 2.0 * rho_prime * rho_prime - rho * rho_second) / (
            (rho * rho + rho_prime * rho_prime) ** 1.5
        )
        tangent = self.tangents(t)
        normal = np.column_stack([-tangent[:, 1], tangent[:, 0]])
        return curvature[:, None] * normal


def polygon_signed_area(points: np.ndarray) -> float:
    """Shoelace area of the closed polygon through `points` (positive when counter-clockwise)."""
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def is_simple_polygon(points: np.ndarray) -> bool:
    """True when no two non-adjacent edges of the closed polygon cross."""
    count = points.shape[0]
    if count < 4:
        return True
    starts = points
    ends = np.roll(points, -1, axis=0)

    def orientation(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    indices = np.arange(count)
    for i in range(count):
        others = indices[(indices > i + 1) & ~((i == 0) & (indices == count - 1))]
        if others.size == 0:
            continue
        p, q = starts[i], ends[i]
        r, s = starts[others], ends[others]
        o1 = orientation(p, q, r)
        o2 = orientation(p, q, s)
        o3 = orientation(r, s, p)
        o4 = orientation(r, s, q)
        if np.any((o1 * o2 < 0.0) & (o3 * o4 < 0.0)):
            return False
    return True


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """Ordered arclength samples of a closed boundary curve."""

    parameters: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    total_length: float
    accelerations: Optional[np.ndarray] = None
    closure_gap: float = 0.0
    closed: bool = True

    def __post_init__(self) -> None:
        if self.total_length <= 0.0:
            raise CurveInvariantError("total_length must be positive")
        if np.any(np.diff(self.parameters) <= 0.0):
            raise CurveInvariantError("sample parameters must be strictly increasing")
        if self.parameters[-1] >= self.parameters[0] + self.total_length:
            raise CurveInvariantError("sample parameters exceed one period")
        if self.closed and self.closure_gap > config.mesh.closure_tolerance * self.total_length:
            raise CurveInvariantError(
                f"curve does not close: gap {self.closure_gap:.3e}", {"closure_gap": self.closure_gap}
            )
        norm_error = float(np.max(np.abs(np.linalg.norm(self.tangents, axis=1) - 1.0)))
        if norm_error > config.mesh.tangent_tolerance:
            raise CurveInvariantError(
                f"tangents are not unit vectors (error {norm_error:.3e})", {"tangent_error": norm_error}
            )
        if not is_simple_polygon(self.points):
            raise CurveInvariantError("sampled polygon self-intersects")

    @classmethod
    def from_parametrization(cls, parametrization: Parametrization, n_samples: int) -> "BoundaryCurve":
        length = parametrization.length
        parameters = length * np.arange(n_samples) / n_samples
        ends = parametrization.points(np.array([0.0, length]))
        return cls(
            parameters=parameters,
            points=parametrization.points(parameters),
            tangents=parametrization.tangents(parameters),
            total_length=length,
            accelerations=parametrization.accelerations(parameters),
            closure_gap=float(np.linalg.norm(ends[1] - ends[0])),
        )

    @property
    def n_samples(self) -> int:
        return int(self.parameters.size)

    @cached_property
    def signed_area(self) -> float:
        return polygon_signed_area(self.points)

    @property
    def orientation(self) -> int:
        """+1 for counter-clockwise traversal, -1 otherwise."""
        return 1 if self.signed_area > 0.0 else -1

    @cached_property
    def diameter(self) -> float:
        return float(np.max(pdist(self.points)))


@dataclass(frozen=True)
class RegularityData:
    rho0: float
    M0: float
    alpha: float

    def __post_init__(self) -> None:
        if self.rho0 <= 0.0 or self.M0 <= 0.0:
            raise ValueError("rho0 and M0 must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """Planar domain bounded by a sampled closed curve with its exact parametrization."""

    boundary: BoundaryCurve
    parametrization: Parametrization
    regularity: Optional[RegularityData] = None
    description: str = ""
    descriptor: dict = field(default_factory=dict)

    @property
    def diameter(self) -> float:
        return self.boundary.diameter

    def with_regularity(self, rho0: float, M0: float, alpha: float) -> "DomainSpec":
        return DomainSpec(self.boundary, self.parametrization, RegularityData(rho0, M0, alpha),
                          self.description, dict(self.descriptor))
