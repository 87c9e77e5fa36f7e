from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from src.coefficients.families import (
    ProfileFunction,
    family_jin_kazdan,
    piecewise_jin_kazdan_profile,
    smooth_jin_kazdan_profile,
)
from src.config.config_loader import config
from src.config.log_config import logger
from src.oracles.oracle_evaluation import OracleEvaluation, divergence
from src.utils.errors import ODEStepFailure

GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(5)


# ============================================================
# Profile φ solving (bφ')' = 2a with φ = 0 for x3 <= 0
# ============================================================

@dataclass(frozen=True, eq=False)
class JinKazdanProfile:
    """
    φ and φ' for U = (x1, x2, -x1x2 + φ(x3)). The smooth profile stores the RK4
    nodes of w = bφ' and φ; between nodes w is completed by Gauss quadrature of 2a,
    so φ' = (1 - a²)w stays positive wherever a has been positive.
    """

    a0: float
    a_fn: ProfileFunction
    smooth: bool
    grid: np.ndarray
    flux_values: np.ndarray
    phi_values: np.ndarray
    x3_max: float

    def __post_init__(self) -> None:
        if self.smooth:
            slopes = (1.0 - self.a_fn(self.grid) ** 2) * self.flux_values
            object.__setattr__(self, "_phi_spline", CubicHermiteSpline(self.grid, self.phi_values, slopes))

    def _check_range(self, x3: np.ndarray) -> None:
        if np.any(x3 > self.x3_max * (1.0 + 1e-12)):
            raise ValueError(f"profile evaluated beyond x3_max = {self.x3_max:g}")

    def flux(self, x3) -> np.ndarray:
        """w = bφ', equal to 2∫₀^{x3} a."""
        x3 = np.atleast_1d(np.asarray(x3, dtype=float))
        self._check_range(x3)
        positive = x3 > 0.0
        if not self.smooth:
            return np.where(positive, 2.0 * self.a0 * x3, 0.0)
        index = np.clip(np.searchsorted(self.grid, x3, side="right") - 1, 0, self.grid.size - 1)
        left = self.grid[index]
        half = 0.5 * np.maximum(x3 - left, 0.0)
        samples = left[:, None] + half[:, None] * (GAUSS_NODES + 1.0)[None, :]
        partial = half * (self.a_fn(samples.ravel()).reshape(samples.shape) @ GAUSS_WEIGHTS)
        return np.where(positive, self.flux_values[index] + 2.0 * partial, 0.0)

    def phi(self, x3) -> np.ndarray:
        x3 = np.atleast_1d(np.asarray(x3, dtype=float))
        self._check_range(x3)
        positive = x3 > 0.0
        if not self.smooth:
            return np.where(positive, self.a0 * (1.0 - self.a0 ** 2) * x3 ** 2, 0.0)
        return np.where(positive, self._phi_spline(np.clip(x3, 0.0, None)), 0.0)

    def phi_prime(self, x3) -> np.ndarray:
        x3 = np.atleast_1d(np.asarray(x3, dtype=float))
        return (1.0 - self.a_fn(x3) ** 2) * self.flux(x3)


def jin_kazdan_smooth(
        a_fn: Optional[ProfileFunction] = None,
        x3_max: Optional[float] = None,
        n_grid: Optional[int] = None,
        a0: float = 0.5,
) -> JinKazdanProfile:
    """Integrate φ' = (1 - a²)w, w' = 2a from φ(0) = w(0) = 0 with classical RK4 on [0, x3_max]."""
    family_jin_kazdan(a_fn=a_fn, smooth=True, a0=a0)
    a_fn = a_fn or smooth_jin_kazdan_profile(a0)
    x3_max = float(x3_max or config.oracles.jk_x3_max)
    n_grid = int(n_grid or config.oracles.jk_grid)
    if n_grid < 1000:
        raise ValueError(f"n_grid must be at least 1000, got {n_grid}")
    if x3_max <= 0.0:
        raise ValueError("x3_max must be positive")

    grid = np.linspace(0.0, x3_max, n_grid + 1)
    step = x3_max / n_grid
    a_nodes = a_fn(grid)
    a_mid = a_fn(grid[:-1] + 0.5 * step)
    phi = np.zeros(n_grid + 1)
    flux = np.zeros(n_grid + 1)

    def rate(a: float, w: float) -> Tuple[float, float]:
        return (1.0 - a * a) * w, 2.0 * a

    for k in range(n_grid):
        p, w = phi[k], flux[k]
        k1 = rate(a_nodes[k], w)
        k2 = rate(a_mid[k], w + 0.5 * step * k1[1])
        k3 = rate(a_mid[k], w + 0.5 * step * k2[1])
        k4 = rate(a_nodes[k + 1], w + step * k3[1])
        phi[k + 1] = p + step / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        flux[k + 1] = w + step / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        if not (np.isfinite(phi[k + 1]) and np.isfinite(flux[k + 1])):
            raise ODEStepFailure(
                f"non-finite state at x3 = {grid[k + 1]:.6g}", {"step": k + 1, "x3": float(grid[k + 1])}
            )

    slopes = (1.0 - a_nodes ** 2) * flux
    if np.any((flux[1:] > 0.0) & (slopes[1:] <= 0.0)) or np.any(slopes < 0.0):
        raise ODEStepFailure("phi' is not positive where the source has acted", {"condition": "monotone"})

    logger.info("Jin-Kazdan profile: a0=%g, %s RK4 steps, phi(%g) = %.10g", a0, n_grid, x3_max, phi[-1])
    return JinKazdanProfile(a0, a_fn, True, grid, flux, phi, x3_max)


def jin_kazdan_piecewise(a0: float = 0.5, x3_max: Optional[float] = None) -> JinKazdanProfile:
    """Two-phase profile a = a0·1{x3 > 0}: φ = a0(1 - a0²)x3² in closed form."""
    family_jin_kazdan(smooth=False, a0=a0)
    x3_max = float(x3_max or config.oracles.jk_x3_max)
    return JinKazdanProfile(a0, piecewise_jin_kazdan_profile(a0), False, np.empty(0), np.empty(0), np.empty(0), x3_max)


# ============================================================
# Evaluation, unique-continuation contrast, small-amplitude limit
# ============================================================

def _gradient_u3(profile: JinKazdanProfile, point: np.ndarray) -> np.ndarray:
    return np.array([-point[1], -point[0], profile.phi_prime(point[2])[0]])


def jin_kazdan_eval(profile: JinKazdanProfile, point, check_residual: bool = False) -> OracleEvaluation:
    """U = (x1, x2, -x1x2 + φ(x3)); DU has the identity block with bottom row (-x2, -x1, φ'), det DU = φ'."""
    point = np.asarray(point, dtype=float)
    if point.shape != (3,):
        raise ValueError("jin_kazdan_eval expects a point of R^3")
    x1, x2, x3 = point
    phi_prime = float(profile.phi_prime(x3)[0])
    value = np.array([x1, x2, -x1 * x2 + float(profile.phi(x3)[0])])
    jacobian = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-x2, -x1, phi_prime]])

    residual = None
    if check_residual:
        field = family_jin_kazdan(a_fn=profile.a_fn, smooth=profile.smooth, a0=profile.a0)
        step = config.oracles.fd_relative_step * max(1.0, float(np.linalg.norm(point)))
        gradients = (
            lambda x: np.array([1.0, 0.0, 0.0]),
            lambda x: np.array([0.0, 1.0, 0.0]),
            lambda x: _gradient_u3(profile, x),
        )
        residual = max(
            abs(divergence(lambda x, g=gradient: field(x) @ g(x), point, step)) for gradient in gradients
        )
    return OracleEvaluation(value, jacobian, phi_prime, residual)


@dataclass(frozen=True, eq=False)
class UniqueContinuationReport:
    """Sample table with columns x1, x2, x3, det, trace over a grid straddling x3 = 0."""

    table: np.ndarray
    zero_side_max_det: float
    positive_side_min_det: float
    trace_min: float
    trace_at_point: float
    split_exact: bool

    def to_dict(self) -> dict:
        return {
            "samples": int(self.table.shape[0]),
            "zero_side_max_det": self.zero_side_max_det,
            "positive_side_min_det": self.positive_side_min_det,
            "trace_min": self.trace_min,
            "trace_at_point": self.trace_at_point,
            "split_exact": self.split_exact,
        }


def unique_continuation_demo(profile: JinKazdanProfile, n_samples: Optional[int] = None) -> UniqueContinuationReport:
    """
    det DU vanishes identically on x3 < 0 and is positive on x3 > 0, while
    |DU|² = 2 + x1² + x2² + φ'² never drops below 2.
    """
    n_samples = int(n_samples or config.oracles.demo_samples)
    n_height = 100
    n_side = max(2, int(round(np.sqrt(n_samples / n_height))))
    extent = min(1.0, profile.x3_max)
    side = np.linspace(-1.0, 1.0, n_side)
    # cell midpoints, so no sample sits on the interface
    heights = -extent + (np.arange(n_height) + 0.5) * (2.0 * extent / n_height)
    x1, x2, x3 = (axis.ravel() for axis in np.meshgrid(side, side, heights, indexing="ij"))

    det = profile.phi_prime(x3)
    trace = 2.0 + x1 ** 2 + x2 ** 2 + det ** 2
    lower, upper = x3 < 0.0, x3 > 0.0
    report = UniqueContinuationReport(
        table=np.column_stack([x1, x2, x3, det, trace]),
        zero_side_max_det=float(np.max(np.abs(det[lower]))),
        positive_side_min_det=float(np.min(det[upper])),
        trace_min=float(trace.min()),
        trace_at_point=float(np.sum(jin_kazdan_eval(profile, [0.0, 0.0, -1.0]).DU ** 2)),
        split_exact=bool(np.all(det[lower] == 0.0) and np.all(det[upper] > 0.0)),
    )
    logger.info("Unique continuation contrast: %s", report.to_dict())
    return report


@dataclass(frozen=True)
class SmallAmplitudeLimitReport:
    a0_values: Tuple[float, ...]
    distances: Tuple[float, ...]
    monotone: bool

    def to_dict(self) -> dict:
        return {"a0": list(self.a0_values), "sup_distance": list(self.distances), "monotone": self.monotone}


def small_amplitude_limit(
        a0_values: Sequence[float] = (0.4, 0.2, 0.1, 0.05),
        smooth: bool = True,
) -> SmallAmplitudeLimitReport:
    """
    Sup-distance on [-1, 1]³ between U for amplitude a0 and the degenerate limit
    (x1, x2, -x1x2). It equals max |φ| on x3 ∈ [0, 1] and must shrink with a0.
    """
    heights = np.linspace(-1.0, 1.0, 401)
    distances = []
    for a0 in a0_values:
        profile = jin_kazdan_smooth(a0=a0) if smooth else jin_kazdan_piecewise(a0)
        distances.append(float(np.max(np.abs(profile.phi(heights)))))
    monotone = all(later <= earlier for earlier, later in zip(distances, distances[1:]))
    report = SmallAmplitudeLimitReport(tuple(float(a0) for a0 in a0_values), tuple(distances), monotone)
    logger.info("Small-amplitude limit: %s", report.to_dict())
    return report
