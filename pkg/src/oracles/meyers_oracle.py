import numpy as np

from src.coefficients.families import family_meyers
from src.config.config_loader import config
from src.oracles.oracle_evaluation import OracleEvaluation, divergence
from src.utils.errors import OriginDerivative


def meyers_mapping(alpha: float, points: np.ndarray) -> np.ndarray:
    """U(x) = |x|^{α-1} x, vectorized over (P, 2); continuous at the origin."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    radius = np.linalg.norm(points, axis=1)
    scale = np.where(radius > 0.0, np.power(np.where(radius > 0.0, radius, 1.0), alpha - 1.0), 0.0)
    return scale[:, None] * points


def meyers_component(alpha: float, component: int):
    """Scalar exact solution u_i(x) = |x|^{α-1} x_i as a vectorized callable."""

    def exact(points: np.ndarray) -> np.ndarray:
        return meyers_mapping(alpha, points)[:, component]

    return exact


def _meyers_jacobian(alpha: float, point: np.ndarray) -> np.ndarray:
    radius = float(np.linalg.norm(point))
    unit = point / radius
    return radius ** (alpha - 1.0) * (np.eye(2) + (alpha - 1.0) * np.outer(unit, unit))


def meyers_eval(alpha: float, point) -> OracleEvaluation:
    """
    Closed-form Meyers map with det DU = α|x|^{2(α-1)}. At the origin DU is the
    identity for α = 1, zero for α > 1, and undefined for α < 1.
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    point = np.asarray(point, dtype=float)
    value = meyers_mapping(alpha, point)[0]
    radius = float(np.linalg.norm(point))
    if radius == 0.0:
        if alpha < 1.0:
            raise OriginDerivative(
                f"DU is unbounded at the origin for alpha = {alpha:g}", {"alpha": alpha, "point": point.tolist()}
            )
        jacobian = np.eye(2) if alpha == 1.0 else np.zeros((2, 2))
        return OracleEvaluation(value, jacobian, 1.0 if alpha == 1.0 else 0.0)
    return OracleEvaluation(value, _meyers_jacobian(alpha, point), alpha * radius ** (2.0 * (alpha - 1.0)))


def meyers_residual(alpha: float, point) -> float:
    """max over i of |div(σ∇u_i)| at `point` by centered differences of the exact flux."""
    point = np.asarray(point, dtype=float)
    radius = float(np.linalg.norm(point))
    if radius == 0.0:
        raise ValueError("the residual is not defined at the origin")
    field = family_meyers(alpha)
    step = config.oracles.fd_relative_step * radius

    def flux_of(component: int):
        def flux(x: np.ndarray) -> np.ndarray:
            return field(x) @ _meyers_jacobian(alpha, x)[component]

        return flux

    return max(abs(divergence(flux_of(component), point, step)) for component in range(2))
