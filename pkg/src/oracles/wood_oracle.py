import numpy as np

from src.config.config_loader import config
from src.oracles.oracle_evaluation import OracleEvaluation, laplacian


def wood_mapping(point: np.ndarray) -> np.ndarray:
    """U = (x1³ - 3x1x3² + x2x3, x2 - 3x1x3, x3), a harmonic polynomial map of R³."""
    x1, x2, x3 = np.asarray(point, dtype=float)
    return np.array([x1 ** 3 - 3.0 * x1 * x3 ** 2 + x2 * x3, x2 - 3.0 * x1 * x3, x3])


def wood_jacobian(point: np.ndarray) -> np.ndarray:
    x1, x2, x3 = np.asarray(point, dtype=float)
    return np.array([
        [3.0 * x1 ** 2 - 3.0 * x3 ** 2, x3, x2 - 6.0 * x1 * x3],
        [-3.0 * x3, 1.0, -3.0 * x1],
        [0.0, 0.0, 1.0],
    ])


def wood_eval(point, check_harmonic: bool = True) -> OracleEvaluation:
    """
    Wood's map: det DU = 3x1², vanishing on the plane x1 = 0. With check_harmonic the
    residual is the largest finite-difference Laplacian over the three components.
    """
    point = np.asarray(point, dtype=float)
    if point.shape != (3,):
        raise ValueError("wood_eval expects a point of R^3")
    residual = None
    if check_harmonic:
        step = config.oracles.laplacian_step
        residual = max(
            abs(laplacian(lambda x, i=component: wood_mapping(x)[i], point, step)) for component in range(3)
        )
    return OracleEvaluation(wood_mapping(point), wood_jacobian(point), 3.0 * point[0] ** 2, residual)
