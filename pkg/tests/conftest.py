import sys, os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import numpy as np
import pytest

from src.coefficients.families import family_constant, family_meyers, family_smooth_random
from src.config.log_config import setup_test_logger
from src.geometry.boundary_curve import BoundaryCurve
from src.geometry.domain_builder import make_disk_domain
from src.geometry.triangulator import triangulate

logger = setup_test_logger()


class StadiumParametrization:
    """
    Two unit half-circles joined by straight sides of length 2, arclength
    parametrized counter-clockwise from (-1, -1). Curvature vanishes on the sides.
    """

    def __init__(self) -> None:
        self.length = 4.0 + 2.0 * np.pi

    def _pieces(self, t: np.ndarray):
        t = np.mod(np.asarray(t, dtype=float), self.length)
        bottom = t < 2.0
        right = (t >= 2.0) & (t < 2.0 + np.pi)
        top = (t >= 2.0 + np.pi) & (t < 4.0 + np.pi)
        angle = np.where(right, -0.5 * np.pi + (t - 2.0), 0.5 * np.pi + (t - 4.0 - np.pi))
        center_x = np.where(right, 1.0, -1.0)
        return t, bottom, top, angle, center_x

    def points(self, t: np.ndarray) -> np.ndarray:
        t, bottom, top, angle, center_x = self._pieces(t)
        x = np.where(bottom, -1.0 + t, np.where(top, 1.0 - (t - 2.0 - np.pi), center_x + np.cos(angle)))
        y = np.where(bottom, -1.0, np.where(top, 1.0, np.sin(angle)))
        return np.column_stack([x, y])

    def tangents(self, t: np.ndarray) -> np.ndarray:
        t, bottom, top, angle, _ = self._pieces(t)
        x = np.where(bottom, 1.0, np.where(top, -1.0, -np.sin(angle)))
        y = np.where(bottom | top, 0.0, np.cos(angle))
        return np.column_stack([x, y])

    def accelerations(self, t: np.ndarray) -> np.ndarray:
        t, bottom, top, angle, _ = self._pieces(t)
        straight = bottom | top
        return np.column_stack([np.where(straight, 0.0, -np.cos(angle)), np.where(straight, 0.0, -np.sin(angle))])


def stadium_curve(n_samples: int = 256) -> BoundaryCurve:
    return BoundaryCurve.from_parametrization(StadiumParametrization(), n_samples)


def linear_trace(matrix):
    matrix = np.asarray(matrix, dtype=float)
    return lambda points: np.asarray(points, dtype=float) @ matrix.T


@pytest.fixture(scope="session")
def disk_domain():
    return make_disk_domain(256)


@pytest.fixture(scope="session")
def disk_mesh(disk_domain):
    """Unit disk at h = 0.1."""
    mesh = triangulate(disk_domain, 0.1)
    logger.info(f"Disk mesh fixture: {mesh.n_nodes} nodes, {mesh.n_triangles} triangles, h={mesh.h:.4f}")
    return mesh


@pytest.fixture(scope="session")
def coarse_disk_mesh(disk_domain):
    """Unit disk at h = 0.2."""
    return triangulate(disk_domain, 0.2)


@pytest.fixture(scope="session")
def identity_field():
    return family_constant(np.eye(2))


@pytest.fixture(scope="session")
def meyers_field_alpha2():
    return family_meyers(2.0)


@pytest.fixture(scope="session")
def smooth_random_field():
    return family_smooth_random(seed=3, K_target=2.0)


@pytest.fixture
def tmp_output_dir(tmp_path):
    """Empty directory for reports; the test decides what may appear in it."""
    output_dir = tmp_path / "output"
    output_dir.mkdir()
    return output_dir
