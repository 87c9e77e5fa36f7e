import numpy as np
import pytest

from src.config.log_config import setup_test_logger
from src.oracles.jin_kazdan_oracle import (
    jin_kazdan_eval,
    jin_kazdan_piecewise,
    jin_kazdan_smooth,
    small_amplitude_limit,
    unique_continuation_demo,
)
from src.oracles.meyers_oracle import meyers_component, meyers_eval, meyers_mapping, meyers_residual
from src.oracles.wood_oracle import wood_eval, wood_jacobian
from src.utils.errors import A0OutOfRange, OriginDerivative
from src.utils.utils import finite_difference_jacobian

logger = setup_test_logger()


# ============================================================
# Meyers map
# ============================================================

def test_meyers_alpha2_on_axis():
    """α = 2 at (1/2, 0): U = (1/4, 0), DU = diag(1, 1/2), det = 2·(1/2)² = 1/2."""
    evaluation = meyers_eval(2.0, [0.5, 0.0])
    np.testing.assert_allclose(evaluation.U, [0.25, 0.0])
    np.testing.assert_allclose(evaluation.DU, np.diag([1.0, 0.5]))
    assert evaluation.detDU == pytest.approx(0.5)
    assert np.linalg.det(evaluation.DU) == pytest.approx(evaluation.detDU)


def test_meyers_at_origin():
    assert meyers_eval(1.0, [0.0, 0.0]).detDU == 1.0
    assert meyers_eval(2.0, [0.0, 0.0]).detDU == 0.0
    with pytest.raises(OriginDerivative):
        meyers_eval(0.5, [0.0, 0.0])


def test_meyers_jacobian_matches_differences():
    point = np.array([0.3, -0.4])
    evaluation = meyers_eval(0.5, point)
    numeric = finite_difference_jacobian(lambda x: meyers_mapping(0.5, x)[0], point, 1e-6)
    np.testing.assert_allclose(evaluation.DU, numeric, atol=1e-6)
    assert evaluation.detDU == pytest.approx(0.5 * 0.5 ** (2.0 * (0.5 - 1.0)))


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 3.0])
def test_meyers_map_is_sigma_harmonic(alpha):
    residual = meyers_residual(alpha, [0.3, 0.4])
    logger.info(f"Meyers residual alpha={alpha}: {residual:.3e}")
    assert residual <= 1e-6


def test_meyers_component_vectorized():
    points = np.array([[1.0, 0.0], [0.0, 2.0], [0.0, 0.0]])
    np.testing.assert_allclose(meyers_component(2.0, 1)(points), [0.0, 4.0, 0.0])


# ============================================================
# Wood's harmonic map
# ============================================================

def test_wood_map_values():
    evaluation = wood_eval([1.0, 2.0, 3.0])
    logger.info(f"Wood at (1,2,3): {evaluation.to_dict()}")

    np.testing.assert_allclose(evaluation.U, [1.0 - 27.0 + 6.0, 2.0 - 9.0, 3.0])
    assert evaluation.detDU == pytest.approx(3.0)
    assert np.linalg.det(evaluation.DU) == pytest.approx(3.0)
    assert evaluation.residual <= 1e-6


def test_wood_determinant_vanishes_on_plane():
    evaluation = wood_eval([0.0, 0.7, -0.4], check_harmonic=False)
    assert evaluation.detDU == 0.0
    assert evaluation.residual is None
    assert np.linalg.det(wood_jacobian([0.0, 0.7, -0.4])) == pytest.approx(0.0, abs=1e-12)


def test_wood_rejects_planar_points():
    with pytest.raises(ValueError):
        wood_eval([1.0, 2.0])


# ============================================================
# Jin-Kazdan map
# ============================================================

def test_piecewise_profile_closed_form():
    """a0 = 1/2: φ = a0(1 - a0²)x3² and φ' = (1 - a0²)·2a0·x3 above the interface."""
    profile = jin_kazdan_piecewise(0.5)
    above = jin_kazdan_eval(profile, [0.2, -0.3, 1.0], check_residual=True)
    below = jin_kazdan_eval(profile, [0.2, -0.3, -1.0])

    assert above.U[2] == pytest.approx(0.06 + 0.375)
    assert above.detDU == pytest.approx(0.75)
    assert above.residual <= 1e-6
    assert below.detDU == 0.0
    assert below.U[2] == pytest.approx(0.06)


def test_smooth_profile_grid_independent():
    coarse = jin_kazdan_smooth(n_grid=2000)
    fine = jin_kazdan_smooth(n_grid=4000)
    heights = np.linspace(0.1, 2.0, 20)
    difference = np.max(np.abs(coarse.phi(heights) - fine.phi(heights)))
    logger.info(f"Profile grid difference {difference:.3e}")

    assert difference <= 1e-8
    assert np.all(np.diff(coarse.phi(heights)) > 0.0)


def test_smooth_map_solves_equation():
    profile = jin_kazdan_smooth()
    evaluation = jin_kazdan_eval(profile, [0.3, -0.2, 0.8], check_residual=True)
    logger.info(f"Smooth Jin-Kazdan residual {evaluation.residual:.3e}")
    assert evaluation.residual <= 1e-5
    assert evaluation.detDU > 0.0


def test_smooth_profile_arguments():
    with pytest.raises(ValueError):
        jin_kazdan_smooth(n_grid=100)
    with pytest.raises(A0OutOfRange):
        jin_kazdan_smooth(a0=1.5)
    with pytest.raises(ValueError):
        jin_kazdan_smooth().phi(5.0)


@pytest.mark.parametrize("smooth", [True, False])
def test_unique_continuation_contrast(smooth):
    profile = jin_kazdan_smooth() if smooth else jin_kazdan_piecewise(0.5)
    report = unique_continuation_demo(profile, n_samples=2500)
    logger.info(f"Unique continuation ({'smooth' if smooth else 'piecewise'}): {report.to_dict()}")

    assert report.split_exact
    assert report.zero_side_max_det == 0.0
    assert report.positive_side_min_det > 0.0
    assert report.trace_min >= 2.0
    assert report.trace_at_point == pytest.approx(2.0)


def test_small_amplitude_limit_shrinks():
    report = small_amplitude_limit((0.4, 0.2, 0.1))
    assert report.monotone
    assert report.distances[-1] < report.distances[0]
    piecewise = small_amplitude_limit((0.4, 0.2, 0.1), smooth=False)
    # max φ on [0, 1] is a0(1 - a0²)
    assert piecewise.distances == pytest.approx((0.4 * 0.84, 0.2 * 0.96, 0.1 * 0.99))
