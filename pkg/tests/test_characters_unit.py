import numpy as np
import pytest

from conftest import stadium_curve
from src.characters.boundary_datum import identity_datum, sample_scalar_datum, sample_vector_datum
from src.characters.convexity_certifier import certify_convex, curvature_character
from src.characters.unimodal_certifier import certify_unimodal, extremal_arcs
from src.config.log_config import setup_test_logger
from src.geometry.domain_builder import make_disk_domain, make_ellipse_domain
from src.utils.errors import ConvexityFailure, NotStrictlyConvex, NotUnimodal, ZeroRange

logger = setup_test_logger()

TWO_PI = 2.0 * np.pi


def _trapezoid(t):
    """Period 8: 0 on [7, 9], rising on [1, 3.5], 1 on [3.5, 4.5], falling on [4.5, 7]."""
    t = np.mod(np.asarray(t, dtype=float), 8.0)
    return np.clip(np.minimum((t - 1.0) / 2.5, (7.0 - t) / 2.5), 0.0, 1.0)


def _trapezoid_derivative(t):
    t = np.mod(np.asarray(t, dtype=float), 8.0)
    return np.where((t > 1.0) & (t < 3.5), 0.4, np.where((t > 4.5) & (t < 7.0), -0.4, 0.0))


# ============================================================
# Scalar unimodality
# ============================================================

def test_sine_is_unimodal():
    """φ = sin t sampled 256 times: m = -1, M = 1, ω(t) = (2/π)t."""
    datum = sample_scalar_datum(np.sin, TWO_PI, 256, derivative=np.cos, description="sin")
    character = certify_unimodal(datum)
    logger.info(f"sin character: {character.to_dict()}")

    assert character.m == pytest.approx(-1.0, abs=1e-12)
    assert character.M == pytest.approx(1.0, abs=1e-12)
    assert character.omega_slope == pytest.approx(2.0 / np.pi, rel=1e-6)
    assert character.t1 <= character.t2 < character.t3 <= character.t4 < character.t1 + character.T


def test_sine_without_analytic_derivative():
    datum = sample_scalar_datum(np.sin, TWO_PI, 256)
    character = certify_unimodal(datum)
    assert character.omega_slope == pytest.approx(2.0 / np.pi, rel=1e-4)


def test_double_frequency_is_not_unimodal():
    datum = sample_scalar_datum(lambda t: np.sin(2.0 * t), TWO_PI, 256)
    with pytest.raises(NotUnimodal) as excinfo:
        certify_unimodal(datum)
    logger.info(f"sin 2t rejected: {excinfo.value.report}")
    assert excinfo.value.report["condition"] == "plateaus"


def test_constant_datum_has_zero_range():
    datum = sample_scalar_datum(lambda t: np.full_like(np.asarray(t, dtype=float), 3.0), TWO_PI, 128)
    with pytest.raises(ZeroRange):
        certify_unimodal(datum)


def test_too_few_samples_rejected():
    datum = sample_scalar_datum(np.sin, TWO_PI, 32)
    with pytest.raises(ValueError):
        certify_unimodal(datum)


def test_trapezoid_plateaus_and_arcs():
    """Plateaus of positive length, with the minimum plateau wrapping through t = 0."""
    datum = sample_scalar_datum(_trapezoid, 8.0, 256, derivative=_trapezoid_derivative, description="trapezoid")
    character = certify_unimodal(datum)
    arcs = extremal_arcs(datum, character)
    logger.info(f"Trapezoid arcs: {arcs.to_dict()}, slope {character.omega_slope:.6f}")

    assert arcs.gamma_max == pytest.approx((3.5, 1.0))
    assert arcs.gamma_min == pytest.approx((7.0, 2.0))
    # 0.4 / 1.25 at the middle of each monotone segment
    assert character.omega_slope == pytest.approx(0.32, rel=1e-9)

    inside = arcs.contains(np.array([0.5, 4.0, 7.5, 2.0, 5.5]))
    np.testing.assert_array_equal(inside, [True, True, True, False, False])


def test_affine_datum_keeps_slope_ratio():
    datum = sample_scalar_datum(np.sin, TWO_PI, 256, derivative=np.cos)
    scaled = certify_unimodal(datum.affine(3.0, 1.0))
    assert scaled.M - scaled.m == pytest.approx(6.0)
    assert scaled.omega_slope == pytest.approx(6.0 / np.pi, rel=1e-6)


# ============================================================
# Convexity characters
# ============================================================

def test_circle_measured_character():
    """Identity on the unit circle: D = 2 (the diameter) and slope 2/π."""
    curve = make_disk_domain(256).boundary
    character = certify_convex(identity_datum(curve), n_directions=64, num_workers=2)
    logger.info(f"Circle measured character: {character.to_dict()}")

    assert character.D == pytest.approx(2.0, abs=1e-3)
    assert character.omega_slope == pytest.approx(2.0 / np.pi, rel=1e-3)
    assert character.directions_tested == 64
    assert len(character.per_direction) == 64


def test_circle_curvature_character():
    character = curvature_character(make_disk_domain(256).boundary)
    assert character.curvature_min == pytest.approx(1.0)
    assert character.curvature_max == pytest.approx(1.0)
    assert character.D == pytest.approx(1.0)
    assert character.omega_slope == pytest.approx(2.0 / np.pi)


def test_ellipse_curvature_character_bounds_measured():
    """Ellipse (2, 1): κ = b/a² = 1/4, K = a/b² = 2, so the predicted D is 1/2."""
    curve = make_ellipse_domain(2.0, 1.0, 256).boundary
    predicted = curvature_character(curve)
    measured = certify_convex(identity_datum(curve), n_directions=64)
    logger.info(f"Ellipse predicted {predicted.to_dict()} measured D={measured.D:.6f}")

    assert predicted.curvature_max == pytest.approx(2.0, rel=1e-4)
    assert predicted.curvature_min == pytest.approx(0.25, rel=1e-4)
    assert predicted.D == pytest.approx(0.5, rel=1e-4)
    assert measured.D >= predicted.D


def test_rotation_permutes_directions():
    """Rotating Φ by a multiple of the direction spacing only relabels the projections."""
    datum = identity_datum(make_ellipse_domain(2.0, 1.0, 256).boundary)
    base = certify_convex(datum, n_directions=64)
    rotated = certify_convex(datum.rotated(2.0 * np.pi * 5 / 64), n_directions=64)
    assert rotated.D == pytest.approx(base.D, rel=1e-9)
    assert rotated.omega_slope == pytest.approx(base.omega_slope, rel=1e-6)


def test_stadium_is_not_strictly_convex():
    with pytest.raises(NotStrictlyConvex) as excinfo:
        curvature_character(stadium_curve())
    assert excinfo.value.report["kappa"] == pytest.approx(0.0, abs=1e-12)


def test_figure_eight_fails_with_direction():
    """Φ(t) = (sin t, sin 2t): the vertical projection has two maxima."""
    datum = sample_vector_datum(
        lambda t: np.column_stack([np.sin(t), np.sin(2.0 * t)]),
        TWO_PI,
        256,
        derivative=lambda t: np.column_stack([np.cos(t), 2.0 * np.cos(2.0 * t)]),
        description="figure eight",
    )
    with pytest.raises(ConvexityFailure) as excinfo:
        certify_convex(datum, n_directions=64)
    report = excinfo.value.report
    logger.info(f"Figure eight failed at direction {report['direction']} ({report['cause']})")

    assert np.linalg.norm(report["direction"]) == pytest.approx(1.0)
    assert report["cause"] in {"NotUnimodal", "PlateauOverlap", "ZeroRange"}


def test_convexity_needs_enough_directions():
    curve = make_disk_domain(64).boundary
    with pytest.raises(ValueError):
        certify_convex(identity_datum(curve), n_directions=16)
