import numpy as np
import pytest

from src.coefficients.coefficient_field import ellipticity_constant, verify_ellipticity, verify_holder
from src.coefficients.dilatations import beltrami_dilatations, dilatation_bound, inverse_beltrami
from src.coefficients.families import (
    family_constant,
    family_jin_kazdan,
    family_meyers,
    family_smooth_random,
    field_from_descriptor,
)
from src.config.log_config import setup_test_logger
from src.utils.errors import A0OutOfRange, ConfigError, EllipticityViolation, SingularMatrix

logger = setup_test_logger()

GOLDEN = 0.5 * (3.0 + np.sqrt(5.0))


def _sample_points(count=400, seed=0, window=1.5):
    return np.random.default_rng(seed).uniform(-window, window, size=(count, 2))


# ============================================================
# Ellipticity
# ============================================================

def test_identity_field_is_elliptic_with_k_one(identity_field):
    report = verify_ellipticity(identity_field, _sample_points())
    assert identity_field.K == pytest.approx(1.0)
    assert report.passed
    assert report.worst_ratio_forward == pytest.approx(1.0)
    assert report.worst_ratio_inverse == pytest.approx(1.0)


def test_meyers_field_eigenvalues():
    """σ(1, 0) = diag(1/α, α) and σ(0, 1) = diag(α, 1/α); K = max(α, 1/α)."""
    field = family_meyers(2.0)
    np.testing.assert_allclose(field(np.array([1.0, 0.0])), np.diag([0.5, 2.0]))
    np.testing.assert_allclose(field(np.array([0.0, 3.0])), np.diag([2.0, 0.5]))
    np.testing.assert_allclose(field(np.array([0.0, 0.0])), np.diag([0.5, 2.0]))

    report = verify_ellipticity(field, _sample_points())
    logger.info(f"Meyers ellipticity: {report.to_dict()}")
    assert field.K == pytest.approx(2.0)
    assert report.passed
    assert report.worst_ratio_forward == pytest.approx(0.5, abs=1e-9)


def test_nonsymmetric_constant_matrix_constant():
    """[[1, -1], [1, 1]]: symmetric part I, but |ν| = 1/√5 forces K = (3 + √5)/2."""
    matrix = np.array([[1.0, -1.0], [1.0, 1.0]])
    field = family_constant(matrix)
    logger.info(f"Nonsymmetric K = {field.K:.6f}")

    assert not field.symmetric
    assert field.K == pytest.approx(GOLDEN, rel=1e-9)
    assert verify_ellipticity(field, _sample_points(20)).passed


def test_declared_k_too_small_fails_ellipticity():
    field = family_constant(np.diag([4.0, 1.0]), K=2.0)
    report = verify_ellipticity(field, _sample_points(10))
    assert not report.passed
    assert report.worst_ratio_inverse == pytest.approx(0.25)


def test_singular_matrix_rejected():
    field = family_constant(np.diag([1.0, 0.0]), K=10.0)
    with pytest.raises(SingularMatrix):
        verify_ellipticity(field, _sample_points(10))
    with pytest.raises(SingularMatrix):
        ellipticity_constant(np.diag([1.0, -1.0]))


def test_smooth_random_field_deterministic_and_elliptic(smooth_random_field):
    points = _sample_points(1000, seed=7)
    again = family_smooth_random(seed=3, K_target=2.0)
    np.testing.assert_array_equal(smooth_random_field(points), again(points))

    matrices = smooth_random_field(points)
    np.testing.assert_allclose(matrices, np.swapaxes(matrices, 1, 2))
    report = verify_ellipticity(smooth_random_field, points)
    pair = beltrami_dilatations(matrices, K=2.0)
    logger.info(f"Smooth random: forward {report.worst_ratio_forward:.4f}, max |mu|+|nu| {pair.total.max():.4f}")
    assert report.passed
    assert np.all(pair.total <= dilatation_bound(2.0) + 1e-12)


def test_smooth_random_with_skew_meets_dilatation_bound():
    field = family_smooth_random(seed=11, K_target=3.0, skew_amplitude=1.0)
    points = _sample_points(1000, seed=2)
    matrices = field(points)

    assert not field.symmetric
    assert np.max(np.abs(matrices[:, 0, 1] - matrices[:, 1, 0])) > 0.0
    assert verify_ellipticity(field, points).passed
    beltrami_dilatations(matrices, K=3.0)


def test_different_seeds_give_different_fields():
    points = _sample_points(50)
    first = family_smooth_random(seed=1, K_target=2.0)(points)
    second = family_smooth_random(seed=2, K_target=2.0)(points)
    assert not np.allclose(first, second)


def test_smooth_random_holder_check(smooth_random_field):
    report = verify_holder(smooth_random_field, n_pairs=2000, seed=5)
    logger.info(f"Hölder report: {report.to_dict()}")
    assert report.passed
    assert report.n_pairs == 2000


def test_holder_requires_declared_data(identity_field):
    with pytest.raises(ValueError):
        verify_holder(identity_field)


def test_smooth_random_argument_checks():
    with pytest.raises(ValueError):
        family_smooth_random(seed=0, K_target=1.0)
    with pytest.raises(ValueError):
        family_smooth_random(seed=0, K_target=2.0, skew_amplitude=1.5)


# ============================================================
# Jin-Kazdan fields
# ============================================================

def test_jin_kazdan_field_values():
    field = family_jin_kazdan(smooth=False, a0=0.5)
    below = field(np.array([0.0, 0.0, -1.0]))
    above = field(np.array([0.0, 0.0, 1.0]))

    np.testing.assert_allclose(below, np.eye(3))
    np.testing.assert_allclose(above, [[1.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 4.0 / 3.0]])
    assert field.dim == 3
    points = np.random.default_rng(0).uniform(-1.0, 1.0, size=(200, 3))
    assert verify_ellipticity(field, points).passed


def test_jin_kazdan_a0_range():
    with pytest.raises(A0OutOfRange):
        family_jin_kazdan(a0=1.0)
    with pytest.raises(A0OutOfRange):
        family_jin_kazdan(a0=0.0)
    with pytest.raises(A0OutOfRange):
        family_jin_kazdan(a_fn=lambda x3: np.full_like(x3, 0.3), a0=0.5)


# ============================================================
# Complex dilatations
# ============================================================

def test_identity_has_zero_dilatations():
    pair = beltrami_dilatations(np.eye(2), K=1.0)
    assert abs(pair.mu) == pytest.approx(0.0)
    assert abs(pair.nu) == pytest.approx(0.0)


def test_diagonal_dilatations_reach_bound():
    """σ = diag(2, 1/2): μ = -1/3, ν = 0, which is exactly (K-1)/(K+1) at K = 2."""
    pair = beltrami_dilatations(np.diag([2.0, 0.5]), K=2.0)
    assert pair.mu == pytest.approx(-1.0 / 3.0)
    assert pair.nu == pytest.approx(0.0)
    assert pair.total == pytest.approx(dilatation_bound(2.0))

    with pytest.raises(EllipticityViolation):
        beltrami_dilatations(np.diag([3.0, 1.0 / 3.0]), K=2.0)


@pytest.mark.parametrize(
    "field",
    [
        family_constant(np.array([[1.0, -1.0], [1.0, 1.0]])),
        family_meyers(0.5),
        family_meyers(3.0),
        family_smooth_random(seed=0, K_target=2.0),
        family_smooth_random(seed=4, K_target=3.0, skew_amplitude=0.5),
    ],
    ids=["nonsymmetric", "meyers-0.5", "meyers-3", "random-k2", "random-skew-k3"],
)
def test_planar_families_respect_dilatation_bound(field):
    points = np.random.default_rng(0).uniform(-1.0, 1.0, size=(1000, 2))
    pair = beltrami_dilatations(field(points), K=field.K)
    logger.info(f"{field.description}: max |mu|+|nu| {pair.total.max():.6f} vs {dilatation_bound(field.K):.6f}")
    assert np.all(pair.total <= dilatation_bound(field.K) + 1e-12)


def test_inverse_dilatations_swap_and_negate():
    pair = beltrami_dilatations(np.array([[1.0, -1.0], [1.0, 1.0]]))
    inverse = inverse_beltrami(pair)
    assert inverse.mu == pytest.approx(-pair.nu)
    assert inverse.nu == pytest.approx(-pair.mu)
    assert inverse.total == pytest.approx(pair.total)


def test_dilatation_bound_values():
    assert dilatation_bound(1.0) == 0.0
    assert dilatation_bound(3.0) == pytest.approx(0.5)


# ============================================================
# Descriptors
# ============================================================

def test_field_from_descriptor():
    field = field_from_descriptor({"family": "meyers", "alpha": 0.5})
    assert field.K == pytest.approx(2.0)
    assert field.descriptor == {"family": "meyers", "alpha": 0.5}

    constant = field_from_descriptor({"family": "constant", "matrix": [[2.0, 0.0], [0.0, 1.0]]})
    assert constant.K == pytest.approx(2.0)


def test_field_from_descriptor_errors():
    with pytest.raises(ConfigError) as excinfo:
        field_from_descriptor({"family": "meyers"})
    assert excinfo.value.report["field"] == "coefficient.alpha"
    with pytest.raises(ConfigError):
        field_from_descriptor({"family": "laminate"})
