import numpy as np
import pytest

from conftest import StadiumParametrization
from src.config.log_config import setup_test_logger
from src.geometry.boundary_curve import BoundaryCurve, is_simple_polygon
from src.geometry.domain_builder import make_disk_domain, make_ellipse_domain, make_star_domain
from src.geometry.mesh_io import read_mesh, write_mesh
from src.geometry.regularity import check_c1alpha
from src.geometry.triangulator import square_perimeter_points, triangulate, triangulate_unit_square
from src.utils.errors import ConfigError, CurveInvariantError, InsufficientSamples, NonPositiveRadius

logger = setup_test_logger()


# ============================================================
# Boundary curves and domains
# ============================================================

def test_disk_length_and_unit_tangents():
    """Disk with 16 samples: circumference 2π, unit tangents, simple polygon."""
    domain = make_disk_domain(16)
    curve = domain.boundary
    logger.info(f"Disk length {curve.total_length:.12f}")

    assert curve.total_length == pytest.approx(2.0 * np.pi, abs=1e-6)
    assert np.max(np.abs(np.linalg.norm(curve.tangents, axis=1) - 1.0)) <= 1e-10
    assert is_simple_polygon(make_disk_domain(64).boundary.points)
    assert curve.orientation == 1


def test_disk_rejects_too_few_samples():
    with pytest.raises(ValueError):
        make_disk_domain(8)


def test_constant_radius_star_matches_disk():
    """ρ ≡ 1 reproduces the disk samples."""
    star = make_star_domain(lambda theta: np.ones_like(np.asarray(theta, dtype=float)), 64, description="unit")
    disk = make_disk_domain(64)
    offset = np.max(np.abs(star.boundary.points - disk.boundary.points))
    logger.info(f"Star vs disk offset {offset:.3e}")

    assert star.boundary.total_length == pytest.approx(2.0 * np.pi, abs=1e-8)
    assert offset <= 1e-8


def test_star_length_stable_under_sample_doubling():
    radius = lambda theta: 1.0 + 0.2 * np.cos(theta)
    coarse = make_star_domain(radius, 128).boundary.total_length
    fine = make_star_domain(radius, 256).boundary.total_length
    logger.info(f"Star lengths {coarse:.12f} / {fine:.12f}")
    assert abs(coarse - fine) < 1e-6


def test_nonconvex_star_is_accepted():
    """Domain convexity is not required: ρ = 1 + 0.9 cos 2θ is a valid domain."""
    domain = make_star_domain(lambda theta: 1.0 + 0.9 * np.cos(2.0 * theta), 256)
    assert domain.boundary.total_length > 0.0
    assert is_simple_polygon(domain.boundary.points)


def test_nonpositive_radius_rejected():
    with pytest.raises(NonPositiveRadius):
        make_star_domain(lambda theta: 0.5 + np.cos(theta), 64)


def test_ellipse_descriptor_and_extent():
    domain = make_ellipse_domain(2.0, 1.0, 256)
    points = domain.boundary.points
    logger.info(f"Ellipse length {domain.boundary.total_length:.10f}")

    assert domain.descriptor == {"shape": "ellipse", "a": 2.0, "b": 1.0}
    assert np.max(points[:, 0]) == pytest.approx(2.0, abs=1e-10)
    assert np.max(np.abs(points[:, 1])) == pytest.approx(1.0, abs=1e-3)
    # Ramanujan's approximation of the perimeter is accurate far below this tolerance
    h = ((2.0 - 1.0) / 3.0) ** 2
    ramanujan = np.pi * 3.0 * (1.0 + 3.0 * h / (10.0 + np.sqrt(4.0 - 3.0 * h)))
    assert domain.boundary.total_length == pytest.approx(ramanujan, rel=1e-6)


def test_curve_invariants_raise():
    curve = make_disk_domain(32).boundary
    with pytest.raises(CurveInvariantError):
        BoundaryCurve(curve.parameters[::-1].copy(), curve.points, curve.tangents, curve.total_length)
    with pytest.raises(CurveInvariantError):
        BoundaryCurve(curve.parameters, curve.points, 2.0 * curve.tangents, curve.total_length)
    with pytest.raises(CurveInvariantError):
        BoundaryCurve(curve.parameters, curve.points, curve.tangents, curve.total_length, closure_gap=1e-3)


def test_stadium_curve_builds():
    curve = BoundaryCurve.from_parametrization(StadiumParametrization(), 256)
    assert curve.total_length == pytest.approx(4.0 + 2.0 * np.pi)
    assert curve.orientation == 1


# ============================================================
# C^{1,α} regularity
# ============================================================

def test_c1alpha_disk_passes_and_fails():
    """Unit disk with ρ0 = 0.5, α = 1: passes with M0 = 2, fails with M0 = 0.01."""
    domain = make_disk_domain(256)
    passing = check_c1alpha(domain, rho0=0.5, M0=2.0, alpha=1.0)
    failing = check_c1alpha(domain, rho0=0.5, M0=0.01, alpha=1.0)
    logger.info(f"C1,alpha worst ratios: {passing.worst_ratio:.4f} / {failing.worst_ratio:.4f}")

    assert passing.passed
    assert passing.worst_ratio < 1.0
    assert not failing.passed


def test_c1alpha_uses_stored_regularity():
    domain = make_disk_domain(256).with_regularity(0.5, 2.0, 1.0)
    assert check_c1alpha(domain).passed


def test_c1alpha_huge_window_never_crashes():
    domain = make_disk_domain(64)
    try:
        report = check_c1alpha(domain, rho0=5.0, M0=1.0, alpha=1.0)
    except InsufficientSamples:
        return
    assert not report.passed


def test_c1alpha_requires_regularity_data():
    with pytest.raises(ValueError):
        check_c1alpha(make_disk_domain(64))


# ============================================================
# Meshing and mesh files
# ============================================================

def test_disk_mesh_invariants(coarse_disk_mesh, disk_domain):
    mesh = coarse_disk_mesh
    logger.info(f"h=0.2 mesh: {mesh.n_nodes} nodes, min angle {mesh.min_angles_degrees.min():.2f}")

    assert np.all(mesh.signed_areas > 0.0)
    _, counts, _ = mesh.edge_table
    assert counts.max() <= 2
    assert mesh.boundary_edges.shape[0] == mesh.boundary_nodes.size
    mesh.validate(disk_domain.parametrization)


def test_disk_mesh_refinement_scaling(coarse_disk_mesh, disk_mesh):
    ratio = disk_mesh.n_nodes / coarse_disk_mesh.n_nodes
    logger.info(f"Node growth under halving h: {ratio:.3f}")
    assert 3.5 <= ratio <= 4.5


def test_star_mesh_boundary_on_curve():
    domain = make_star_domain(lambda theta: 1.0 + 0.2 * np.cos(theta), 256)
    mesh = triangulate(domain, 0.1)
    exact = domain.parametrization.points(mesh.boundary_params)
    offset = np.max(np.linalg.norm(exact - mesh.nodes[mesh.boundary_nodes], axis=1))
    logger.info(f"Star mesh boundary offset {offset:.3e}")
    assert offset <= 1e-8 * mesh.total_length


def test_triangulate_rejects_bad_target(disk_domain):
    with pytest.raises(ValueError):
        triangulate(disk_domain, 0.0)
    with pytest.raises(ValueError):
        triangulate(disk_domain, 1.0)


def test_unit_square_mesh_aligned_with_cells():
    mesh = triangulate_unit_square(3, 2)
    assert mesh.n_nodes == 7 * 7
    assert mesh.n_triangles == 2 * 36
    assert np.sum(mesh.signed_areas) == pytest.approx(1.0)
    np.testing.assert_allclose(
        mesh.nodes[mesh.boundary_nodes], square_perimeter_points(mesh.boundary_params), atol=1e-12
    )


def test_mesh_file_round_trip(tmp_path, coarse_disk_mesh):
    path = tmp_path / "disk.txt"
    write_mesh(coarse_disk_mesh, path)
    loaded = read_mesh(path)

    assert loaded.same_as(coarse_disk_mesh)
    np.testing.assert_array_equal(loaded.boundary_nodes, coarse_disk_mesh.boundary_nodes)
    assert loaded.total_length == coarse_disk_mesh.total_length


def test_mesh_file_bad_header(tmp_path):
    path = tmp_path / "broken.txt"
    path.write_text("vertices 3\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        read_mesh(path)
