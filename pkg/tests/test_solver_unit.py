import numpy as np
import pytest

from conftest import linear_trace
from src.characters.boundary_datum import identity_datum, trace_scalar_datum
from src.coefficients.families import family_constant
from src.config.log_config import setup_test_logger
from src.geometry.triangulator import triangulate
from src.solver.fem_solver import (
    EllipticSolver,
    assemble_and_solve,
    convergence_study,
    l2_error,
    maximum_principle_excess,
    solve_mapping,
)
from src.solver.first_order_system import check_first_order_system
from src.solver.stream_function import circulation, stream_function

logger = setup_test_logger()


def _first_coordinate(points):
    return np.asarray(points, dtype=float)[:, 0]


def _saddle(points):
    points = np.asarray(points, dtype=float)
    return points[:, 0] ** 2 - points[:, 1] ** 2


def _meyers_annulus(centroids):
    radii = np.hypot(centroids[:, 0], centroids[:, 1])
    return (radii > 0.3) & (radii < 0.8)


# ============================================================
# Dirichlet solves
# ============================================================

def test_linear_data_reproduced_exactly(coarse_disk_mesh, identity_field):
    """P1 elements reproduce affine σ-harmonic functions up to round-off."""
    exact = lambda points: 2.0 * points[:, 0] - 0.5 * points[:, 1] + 1.0
    solution = assemble_and_solve(coarse_disk_mesh, identity_field, exact)
    error = np.max(np.abs(solution.nodal_values - exact(coarse_disk_mesh.nodes)))
    logger.info(f"Linear reproduction error {error:.3e}, residual {solution.residual_norm:.2e}")

    assert error <= 1e-10
    np.testing.assert_allclose(solution.element_gradients, np.tile([2.0, -0.5], (coarse_disk_mesh.n_triangles, 1)),
                               atol=1e-9)
    assert maximum_principle_excess(solution) <= 1e-12


def test_constant_anisotropic_field_reproduces_linear(coarse_disk_mesh):
    field = family_constant(np.array([[3.0, 0.6], [0.6, 1.0]]))
    solution = assemble_and_solve(coarse_disk_mesh, field, _first_coordinate)
    assert l2_error(solution, _first_coordinate) <= 1e-10


def test_boundary_datum_from_trace(disk_domain, coarse_disk_mesh, identity_field):
    datum = trace_scalar_datum(disk_domain.parametrization, _first_coordinate, 256, description="x1")
    solution = assemble_and_solve(coarse_disk_mesh, identity_field, datum)
    np.testing.assert_allclose(solution.values_at_boundary(), coarse_disk_mesh.nodes[coarse_disk_mesh.boundary_nodes, 0])


def test_factorization_reused_across_data(coarse_disk_mesh, smooth_random_field):
    solver = EllipticSolver(coarse_disk_mesh, smooth_random_field)
    first = solver.solve(_saddle)
    other = solver.solve(_first_coordinate)
    again = solver.solve(_saddle)

    assert np.array_equal(first.nodal_values, again.nodal_values)
    assert not np.allclose(first.nodal_values, other.nodal_values)
    assert first.residual_norm <= 1e-10


def test_solution_is_linear_in_the_datum(disk_mesh, smooth_random_field):
    solver = EllipticSolver(disk_mesh, smooth_random_field)
    combined = solver.solve(lambda points: 2.0 * _saddle(points) - 0.5 * _first_coordinate(points))
    expected = 2.0 * solver.solve(_saddle).nodal_values - 0.5 * solver.solve(_first_coordinate).nodal_values
    np.testing.assert_allclose(combined.nodal_values, expected, atol=1e-9)


def test_skew_part_drops_out_of_the_solve(disk_mesh, identity_field):
    """σ = I + J: the skew part of a constant matrix is divergence free, so the solve matches σ = I."""
    field = family_constant(np.array([[1.0, -1.0], [1.0, 1.0]]))
    assert not field.symmetric
    solution = assemble_and_solve(disk_mesh, field, _saddle)
    reference = assemble_and_solve(disk_mesh, identity_field, _saddle)
    excess = maximum_principle_excess(solution)
    logger.info(f"Nonsymmetric constant field: maximum principle excess {excess:.3e}")

    assert excess <= 1e-6
    np.testing.assert_allclose(solution.nodal_values, reference.nodal_values, atol=1e-9)


def test_solve_mapping_matches_component_solves(coarse_disk_mesh, disk_domain, smooth_random_field):
    u1, u2 = solve_mapping(coarse_disk_mesh, smooth_random_field, identity_datum(disk_domain.boundary))
    separate = assemble_and_solve(coarse_disk_mesh, smooth_random_field, _first_coordinate)
    np.testing.assert_allclose(u1.nodal_values, separate.nodal_values, atol=1e-12)
    np.testing.assert_allclose(u2.boundary_values, coarse_disk_mesh.nodes[coarse_disk_mesh.boundary_nodes, 1])


def test_saddle_converges_at_second_order(disk_domain, identity_field):
    """u = x1² - x2² is harmonic; relative L2 error decays like h²."""
    result = convergence_study(disk_domain, identity_field, _saddle, _saddle, [0.2, 0.1, 0.05])
    logger.info(f"Saddle convergence: {result.to_dict()}")

    assert all(later < earlier for earlier, later in zip(result.errors, result.errors[1:]))
    assert 1.7 <= result.mean_order <= 2.3


def test_l2_error_absolute_and_relative(coarse_disk_mesh, identity_field):
    solution = assemble_and_solve(coarse_disk_mesh, identity_field, _first_coordinate)
    shifted = lambda points: _first_coordinate(points) + 1.0
    absolute = l2_error(solution, shifted, relative=False)
    # |1| over the polygonal disk
    assert absolute == pytest.approx(np.sqrt(np.sum(coarse_disk_mesh.signed_areas)), rel=1e-9)
    assert l2_error(solution, shifted) < absolute


# ============================================================
# Stream functions and the first-order system
# ============================================================

def test_stream_function_of_first_coordinate(coarse_disk_mesh, identity_field):
    """σ = I, u = x1: ∇ũ = J∇u = (0, 1), so ũ = x2 (root on the x1-axis)."""
    solution = assemble_and_solve(coarse_disk_mesh, identity_field, _first_coordinate)
    stream = stream_function(solution, identity_field, method="tree")
    offset = coarse_disk_mesh.nodes[coarse_disk_mesh.boundary_nodes[0], 1]
    logger.info(f"Stream loop residual {stream.loop_residual:.3e}")

    np.testing.assert_allclose(stream.nodal_values, coarse_disk_mesh.nodes[:, 1] - offset, atol=1e-10)
    assert stream.loop_residual <= 1e-10

    fitted = stream_function(solution, identity_field, method="least_squares")
    np.testing.assert_allclose(fitted.nodal_values, stream.nodal_values, atol=1e-9)


def test_boundary_circulation_vanishes_for_uniform_flux(coarse_disk_mesh):
    field = family_constant(np.diag([2.0, 1.0]))
    solution = assemble_and_solve(coarse_disk_mesh, field, linear_trace(np.array([1.0, 1.0])))
    stream = stream_function(solution, field)
    total = circulation(stream, solution, coarse_disk_mesh.boundary_nodes)
    assert abs(total) <= 1e-10


def test_unknown_stream_method(coarse_disk_mesh, identity_field):
    solution = assemble_and_solve(coarse_disk_mesh, identity_field, _first_coordinate)
    with pytest.raises(ValueError):
        stream_function(solution, identity_field, method="spectral")


def test_first_order_system_for_identity(coarse_disk_mesh, identity_field):
    """f = x1 + i x2 = z solves f_z̄ = 0."""
    solution = assemble_and_solve(coarse_disk_mesh, identity_field, _first_coordinate)
    stream = stream_function(solution, identity_field)
    report = check_first_order_system(solution, stream, identity_field)
    logger.info(f"First-order system: {report.to_dict()}")

    assert report.checked_elements > 0
    assert report.max_residual <= 1e-9
    assert report.min_jacobian == pytest.approx(1.0, abs=1e-9)


def test_first_order_system_for_constant_anisotropy(coarse_disk_mesh):
    field = family_constant(np.array([[2.0, 0.3], [0.3, 0.8]]))
    solution = assemble_and_solve(coarse_disk_mesh, field, lambda points: points[:, 0] + 2.0 * points[:, 1])
    stream = stream_function(solution, field)
    report = check_first_order_system(solution, stream, field)
    assert report.max_residual <= 1e-9


def test_first_order_system_on_meyers_annulus(disk_domain, meyers_field_alpha2):
    """α = 2, u = x1 at h = 0.02: the tree stream function must not spoil the residual away from the origin."""
    mesh = triangulate(disk_domain, 0.02)
    field = meyers_field_alpha2
    solution = assemble_and_solve(mesh, field, _first_coordinate)

    tree = check_first_order_system(solution, stream_function(solution, field, method="tree"), field,
                                    region=_meyers_annulus)
    fitted = check_first_order_system(solution, stream_function(solution, field, method="least_squares"), field,
                                      region=_meyers_annulus)
    logger.info(f"Meyers annulus residual: tree {tree.max_residual:.3e}, least squares {fitted.max_residual:.3e}")

    assert tree.checked_elements > 0
    assert tree.max_residual <= 0.05
    np.testing.assert_allclose(tree.element_residuals, fitted.element_residuals, atol=1e-12)


def test_first_order_residual_decreases_for_smooth_field(disk_domain, smooth_random_field):
    residuals = []
    for h in [0.1, 0.05, 0.025]:
        solution = assemble_and_solve(triangulate(disk_domain, h), smooth_random_field, _first_coordinate)
        stream = stream_function(solution, smooth_random_field)
        residuals.append(check_first_order_system(solution, stream, smooth_random_field).max_residual)
    logger.info(f"Smooth field first-order residuals: {residuals}")

    assert all(later < earlier for earlier, later in zip(residuals, residuals[1:]))


def test_tree_loop_residual_decays_under_refinement(disk_domain, smooth_random_field):
    loop_residuals = []
    for h in [0.1, 0.05, 0.025]:
        solution = assemble_and_solve(triangulate(disk_domain, h), smooth_random_field, _first_coordinate)
        loop_residuals.append(stream_function(solution, smooth_random_field, method="tree").loop_residual)
    ratios = [coarse / fine for coarse, fine in zip(loop_residuals, loop_residuals[1:])]
    logger.info(f"Tree loop residuals {loop_residuals}, ratios {ratios}")

    assert all(ratio >= 1.5 for ratio in ratios)
