from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.linalg import splu

from src.characters.boundary_datum import ScalarBoundaryDatum, VectorBoundaryDatum
from src.coefficients.coefficient_field import CoefficientField
from src.config.config_loader import config
from src.config.log_config import logger
from src.geometry.boundary_curve import DomainSpec
from src.geometry.mesh import Mesh
from src.geometry.triangulator import triangulate
from src.utils.errors import SingularSystem, SolveFailure

PointFunction = Callable[[np.ndarray], np.ndarray]
ScalarData = Union[ScalarBoundaryDatum, PointFunction]
VectorData = Union[VectorBoundaryDatum, PointFunction]


@dataclass(frozen=True, eq=False)
class DiscreteSolution:
    """P1 solution: nodal values, constant gradient per triangle, imposed boundary trace."""

    mesh: Mesh
    nodal_values: np.ndarray
    element_gradients: np.ndarray
    boundary_values: np.ndarray
    residual_norm: float
    description: str = ""

    def values_at_boundary(self) -> np.ndarray:
        return self.nodal_values[self.mesh.boundary_nodes]


def element_gradients(mesh: Mesh, nodal_values: np.ndarray) -> np.ndarray:
    """Exact gradient of the P1 interpolant on each triangle, shape (M, 2)."""
    return np.einsum("mi,mia->ma", nodal_values[mesh.triangles], mesh.shape_gradients)


def boundary_values(mesh: Mesh, datum: ScalarData) -> np.ndarray:
    """Datum at the mesh boundary nodes, through its point trace when it has one."""
    points = mesh.nodes[mesh.boundary_nodes]
    if isinstance(datum, ScalarBoundaryDatum):
        return datum.values_at(mesh.boundary_params, points)
    return np.asarray(datum(points), dtype=float)


def vector_boundary_values(mesh: Mesh, datum: VectorData) -> np.ndarray:
    points = mesh.nodes[mesh.boundary_nodes]
    if isinstance(datum, VectorBoundaryDatum):
        if datum.trace is not None:
            return np.asarray(datum.trace(points), dtype=float)
        return np.column_stack([
            datum.component(index).values_at(mesh.boundary_params) for index in range(2)
        ])
    return np.asarray(datum(points), dtype=float)


class EllipticSolver:
    """
    P1 Dirichlet solver for div(σ∇u) = 0 with σ evaluated at element centroids.
    The interior block is factorized once and reused for every boundary datum.
    """

    def __init__(self, mesh: Mesh, coefficient_field: CoefficientField) -> None:
        if coefficient_field.dim != 2:
            raise ValueError("the elliptic solver needs a 2x2 coefficient field")
        self.mesh = mesh
        self.coefficient_field = coefficient_field
        self.sigma = coefficient_field(mesh.centroids)
        self.stiffness = self._assemble()

        self._interior = np.flatnonzero(~mesh.is_boundary_node)
        self._boundary = mesh.boundary_nodes
        self._interior_block = self.stiffness[self._interior][:, self._interior].tocsc()
        self._coupling_block = self.stiffness[self._interior][:, self._boundary].tocsr()
        try:
            self._factor = splu(self._interior_block)
        except RuntimeError as error:
            raise SingularSystem(f"stiffness matrix is singular: {error}") from error
        logger.debug("Factorized interior block of size %s", self._interior.size)

    def _assemble(self) -> csr_matrix:
        """K_ij = Σ_T |T| σ(c_T)∇φ_j·∇φ_i, no symmetrization."""
        mesh = self.mesh
        gradients = mesh.shape_gradients
        fluxes = np.einsum("mab,mjb->mja", self.sigma, gradients)
        local = mesh.signed_areas[:, None, None] * np.einsum("mia,mja->mij", gradients, fluxes)
        rows = np.broadcast_to(mesh.triangles[:, :, None], local.shape)
        columns = np.broadcast_to(mesh.triangles[:, None, :], local.shape)
        matrix = coo_matrix((local.ravel(), (rows.ravel(), columns.ravel())), shape=(mesh.n_nodes, mesh.n_nodes))
        return matrix.tocsr()

    def solve(self, datum: ScalarData, description: str = "") -> DiscreteSolution:
        return self.solve_values(boundary_values(self.mesh, datum), description)

    def solve_values(self, trace: np.ndarray, description: str = "") -> DiscreteSolution:
        trace = np.asarray(trace, dtype=float)
        rhs = -(self._coupling_block @ trace)
        interior_values = self._factor.solve(rhs)
        for _ in range(int(config.solver.refinement_steps)):
            correction = self._factor.solve(rhs - self._interior_block @ interior_values)
            interior_values = interior_values + correction

        residual = np.linalg.norm(rhs - self._interior_block @ interior_values)
        scale = max(np.linalg.norm(rhs), np.linalg.norm(self._interior_block @ interior_values), 1e-300)
        residual_norm = float(residual / scale) if residual > 0.0 else 0.0
        if not np.all(np.isfinite(interior_values)) or residual_norm > config.solver.residual_tolerance:
            raise SolveFailure(
                f"relative residual {residual_norm:.3e} above {config.solver.residual_tolerance:.1e}",
                {"residual_norm": residual_norm},
            )

        nodal_values = np.empty(self.mesh.n_nodes)
        nodal_values[self._interior] = interior_values
        nodal_values[self._boundary] = trace
        return DiscreteSolution(
            mesh=self.mesh,
            nodal_values=nodal_values,
            element_gradients=element_gradients(self.mesh, nodal_values),
            boundary_values=trace,
            residual_norm=residual_norm,
            description=description,
        )


def assemble_and_solve(mesh: Mesh, coefficient_field: CoefficientField, datum: ScalarData) -> DiscreteSolution:
    solver = EllipticSolver(mesh, coefficient_field)
    solution = solver.solve(datum, getattr(datum, "description", ""))
    logger.info(
        "Solved div(sigma grad u)=0 for '%s' on %s nodes, residual %.2e",
        coefficient_field.description, mesh.n_nodes, solution.residual_norm,
    )
    return solution


def solve_mapping(
        mesh: Mesh, coefficient_field: CoefficientField, phi: VectorData
) -> Tuple[DiscreteSolution, DiscreteSolution]:
    """Both components of a σ-harmonic mapping with one shared factorization."""
    solver = EllipticSolver(mesh, coefficient_field)
    traces = vector_boundary_values(mesh, phi)
    first = solver.solve_values(traces[:, 0], "u1")
    second = solver.solve_values(traces[:, 1], "u2")
    logger.info(
        "Solved sigma-harmonic mapping for '%s' on %s nodes, residuals %.2e / %.2e",
        coefficient_field.description, mesh.n_nodes, first.residual_norm, second.residual_norm,
    )
    return first, second


# ============================================================
# Error measures and refinement studies
# ============================================================

def l2_error(solution: DiscreteSolution, exact: PointFunction, relative: bool = True) -> float:
    """L2 distance to `exact` with the edge-midpoint rule (exact for quadratics)."""
    mesh = solution.mesh
    corners = mesh.vertices
    values = solution.nodal_values[mesh.triangles]
    squared_error = np.zeros(mesh.n_triangles)
    squared_norm = np.zeros(mesh.n_triangles)
    for first, second in ((0, 1), (1, 2), (2, 0)):
        midpoints = 0.5 * (corners[:, first] + corners[:, second])
        exact_values = np.asarray(exact(midpoints), dtype=float)
        discrete = 0.5 * (values[:, first] + values[:, second])
        squared_error += (discrete - exact_values) ** 2
        squared_norm += exact_values ** 2
    weights = mesh.signed_areas / 3.0
    error = float(np.sqrt(np.sum(weights * squared_error)))
    if not relative:
        return error
    return error / float(np.sqrt(np.sum(weights * squared_norm)))


def maximum_principle_excess(solution: DiscreteSolution) -> float:
    """How far nodal values leave [min datum, max datum]; zero when the principle holds."""
    low, high = solution.boundary_values.min(), solution.boundary_values.max()
    values = solution.nodal_values
    return float(max(low - values.min(), values.max() - high, 0.0))


@dataclass(frozen=True)
class ConvergenceResult:
    h_values: Tuple[float, ...]
    errors: Tuple[float, ...]
    orders: Tuple[float, ...]
    node_counts: Tuple[int, ...]

    @property
    def mean_order(self) -> float:
        return float(np.mean(self.orders))

    def to_dict(self) -> dict:
        return {"h": list(self.h_values), "errors": list(self.errors), "orders": list(self.orders),
                "nodes": list(self.node_counts), "mean_order": self.mean_order}


def convergence_study(
        domain: DomainSpec,
        coefficient_field: CoefficientField,
        datum: PointFunction,
        exact: PointFunction,
        target_h_values: Sequence[float],
        meshes: Optional[List[Mesh]] = None,
) -> ConvergenceResult:
    """Relative L2 errors over a sequence of meshes and the observed orders between levels."""
    h_values, errors, nodes = [], [], []
    meshes = meshes or [triangulate(domain, h) for h in target_h_values]
    for mesh in meshes:
        solution = assemble_and_solve(mesh, coefficient_field, datum)
        h_values.append(mesh.h)
        errors.append(l2_error(solution, exact))
        nodes.append(mesh.n_nodes)
    orders = [
        float(np.log(errors[i] / errors[i + 1]) / np.log(h_values[i] / h_values[i + 1]))
        for i in range(len(errors) - 1)
    ]
    result = ConvergenceResult(tuple(h_values), tuple(errors), tuple(orders), tuple(nodes))
    logger.info("Convergence study: errors %s, orders %s", np.round(errors, 8).tolist(), np.round(orders, 3).tolist())
    return result
