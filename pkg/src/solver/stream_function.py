from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import breadth_first_order
from scipy.sparse.linalg import spsolve

from src.coefficients.coefficient_field import CoefficientField
from src.config.config_loader import config
from src.config.log_config import logger
from src.solver.fem_solver import DiscreteSolution, element_gradients
from src.utils.utils import J


@dataclass(frozen=True, eq=False)
class StreamFunction:
    """
    Conjugate potential ũ with ∇ũ ≈ Jσ∇u, normalized to 0 at the first boundary node.
    fitted_gradients are the element gradients of the edge least-squares potential
    whatever the integration method; tree seams do not show up in them.
    """

    nodal_values: np.ndarray
    element_gradients: np.ndarray
    fitted_gradients: np.ndarray
    element_fluxes: np.ndarray
    loop_residual: float
    method: str


def element_fluxes(solution: DiscreteSolution, coefficient_field: CoefficientField) -> np.ndarray:
    """q_T = Jσ(c_T)∇u_h|_T per triangle."""
    sigma = coefficient_field(solution.mesh.centroids)
    return np.einsum("ab,mbc,mc->ma", J, sigma, solution.element_gradients)


def _edge_increments(solution: DiscreteSolution, fluxes: np.ndarray) -> np.ndarray:
    """Δ_ab = q̄_ab·(x_b - x_a) with q̄ the mean flux of the triangles sharing edge (a, b), a < b."""
    mesh = solution.mesh
    edges, counts, edge_of_triangle = mesh.edge_table
    flux_sum = np.zeros((edges.shape[0], 2))
    np.add.at(flux_sum, edge_of_triangle.ravel(), np.repeat(fluxes, 3, axis=0))
    mean_flux = flux_sum / counts[:, None]
    return np.einsum("ea,ea->e", mean_flux, mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]])


def _tree_integration(n_nodes: int, edges: np.ndarray, increments: np.ndarray, root: int) -> np.ndarray:
    """Integrate the edge increments along a breadth-first spanning tree rooted at `root`."""
    edge_ids = np.arange(1, edges.shape[0] + 1)
    lookup = coo_matrix(
        (np.concatenate([edge_ids, -edge_ids]),
         (np.concatenate([edges[:, 0], edges[:, 1]]), np.concatenate([edges[:, 1], edges[:, 0]]))),
        shape=(n_nodes, n_nodes),
    ).tocsr()
    order, predecessors = breadth_first_order(abs(lookup), root, directed=False, return_predecessors=True)

    values = np.zeros(n_nodes)
    children = order[1:]
    parents = predecessors[children]
    signed_ids = np.asarray(lookup[parents, children]).ravel().astype(np.int64)
    steps = np.sign(signed_ids) * increments[np.abs(signed_ids) - 1]
    for child, parent, step in zip(children, parents, steps):
        values[child] = values[parent] + step
    return values


def _least_squares_integration(n_nodes: int, edges: np.ndarray, increments: np.ndarray, root: int) -> np.ndarray:
    """ũ minimizing Σ_ab (ũ_b - ũ_a - Δ_ab)² with ũ(root) = 0 (graph Laplacian solve)."""
    count = edges.shape[0]
    incidence = csr_matrix(
        (np.concatenate([-np.ones(count), np.ones(count)]),
         (np.concatenate([np.arange(count), np.arange(count)]), np.concatenate([edges[:, 0], edges[:, 1]]))),
        shape=(count, n_nodes),
    )
    free = np.flatnonzero(np.arange(n_nodes) != root)
    reduced = incidence[:, free]
    values = np.zeros(n_nodes)
    values[free] = spsolve((reduced.T @ reduced).tocsc(), reduced.T @ increments)
    return values


def stream_function(
        solution: DiscreteSolution,
        coefficient_field: CoefficientField,
        method: Optional[str] = None,
) -> StreamFunction:
    """
    Stream function of a P1 solution from per-edge flux increments.
    'tree' integrates along a breadth-first spanning tree; 'least_squares' fits all
    edges at once. loop_residual is the largest mismatch |ũ_b - ũ_a - Δ_ab| of the
    tree integration over the non-tree edges, i.e. the worst fundamental-cycle circulation.
    """
    method = method or config.stream.method
    if method not in ("tree", "least_squares"):
        raise ValueError(f"unknown stream integration method '{method}'")
    mesh = solution.mesh
    fluxes = element_fluxes(solution, coefficient_field)
    increments = _edge_increments(solution, fluxes)
    edges = mesh.edges
    root = int(mesh.boundary_nodes[0])

    tree_values = _tree_integration(mesh.n_nodes, edges, increments, root)
    mismatch = tree_values[edges[:, 1]] - tree_values[edges[:, 0]] - increments
    loop_residual = float(np.max(np.abs(mismatch), initial=0.0))

    fitted_values = _least_squares_integration(mesh.n_nodes, edges, increments, root)
    fitted_values -= fitted_values[root]
    fitted = element_gradients(mesh, fitted_values)
    values = tree_values if method == "tree" else fitted_values

    stream = StreamFunction(
        nodal_values=values,
        element_gradients=fitted if method == "least_squares" else element_gradients(mesh, values),
        fitted_gradients=fitted,
        element_fluxes=fluxes,
        loop_residual=loop_residual,
        method=method,
    )
    logger.info("Stream function (%s) on %s nodes, loop residual %.3e", method, mesh.n_nodes, loop_residual)
    return stream


def circulation(stream: StreamFunction, solution: DiscreteSolution, loop_nodes: np.ndarray) -> float:
    """Net circulation of the averaged edge flux around a closed loop of mesh nodes."""
    mesh = solution.mesh
    increments = _edge_increments(solution, stream.element_fluxes)
    edges = mesh.edges
    index = {(int(a), int(b)): k for k, (a, b) in enumerate(edges)}
    total = 0.0
    for start, end in zip(loop_nodes, np.roll(loop_nodes, -1)):
        a, b = int(start), int(end)
        if a < b:
            total += increments[index[(a, b)]]
        else:
            total -= increments[index[(b, a)]]
    return float(total)
