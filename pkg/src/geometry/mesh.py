from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.distance import pdist

from src.config.config_loader import config
from src.geometry.boundary_curve import Parametrization
from src.utils.errors import MeshQualityFailure
from src.utils.utils import point_segment_distances


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Conforming P1 triangulation.
    boundary_nodes are node indices in boundary order, boundary_params their arclength parameters.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_nodes: np.ndarray
    boundary_params: np.ndarray
    total_length: float

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def n_triangles(self) -> int:
        return int(self.triangles.shape[0])

    # ============================================================
    # Element geometry
    # ============================================================

    @cached_property
    def vertices(self) -> np.ndarray:
        """Corner coordinates per triangle, shape (M, 3, 2)."""
        return self.nodes[self.triangles]

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p0, p1, p2 = self.vertices[:, 0], self.vertices[:, 1], self.vertices[:, 2]
        return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices.mean(axis=1)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        """Lengths of the edges opposite each corner, shape (M, 3)."""
        vertices = self.vertices
        return np.column_stack([
            np.linalg.norm(vertices[:, 2] - vertices[:, 1], axis=1),
            np.linalg.norm(vertices[:, 0] - vertices[:, 2], axis=1),
            np.linalg.norm(vertices[:, 1] - vertices[:, 0], axis=1),
        ])

    @cached_property
    def element_diameters(self) -> np.ndarray:
        return self.edge_lengths.max(axis=1)

    @property
    def h(self) -> float:
        return float(self.element_diameters.max())

    @cached_property
    def min_angles_degrees(self) -> np.ndarray:
        a, b, c = self.edge_lengths[:, 0], self.edge_lengths[:, 1], self.edge_lengths[:, 2]
        cos_a = np.clip((b * b + c * c - a * a) / (2.0 * b * c), -1.0, 1.0)
        cos_b = np.clip((a * a + c * c - b * b) / (2.0 * a * c), -1.0, 1.0)
        cos_c = np.clip((a * a + b * b - c * c) / (2.0 * a * b), -1.0, 1.0)
        return np.degrees(np.arccos(np.column_stack([cos_a, cos_b, cos_c]))).min(axis=1)

    @cached_property
    def shape_gradients(self) -> np.ndarray:
        """Constant gradients of the three P1 hat functions per triangle, shape (M, 3, 2)."""
        vertices = self.vertices
        double_area = 2.0 * self.signed_areas
        gradients = np.empty((self.n_triangles, 3, 2))
        for corner in range(3):
            following = vertices[:, (corner + 1) % 3]
            preceding = vertices[:, (corner + 2) % 3]
            # ∇λ_i = (y_{i+1} - y_{i+2}, x_{i+2} - x_{i+1}) / 2|T|
            gradients[:, corner, 0] = (following[:, 1] - preceding[:, 1]) / double_area
            gradients[:, corner, 1] = (preceding[:, 0] - following[:, 0]) / double_area
        return gradients

    # ============================================================
    # Topology
    # ============================================================

    @cached_property
    def edge_table(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Unique undirected edges (sorted node pairs), the number of triangles
        sharing each edge and, per triangle, the index of each of its three edges.
        """
        local = self.triangles[:, [[1, 2], [2, 0], [0, 1]]].reshape(-1, 2)
        local = np.sort(local, axis=1)
        edges, inverse, counts = np.unique(local, axis=0, return_inverse=True, return_counts=True)
        return edges, counts, inverse.reshape(-1, 3)

    @property
    def edges(self) -> np.ndarray:
        return self.edge_table[0]

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        edges, counts, _ = self.edge_table
        return edges[counts == 1]

    @cached_property
    def diameter(self) -> float:
        return float(np.max(pdist(self.nodes[self.boundary_nodes])))

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        """Distance from each point to the polygonal mesh boundary."""
        segments = self.boundary_edges
        return point_segment_distances(points, self.nodes[segments[:, 0]], self.nodes[segments[:, 1]])

    @cached_property
    def centroid_boundary_distance(self) -> np.ndarray:
        return self.boundary_distance(self.centroids)

    @cached_property
    def is_boundary_node(self) -> np.ndarray:
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = True
        return mask

    # ============================================================
    # Invariants
    # ============================================================

    def validate(self, parametrization: Optional[Parametrization] = None) -> None:
        """Raise MeshQualityFailure on inverted elements, non-conforming edges or off-curve boundary nodes."""
        if np.any(self.signed_areas <= 0.0):
            bad = int(np.argmin(self.signed_areas))
            raise MeshQualityFailure(
                f"triangle {bad} has non-positive signed area", {"triangle": bad, "area": float(self.signed_areas[bad])}
            )
        edges, counts, _ = self.edge_table
        if np.any(counts > 2):
            raise MeshQualityFailure("an edge is shared by more than two triangles", {"max_sharing": int(counts.max())})
        boundary_from_edges = np.unique(self.boundary_edges)
        if not np.array_equal(boundary_from_edges, np.unique(self.boundary_nodes)):
            raise MeshQualityFailure("boundary edges do not match the recorded boundary nodes")
        if parametrization is not None:
            exact = parametrization.points(self.boundary_params)
            offset = float(np.max(np.linalg.norm(exact - self.nodes[self.boundary_nodes], axis=1)))
            if offset > config.mesh.arclength_tolerance * self.total_length:
                raise MeshQualityFailure(
                    f"boundary node off the curve by {offset:.3e}", {"boundary_offset": offset}
                )

    def same_as(self, other: "Mesh") -> bool:
        return (
            self is other
            or (np.array_equal(self.nodes, other.nodes) and np.array_equal(self.triangles, other.triangles))
        )
