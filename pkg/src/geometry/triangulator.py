import math
from typing import List, Optional, Tuple

import numpy as np

from src.config.config_loader import config
from src.config.log_config import logger
from src.geometry.boundary_curve import DomainSpec, Parametrization
from src.geometry.mesh import Mesh
from src.utils.errors import MeshQualityFailure


def _ring_offset(ring: int) -> int:
    """Index of the first node of ring `ring` (center node is 0, ring j holds 6j nodes)."""
    return 1 + 3 * ring * (ring - 1)


def _merge_rings(inner_ring: int, outer_ring: int) -> List[Tuple[int, int, int]]:
    """
    Stitch two consecutive rings by walking both in parameter order.
    Ties advance the outer ring; every triangle comes out counter-clockwise.
    """
    inner_count, outer_count = 6 * inner_ring, 6 * outer_ring
    inner_base, outer_base = _ring_offset(inner_ring), _ring_offset(outer_ring)

    def inner(k: int) -> int:
        return inner_base + k % inner_count

    def outer(k: int) -> int:
        return outer_base + k % outer_count

    triangles = []
    i = k = 0
    while i < inner_count or k < outer_count:
        advance_outer = k < outer_count and (i >= inner_count or (k + 1) * inner_count <= (i + 1) * outer_count)
        if advance_outer:
            triangles.append((inner(i), outer(k), outer(k + 1)))
            k += 1
        else:
            triangles.append((inner(i), outer(k), inner(i + 1)))
            i += 1
    return triangles


def _ring_mesh(parametrization: Parametrization, rings: int, center: np.ndarray) -> Mesh:
    length = parametrization.length
    node_blocks = [center[None, :]]
    for ring in range(1, rings + 1):
        parameters = length * np.arange(6 * ring) / (6 * ring)
        scale = ring / rings
        node_blocks.append(center + scale * (parametrization.points(parameters) - center))
    nodes = np.vstack(node_blocks)

    triangles = [(0, _ring_offset(1) + k, _ring_offset(1) + (k + 1) % 6) for k in range(6)]
    for ring in range(2, rings + 1):
        triangles.extend(_merge_rings(ring - 1, ring))

    boundary_count = 6 * rings
    boundary_nodes = _ring_offset(rings) + np.arange(boundary_count)
    boundary_params = length * np.arange(boundary_count) / boundary_count
    return Mesh(nodes, np.asarray(triangles, dtype=np.int64), boundary_nodes, boundary_params, length)


def triangulate(domain: DomainSpec, target_h: float, center: Optional[Tuple[float, float]] = None) -> Mesh:
    """
    Radial-ring triangulation of a domain star-shaped about `center`.
    Ring j carries 6j nodes on the boundary scaled by j/R; the ring count R
    grows until the largest element diameter is within the configured factor of target_h.
    """
    if not 0.0 < target_h < domain.diameter / 4.0:
        raise ValueError(f"target_h must lie in (0, diameter/4), got {target_h}")
    origin = np.zeros(2) if center is None else np.asarray(center, dtype=float)
    reach = float(np.max(np.linalg.norm(domain.boundary.points - origin, axis=1)))

    rings = max(2, int(math.ceil(config.mesh.ring_density * reach / target_h - 1e-9)))
    max_diameter = config.mesh.max_diameter_factor * target_h
    mesh = None
    for attempt in range(config.mesh.max_retries):
        mesh = _ring_mesh(domain.parametrization, rings, origin)
        min_angle = float(mesh.min_angles_degrees.min())
        logger.debug(
            "Ring mesh attempt %s: %s rings, h=%.4f, min angle %.2f", attempt, rings, mesh.h, min_angle
        )
        if mesh.h <= max_diameter and min_angle >= config.mesh.min_angle_degrees and np.all(mesh.signed_areas > 0.0):
            mesh.validate(domain.parametrization)
            logger.info(
                "Triangulated '%s': %s nodes, %s triangles, h=%.4f, min angle %.2f deg",
                domain.description, mesh.n_nodes, mesh.n_triangles, mesh.h, min_angle,
            )
            return mesh
        rings += max(1, rings // 8)

    raise MeshQualityFailure(
        f"mesh targets unreachable after {config.mesh.max_retries} attempts",
        {
            "target_h": target_h,
            "h": mesh.h,
            "min_angle": float(mesh.min_angles_degrees.min()),
            "min_signed_area": float(mesh.signed_areas.min()),
        },
    )


def triangulate_unit_square(n_cells: int, per_cell: int) -> Mesh:
    """
    Structured mesh of [0,1]² with n_cells·per_cell divisions per side, so every
    cell interface of an n_cells×n_cells grid is a union of mesh edges.
    Boundary parameters are perimeter arclength counter-clockwise from the origin.
    """
    if n_cells < 1 or per_cell < 1:
        raise ValueError("n_cells and per_cell must be positive")
    divisions = n_cells * per_cell
    coordinates = np.linspace(0.0, 1.0, divisions + 1)
    grid_x, grid_y = np.meshgrid(coordinates, coordinates)
    nodes = np.column_stack([grid_x.ravel(), grid_y.ravel()])

    def node(ix: np.ndarray, iy: np.ndarray) -> np.ndarray:
        return iy * (divisions + 1) + ix

    ix, iy = np.meshgrid(np.arange(divisions), np.arange(divisions))
    ix, iy = ix.ravel(), iy.ravel()
    lower = np.column_stack([node(ix, iy), node(ix + 1, iy), node(ix + 1, iy + 1)])
    upper = np.column_stack([node(ix, iy), node(ix + 1, iy + 1), node(ix, iy + 1)])
    triangles = np.empty((2 * lower.shape[0], 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    steps = np.arange(divisions)
    last = np.full(divisions, divisions)
    first = np.zeros(divisions, dtype=np.int64)
    boundary_nodes = np.concatenate([
        node(steps, first),
        node(last, steps),
        node(last - steps, last),
        node(first, last - steps),
    ])
    boundary_params = np.arange(4 * divisions) / divisions
    mesh = Mesh(nodes, triangles, boundary_nodes, boundary_params, 4.0)
    logger.info("Triangulated unit square: %s cells per side, %s elements", n_cells, mesh.n_triangles)
    return mesh


def square_perimeter_points(t: np.ndarray) -> np.ndarray:
    """Point on the unit-square perimeter at counter-clockwise arclength t ∈ [0, 4)."""
    t = np.mod(np.asarray(t, dtype=float), 4.0)
    side = np.minimum(np.floor(t).astype(int), 3)
    offset = t - side
    x = np.choose(side, [offset, np.ones_like(offset), 1.0 - offset, np.zeros_like(offset)])
    y = np.choose(side, [np.zeros_like(offset), offset, np.ones_like(offset), 1.0 - offset])
    return np.column_stack([x, y])
