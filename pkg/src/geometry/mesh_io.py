from pathlib import Path
from typing import Union

import numpy as np

from src.config.log_config import logger
from src.geometry.mesh import Mesh
from src.utils.errors import ConfigError
from src.utils.utils import atomic_write_text


def format_mesh(mesh: Mesh) -> str:
    """Line-oriented mesh text: header, node lines, triangle lines, then 'b idx t' boundary lines."""
    lines = [f"nodes {mesh.n_nodes} triangles {mesh.n_triangles}"]
    lines.extend(f"{x!r} {y!r}" for x, y in mesh.nodes.tolist())
    lines.extend(f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist())
    lines.extend(
        f"b {index} {param!r}" for index, param in zip(mesh.boundary_nodes.tolist(), mesh.boundary_params.tolist())
    )
    lines.append(f"length {mesh.total_length!r}")
    return "\n".join(lines) + "\n"


def write_mesh(mesh: Mesh, path: Union[str, Path]) -> None:
    atomic_write_text(path, format_mesh(mesh))
    logger.info("Wrote mesh with %s nodes to %s", mesh.n_nodes, path)


def read_mesh(path: Union[str, Path]) -> Mesh:
    """Parse the mesh text format; a missing 'length' line defaults to the boundary polygon perimeter."""
    with open(path, "r", encoding="utf-8") as file_handle:
        lines = [line.strip() for line in file_handle if line.strip()]

    header = lines[0].split() if lines else []
    if len(header) != 4 or header[0] != "nodes" or header[2] != "triangles":
        raise ConfigError(f"{path}: line 1: expected 'nodes N triangles M'", {"line": 1})
    n_nodes, n_triangles = int(header[1]), int(header[3])

    try:
        nodes = np.array([[float(v) for v in line.split()] for line in lines[1:1 + n_nodes]], dtype=float)
        triangles = np.array(
            [[int(v) for v in line.split()] for line in lines[1 + n_nodes:1 + n_nodes + n_triangles]], dtype=np.int64
        )
    except ValueError as error:
        raise ConfigError(f"{path}: malformed node or triangle line: {error}") from error
    if nodes.shape != (n_nodes, 2) or triangles.shape != (n_triangles, 3):
        raise ConfigError(f"{path}: node/triangle counts do not match the header")

    boundary_nodes, boundary_params, total_length = [], [], None
    for offset, line in enumerate(lines[1 + n_nodes + n_triangles:], start=2 + n_nodes + n_triangles):
        parts = line.split()
        if parts[0] == "b" and len(parts) == 3:
            boundary_nodes.append(int(parts[1]))
            boundary_params.append(float(parts[2]))
        elif parts[0] == "length" and len(parts) == 2:
            total_length = float(parts[1])
        else:
            raise ConfigError(f"{path}: line {offset}: unexpected entry '{line}'", {"line": offset})

    boundary_nodes = np.asarray(boundary_nodes, dtype=np.int64)
    if total_length is None:
        ring = nodes[boundary_nodes]
        total_length = float(np.sum(np.linalg.norm(np.roll(ring, -1, axis=0) - ring, axis=1)))
    mesh = Mesh(nodes, triangles, boundary_nodes, np.asarray(boundary_params, dtype=float), total_length)
    mesh.validate()
    return mesh
