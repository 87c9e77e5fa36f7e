import os
import tempfile
from pathlib import Path
from typing import Callable, Union

import numpy as np

# counter-clockwise rotation by 90 degrees
J = np.array([[0.0, -1.0], [1.0, 0.0]])


def rotation_matrix(angle: float) -> np.ndarray:
    """Planar rotation by `angle` radians."""
    cos_a, sin_a = np.cos(angle), np.sin(angle)
    return np.array([[cos_a, -sin_a], [sin_a, cos_a]])


def unit_directions(count: int) -> np.ndarray:
    """`count` unit vectors at uniform angles 2πk/count, shape (count, 2)."""
    angles = 2.0 * np.pi * np.arange(count) / count
    return np.column_stack([np.cos(angles), np.sin(angles)])


def periodic_derivative(values: np.ndarray, spacing: float) -> np.ndarray:
    """4th-order centered difference on a uniform periodic grid (axis 0)."""
    return (
        -np.roll(values, -2, axis=0)
        + 8.0 * np.roll(values, -1, axis=0)
        - 8.0 * np.roll(values, 1, axis=0)
        + np.roll(values, 2, axis=0)
    ) / (12.0 * spacing)


def central_derivative(function: Callable[[np.ndarray], np.ndarray], points: np.ndarray, step: float) -> np.ndarray:
    """4th-order centered first derivative of a vectorized scalar function."""
    return (
        -function(points + 2 * step)
        + 8.0 * function(points + step)
        - 8.0 * function(points - step)
        + function(points - 2 * step)
    ) / (12.0 * step)


def central_second_derivative(function: Callable[[np.ndarray], np.ndarray], points: np.ndarray, step: float) -> np.ndarray:
    """4th-order centered second derivative of a vectorized scalar function."""
    return (
        -function(points + 2 * step)
        + 16.0 * function(points + step)
        - 30.0 * function(points)
        + 16.0 * function(points - step)
        - function(points - 2 * step)
    ) / (12.0 * step * step)


def finite_difference_jacobian(mapping: Callable[[np.ndarray], np.ndarray], point: np.ndarray, step: float) -> np.ndarray:
    """Centered-difference Jacobian of a vector map at one point; rows are component gradients."""
    point = np.asarray(point, dtype=float)
    columns = []
    for axis in range(point.size):
        offset = np.zeros_like(point)
        offset[axis] = step
        columns.append((np.asarray(mapping(point + offset)) - np.asarray(mapping(point - offset))) / (2.0 * step))
    return np.column_stack(columns)


def point_segment_distances(points: np.ndarray, seg_start: np.ndarray, seg_end: np.ndarray) -> np.ndarray:
    """Distance from each point to the closest of the given segments, shape (P,)."""
    points = np.asarray(points, dtype=float)
    best = np.full(points.shape[0], np.inf)
    direction = seg_end - seg_start
    length_sq = np.einsum("ij,ij->i", direction, direction)
    length_sq = np.where(length_sq > 0.0, length_sq, 1.0)
    # chunked over points to keep memory bounded on fine meshes
    chunk = max(1, 2_000_000 // max(1, seg_start.shape[0]))
    for begin in range(0, points.shape[0], chunk):
        block = points[begin:begin + chunk]
        rel = block[:, None, :] - seg_start[None, :, :]
        proj = np.clip(np.einsum("pij,ij->pi", rel, direction) / length_sq[None, :], 0.0, 1.0)
        nearest = seg_start[None, :, :] + proj[:, :, None] * direction[None, :, :]
        dist = np.linalg.norm(block[:, None, :] - nearest, axis=2)
        best[begin:begin + chunk] = dist.min(axis=1)
    return best


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    """Write `text` to a temp file in the target directory, then rename over `path`."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    file_descriptor, temp_path = tempfile.mkstemp(dir=target.parent, prefix=".tmp_", suffix=target.suffix)
    try:
        with os.fdopen(file_descriptor, "w", encoding="utf-8", newline="") as file_handle:
            file_handle.write(text)
        os.replace(temp_path, target)
    except Exception:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise
