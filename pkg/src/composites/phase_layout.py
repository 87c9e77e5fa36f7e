from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from src.utils.errors import ConfigError


@dataclass(frozen=True)
class PhaseLayout:
    """
    n×n grid of equal cells on the unit square. `phase_of_cell` is row-major with
    the row given by the y index; phases are numbered 1..P and phase i is
    isotropic with conductivity sigmas[i - 1].
    """

    grid_n: int
    phase_of_cell: Tuple[int, ...]
    sigmas: Tuple[float, ...]

    def __post_init__(self) -> None:
        if self.grid_n < 1:
            raise ValueError("grid_n must be positive")
        if len(self.phase_of_cell) != self.grid_n ** 2:
            raise ValueError(f"expected {self.grid_n ** 2} cell phases, got {len(self.phase_of_cell)}")
        if not self.sigmas or min(self.sigmas) <= 0.0:
            raise ValueError("every phase conductivity must be positive")
        phases = np.asarray(self.phase_of_cell)
        if phases.min() < 1 or phases.max() > len(self.sigmas):
            raise ValueError(f"phase indices must lie in 1..{len(self.sigmas)}")

    @property
    def n_phases(self) -> int:
        return len(self.sigmas)

    @property
    def n_cells(self) -> int:
        return self.grid_n ** 2

    @property
    def fractions(self) -> np.ndarray:
        counts = np.bincount(np.asarray(self.phase_of_cell) - 1, minlength=self.n_phases)
        return counts / self.n_cells

    @property
    def cell_sigmas(self) -> np.ndarray:
        return np.asarray(self.sigmas, dtype=float)[np.asarray(self.phase_of_cell) - 1]

    @property
    def cell_weights(self) -> np.ndarray:
        return np.full(self.n_cells, 1.0 / self.n_cells)

    def cell_index(self, points: np.ndarray) -> np.ndarray:
        """Row-major cell index of each point of the unit square."""
        points = np.asarray(points, dtype=float)
        column = np.clip(np.floor(points[:, 0] * self.grid_n).astype(int), 0, self.grid_n - 1)
        row = np.clip(np.floor(points[:, 1] * self.grid_n).astype(int), 0, self.grid_n - 1)
        return row * self.grid_n + column

    def to_dict(self) -> dict:
        return {"grid_n": self.grid_n, "phases": list(self.phase_of_cell), "sigmas": list(self.sigmas)}


def single_phase_layout(sigma: float, grid_n: int = 1) -> PhaseLayout:
    return PhaseLayout(grid_n, (1,) * grid_n ** 2, (float(sigma),))


def striped_layout(sigmas: Sequence[float], grid_n: int) -> PhaseLayout:
    """Horizontal stripes: row r of cells gets phase (r mod P) + 1."""
    phases = tuple((row % len(sigmas)) + 1 for row in range(grid_n) for _ in range(grid_n))
    return PhaseLayout(grid_n, phases, tuple(float(s) for s in sigmas))


def random_layout(seed: int, grid_n: int, sigmas: Sequence[float]) -> PhaseLayout:
    """Seeded layout in which every phase occupies at least one cell."""
    n_phases = len(sigmas)
    if grid_n ** 2 < n_phases:
        raise ValueError("grid too small for the number of phases")
    rng = np.random.default_rng(seed)
    phases = rng.integers(1, n_phases + 1, size=grid_n ** 2)
    cells = rng.permutation(grid_n ** 2)[:n_phases]
    phases[cells] = np.arange(1, n_phases + 1)
    return PhaseLayout(grid_n, tuple(int(p) for p in phases), tuple(float(s) for s in sigmas))


def layout_from_dict(data: dict) -> PhaseLayout:
    """Instance JSON {grid_n, phases, sigmas}; missing or invalid entries raise ConfigError."""
    try:
        return PhaseLayout(
            int(data["grid_n"]),
            tuple(int(p) for p in data["phases"]),
            tuple(float(s) for s in data["sigmas"]),
        )
    except KeyError as error:
        raise ConfigError(f"layout.{error.args[0]} is required", {"field": f"layout.{error.args[0]}"}) from error
    except (TypeError, ValueError) as error:
        raise ConfigError(f"invalid layout: {error}", {"field": "layout"}) from error
