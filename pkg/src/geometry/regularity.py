from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.config.config_loader import config
from src.config.log_config import logger
from src.geometry.boundary_curve import DomainSpec, RegularityData
from src.utils.errors import InsufficientSamples
from src.utils.utils import J


@dataclass(frozen=True, eq=False)
class RegularityReport:
    passed: bool
    worst_ratio: float
    worst_index: int
    ratios: np.ndarray
    rho0: float
    M0: float
    alpha: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "worst_ratio": float(self.worst_ratio),
            "worst_index": int(self.worst_index),
            "rho0": self.rho0,
            "M0": self.M0,
            "alpha": self.alpha,
        }


def _window_indices(distances: np.ndarray, center: int, rho0: float) -> np.ndarray:
    """Contiguous run of sample indices around `center` lying strictly inside the ρ0-ball."""
    count = distances.size
    half = (count - 1) // 2
    forward = 0
    while forward < half and distances[(center + forward + 1) % count] < rho0:
        forward += 1
    backward = 0
    while backward < count - 1 - half and distances[(center - backward - 1) % count] < rho0:
        backward += 1
    return np.arange(center - backward, center + forward + 1) % count


def _local_graph_norm(local_points: np.ndarray, local_tangents: np.ndarray, rho0: float, alpha: float) -> float:
    """
    Three-term norm ‖ψ‖∞ + ρ0‖ψ'‖∞ + ρ0^{1+α}[ψ']_α of the local graph x2 = ψ(x1).
    Returns inf when the window is not a graph over the tangent line.
    """
    abscissa, height = local_points[:, 0], local_points[:, 1]
    if np.any(np.diff(abscissa) <= 0.0) or np.any(local_tangents[:, 0] <= 0.0):
        return np.inf
    slope = local_tangents[:, 1] / local_tangents[:, 0]

    gaps = np.abs(abscissa[:, None] - abscissa[None, :])
    slope_jumps = np.abs(slope[:, None] - slope[None, :])
    off_diagonal = gaps > 0.0
    seminorm = float(np.max(slope_jumps[off_diagonal] / gaps[off_diagonal] ** alpha, initial=0.0))

    return float(np.max(np.abs(height)) + rho0 * np.max(np.abs(slope)) + rho0 ** (1.0 + alpha) * seminorm)


def check_c1alpha(
        domain: DomainSpec,
        rho0: Optional[float] = None,
        M0: Optional[float] = None,
        alpha: Optional[float] = None,
) -> RegularityReport:
    """
    Sampled C^{1,α} check: at every boundary sample, rotate into the tangent frame,
    read off the local graph ψ from the samples inside the ρ0-window and compare
    its three-term norm with M0·ρ0. Explicit arguments override domain.regularity.
    """
    stored = domain.regularity
    if stored is None and None in (rho0, M0, alpha):
        raise ValueError("regularity data (rho0, M0, alpha) is not set")
    data = RegularityData(
        rho0 if rho0 is not None else stored.rho0,
        M0 if M0 is not None else stored.M0,
        alpha if alpha is not None else stored.alpha,
    )

    curve = domain.boundary
    inward_sign = curve.orientation
    ratios = np.empty(curve.n_samples)

    for index in range(curve.n_samples):
        origin = curve.points[index]
        tangent = curve.tangents[index]
        normal = inward_sign * (J @ tangent)

        offsets = curve.points - origin
        window = _window_indices(np.linalg.norm(offsets, axis=1), index, data.rho0)
        if window.size < config.mesh.min_window_samples:
            raise InsufficientSamples(
                f"only {window.size} samples inside the rho0-window at sample {index}",
                {"index": index, "window_samples": int(window.size), "rho0": data.rho0},
            )
        frame = np.column_stack([tangent, normal])
        local_points = offsets[window] @ frame
        local_tangents = curve.tangents[window] @ frame
        ratios[index] = _local_graph_norm(local_points, local_tangents, data.rho0, data.alpha) / (data.M0 * data.rho0)

    worst_index = int(np.argmax(ratios))
    report = RegularityReport(
        passed=bool(ratios[worst_index] <= 1.0),
        worst_ratio=float(ratios[worst_index]),
        worst_index=worst_index,
        ratios=ratios,
        rho0=data.rho0,
        M0=data.M0,
        alpha=data.alpha,
    )
    logger.info(
        "C1,alpha check on '%s': worst ratio %.4f at sample %s (%s)",
        domain.description, report.worst_ratio, worst_index, "pass" if report.passed else "fail",
    )
    return report
