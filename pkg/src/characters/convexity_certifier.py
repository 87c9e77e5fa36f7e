from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from src.characters.boundary_datum import ScalarBoundaryDatum, VectorBoundaryDatum
from src.characters.unimodal_certifier import UnimodalCharacter, certify_unimodal
from src.config.config_loader import config
from src.config.log_config import logger
from src.geometry.boundary_curve import BoundaryCurve
from src.pipeline.parallel_sweep import ParallelSweep
from src.utils.errors import ConvexityFailure, LabError, NotStrictlyConvex
from src.utils.utils import J, periodic_derivative, unit_directions


@dataclass(frozen=True)
class ConvexityCharacter:
    """
    Character {T, D, ω(t) = c·t}. Measured characters carry the per-direction
    unimodal characters; predicted ones (from curvature) carry κ and K instead.
    """

    T: float
    D: float
    omega_slope: float
    directions_tested: int
    per_direction: Tuple[UnimodalCharacter, ...] = field(default=(), repr=False)
    curvature_min: Optional[float] = None
    curvature_max: Optional[float] = None

    def to_dict(self) -> dict:
        report = {"T": self.T, "D": self.D, "omega_slope": self.omega_slope, "directions_tested": self.directions_tested}
        if self.curvature_min is not None:
            report["kappa"] = self.curvature_min
            report["K"] = self.curvature_max
        return report


def certify_convex(
        phi: VectorBoundaryDatum,
        n_directions: Optional[int] = None,
        tol: Optional[float] = None,
        num_workers: Optional[int] = None,
) -> ConvexityCharacter:
    """
    Certify every projection Φ·ξ over a uniform direction grid.
    D and the slope are minima over the grid; the first failing direction in grid order is raised.
    """
    n_directions = n_directions or config.characters.n_directions
    if n_directions < config.characters.min_directions:
        raise ValueError(f"need at least {config.characters.min_directions} directions, got {n_directions}")
    directions = unit_directions(n_directions)

    sweep = ParallelSweep(num_workers, running_mode="thread", label="convexity certification")
    outcomes = sweep.run(_certify_direction, [(phi.project(xi), tol) for xi in directions])

    for index, outcome in enumerate(outcomes):
        if isinstance(outcome, LabError):
            raise ConvexityFailure(
                f"projection onto direction {index} is not unimodal: {outcome}", index, directions[index], outcome
            )

    ranges = np.array([character.M - character.m for character in outcomes])
    character = ConvexityCharacter(
        T=phi.period,
        D=float(ranges.min()),
        omega_slope=float(min(c.omega_slope for c in outcomes)),
        directions_tested=n_directions,
        per_direction=tuple(outcomes),
    )
    logger.info(
        "Convexity certified for '%s': D=%.8f slope=%.6g over %s directions",
        phi.description, character.D, character.omega_slope, n_directions,
    )
    return character


def curvature_character(curve: BoundaryCurve, tol: float = 1e-8) -> ConvexityCharacter:
    """
    Predicted character {|Γ|, 1/K, 2κ/π} from the extremal signed curvatures κ ≤ K.
    Curvature is Φ''·JΦ' corrected by the traversal orientation, so a convex curve
    has positive curvature either way round.
    """
    accelerations = curve.accelerations
    if accelerations is None:
        accelerations = periodic_derivative(curve.tangents, curve.total_length / curve.n_samples)
    curvature = curve.orientation * np.einsum("ij,ij->i", accelerations, curve.tangents @ J.T)
    kappa, big_k = float(curvature.min()), float(curvature.max())
    if kappa <= tol:
        raise NotStrictlyConvex(
            f"minimum curvature {kappa:.3e} is not positive",
            {"condition": "curvature", "kappa": kappa, "index": int(np.argmin(curvature))},
        )
    character = ConvexityCharacter(
        T=curve.total_length,
        D=1.0 / big_k,
        omega_slope=2.0 * kappa / np.pi,
        directions_tested=0,
        curvature_min=kappa,
        curvature_max=big_k,
    )
    logger.info("Curvature character: kappa=%.6g K=%.6g D=%.6g", kappa, big_k, character.D)
    return character


# ============================================================
# Worker Function
# ============================================================

def _certify_direction(projection: ScalarBoundaryDatum, tol: Optional[float]):
    """Returns the character, or the LabError describing why the projection failed."""
    try:
        return certify_unimodal(projection, tol)
    except LabError as error:
        logger.debug("Projection '%s' failed: %s", projection.description, error)
        return error
