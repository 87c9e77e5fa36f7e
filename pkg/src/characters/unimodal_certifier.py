from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.characters.boundary_datum import ScalarBoundaryDatum
from src.config.config_loader import config
from src.config.log_config import logger
from src.utils.errors import NotUnimodal, PlateauOverlap, ZeroRange


@dataclass(frozen=True)
class UnimodalCharacter:
    """Character {T, m, M, ω(t) = c·t} with plateau ends t1 ≤ t2 < t3 ≤ t4 < t1 + T (unwrapped)."""

    T: float
    m: float
    M: float
    t1: float
    t2: float
    t3: float
    t4: float
    omega_slope: float

    def to_dict(self) -> dict:
        return {
            "T": self.T, "m": self.m, "M": self.M,
            "t1": self.t1, "t2": self.t2, "t3": self.t3, "t4": self.t4,
            "omega_slope": self.omega_slope,
        }


@dataclass(frozen=True)
class ExtremalArcs:
    """Γ_min and Γ_max as (start in [0, T), length) arclength intervals."""

    T: float
    gamma_min: Tuple[float, float]
    gamma_max: Tuple[float, float]

    def contains(self, parameters: np.ndarray, tolerance: float = 0.0) -> np.ndarray:
        """Mask of parameters lying on Γ_min ∪ Γ_max, each arc widened by `tolerance` at both ends."""
        parameters = np.asarray(parameters, dtype=float)
        inside = np.zeros(parameters.shape, dtype=bool)
        for start, length in (self.gamma_min, self.gamma_max):
            inside |= np.mod(parameters - start + tolerance, self.T) <= length + 2.0 * tolerance
        return inside

    def to_dict(self) -> dict:
        return {"T": self.T, "gamma_min": list(self.gamma_min), "gamma_max": list(self.gamma_max)}


def _cyclic_runs(mask: np.ndarray) -> list:
    """(first, last) index pairs of the maximal cyclic runs of True in `mask`."""
    count = mask.size
    starts = np.flatnonzero(mask & ~np.roll(mask, 1))
    runs = []
    for start in starts:
        end = start
        while mask[(end + 1) % count] and (end + 1 - start) < count:
            end += 1
        runs.append((int(start), int(end % count)))
    return runs


def _sign_changes(values: np.ndarray, tolerance: float) -> int:
    """Number of cyclic sign changes of the step differences, ignoring steps within tolerance."""
    steps = np.roll(values, -1) - values
    signs = np.sign(steps) * (np.abs(steps) > tolerance)
    signs = signs[signs != 0]
    if signs.size == 0:
        return 0
    return int(np.count_nonzero(signs != np.roll(signs, 1)))


def certify_unimodal(datum: ScalarBoundaryDatum, tol: Optional[float] = None) -> UnimodalCharacter:
    """
    Certify quantitative unimodality of a periodic datum: one min plateau, one max
    plateau, one rising and one falling segment, and the largest c such that
    |φ'| ≥ c·min(distance to the two enclosing plateaus) on both segments.
    """
    if datum.n_samples < config.characters.min_samples:
        raise ValueError(f"need at least {config.characters.min_samples} samples, got {datum.n_samples}")
    values, parameters, period = datum.values, datum.parameters, datum.period
    m, M = float(values.min()), float(values.max())
    if tol is None:
        tol = config.characters.relative_tolerance * (M - m)
    if tol < 0.0:
        raise ValueError("tol must be non-negative")
    if M - m <= tol or M - m <= 0.0:
        raise ZeroRange(f"datum range {M - m:.3e} does not exceed tolerance", {"condition": "range", "range": M - m})

    min_runs = _cyclic_runs(values <= m + tol)
    max_runs = _cyclic_runs(values >= M - tol)
    if len(min_runs) != 1 or len(max_runs) != 1:
        raise NotUnimodal(
            "extremal values attained on more than one arc",
            {"condition": "plateaus", "min_plateaus": len(min_runs), "max_plateaus": len(max_runs)},
        )
    changes = _sign_changes(values, tol)
    if changes != 2:
        raise NotUnimodal(
            f"datum has {changes // 2} rising segments",
            {"condition": "monotone_segments", "rising_segments": changes // 2},
        )

    (low_first, low_last), (high_first, high_last) = min_runs[0], max_runs[0]
    t1 = float(parameters[low_first])
    t2 = float(parameters[low_last]) + (period if low_last < low_first else 0.0)
    t3 = float(parameters[high_first])
    while t3 <= t2:
        t3 += period
    t4 = float(parameters[high_last])
    while t4 < t3:
        t4 += period
    if t4 >= t1 + period:
        raise PlateauOverlap(
            "maximum plateau reaches the next minimum plateau",
            {"condition": "ordering", "t1": t1, "t2": t2, "t3": t3, "t4": t4},
        )

    omega_slope = _fit_omega_slope(datum, t1, t2, t3, t4)
    if omega_slope <= 0.0:
        raise NotUnimodal(
            "derivative does not stay positive on the rising arc and negative on the falling arc",
            {"condition": "derivative_sign", "omega_slope": omega_slope},
        )

    character = UnimodalCharacter(period, m, M, t1, t2, t3, t4, omega_slope)
    logger.debug(
        "Unimodal character of '%s': m=%.6g M=%.6g slope=%.6g", datum.description, m, M, omega_slope
    )
    return character


def _fit_omega_slope(datum: ScalarBoundaryDatum, t1: float, t2: float, t3: float, t4: float) -> float:
    """Largest c with φ' ≥ c·min(t - t2, t3 - t) on (t2, t3) and -φ' ≥ c·min(t - t4, t1 + T - t) on (t4, t1 + T)."""
    period = datum.period
    spacing = period / datum.n_samples
    slopes = []
    for arc_start, arc_end, direction in ((t2, t3, 1.0), (t4, t1 + period, -1.0)):
        shifted = arc_start + np.mod(datum.parameters - arc_start, period)
        envelope = np.minimum(shifted - arc_start, arc_end - shifted)
        usable = envelope >= 0.5 * spacing
        if not np.any(usable):
            continue
        slopes.append(float(np.min(direction * datum.derivatives[usable] / envelope[usable])))
    return min(slopes) if slopes else 0.0


def extremal_arcs(datum: ScalarBoundaryDatum, character: UnimodalCharacter) -> ExtremalArcs:
    """Γ_min = [t1, t2] and Γ_max = [t3, t4] as (start mod T, length)."""
    period = character.T
    return ExtremalArcs(
        T=period,
        gamma_min=(float(np.mod(character.t1, period)), character.t2 - character.t1),
        gamma_max=(float(np.mod(character.t3, period)), character.t4 - character.t3),
    )
