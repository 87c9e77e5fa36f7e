from typing import Callable, Optional

import numpy as np

from src.coefficients.coefficient_field import CoefficientField, ellipticity_constant
from src.coefficients.dilatations import beltrami_dilatations, dilatation_bound
from src.config.config_loader import config
from src.config.log_config import logger
from src.utils.errors import A0OutOfRange, ConfigError

ProfileFunction = Callable[[np.ndarray], np.ndarray]


# ============================================================
# Constant and Meyers fields
# ============================================================

def family_constant(matrix, K: Optional[float] = None) -> CoefficientField:
    """σ ≡ matrix; K defaults to the ellipticity constant of the matrix."""
    matrix = np.array(matrix, dtype=float)
    if matrix.ndim == 0:
        matrix = float(matrix) * np.eye(2)
    dim = matrix.shape[0]
    declared = K if K is not None else ellipticity_constant(matrix)

    def evaluate(points: np.ndarray) -> np.ndarray:
        return np.broadcast_to(matrix, (points.shape[0], dim, dim)).copy()

    return CoefficientField(
        evaluator=evaluate,
        K=declared,
        dim=dim,
        symmetric=bool(np.allclose(matrix, matrix.T)),
        description=f"constant{matrix.tolist()}",
        descriptor={"family": "constant", "matrix": matrix.tolist()},
    )


def family_meyers(alpha: float) -> CoefficientField:
    """
    σ(x) = α⁻¹ x̂x̂ᵀ + α x̂⊥x̂⊥ᵀ, eigenvalues α and α⁻¹. Discontinuous at the
    origin for α ≠ 1, where the value along the x1-axis, diag(α⁻¹, α), is returned.
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")

    def evaluate(points: np.ndarray) -> np.ndarray:
        radius_sq = np.einsum("ij,ij->i", points, points)
        at_origin = radius_sq == 0.0
        safe = np.where(at_origin, 1.0, radius_sq)
        x1_sq = np.where(at_origin, 1.0, points[:, 0] ** 2 / safe)
        x2_sq = np.where(at_origin, 0.0, points[:, 1] ** 2 / safe)
        cross = np.where(at_origin, 0.0, points[:, 0] * points[:, 1] / safe)
        matrices = np.empty((points.shape[0], 2, 2))
        matrices[:, 0, 0] = x1_sq / alpha + alpha * x2_sq
        matrices[:, 1, 1] = alpha * x1_sq + x2_sq / alpha
        matrices[:, 0, 1] = matrices[:, 1, 0] = (1.0 / alpha - alpha) * cross
        return matrices

    return CoefficientField(
        evaluator=evaluate,
        K=max(alpha, 1.0 / alpha),
        symmetric=True,
        description=f"meyers(alpha={alpha:g})",
        descriptor={"family": "meyers", "alpha": alpha},
        singular_points=np.zeros((1, 2)) if alpha != 1.0 else np.empty((0, 2)),
    )


# ============================================================
# Jin–Kazdan three-dimensional field
# ============================================================

def smooth_jin_kazdan_profile(a0: float) -> ProfileFunction:
    """a(x3) = a0·exp(-1/x3) for x3 > 0 and 0 otherwise: C^∞, values in [0, a0)."""

    def profile(x3: np.ndarray) -> np.ndarray:
        x3 = np.asarray(x3, dtype=float)
        positive = x3 > 0.0
        safe = np.where(positive, x3, 1.0)
        return np.where(positive, a0 * np.exp(-1.0 / safe), 0.0)

    return profile


def piecewise_jin_kazdan_profile(a0: float) -> ProfileFunction:
    def profile(x3: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(x3, dtype=float) > 0.0, a0, 0.0)

    return profile


def family_jin_kazdan(
        a_fn: Optional[ProfileFunction] = None,
        smooth: bool = True,
        a0: float = 0.5,
) -> CoefficientField:
    """
    3×3 field [[1, a, 0], [a, 1, 0], [0, 0, b]] with b = 1/(1 - a²) and a = a(x3).
    Without `a_fn` the smooth flag picks a0·exp(-1/x3) or the step a0·1{x3 > 0}.
    """
    if not 0.0 < a0 < 1.0:
        raise A0OutOfRange(f"a0 = {a0} must lie in (0, 1)", {"a0": a0})
    if a_fn is None:
        a_fn = smooth_jin_kazdan_profile(a0) if smooth else piecewise_jin_kazdan_profile(a0)
    else:
        heights = np.linspace(-1.0, 10.0, 2001)
        values = a_fn(heights)
        if np.max(np.abs(values)) > a0 or np.any(values[heights <= 0.0] != 0.0):
            raise A0OutOfRange("profile leaves [0, a0] or is nonzero for x3 <= 0", {"a0": a0})

    def evaluate(points: np.ndarray) -> np.ndarray:
        a = a_fn(points[:, 2])
        matrices = np.zeros((points.shape[0], 3, 3))
        matrices[:, 0, 0] = matrices[:, 1, 1] = 1.0
        matrices[:, 0, 1] = matrices[:, 1, 0] = a
        matrices[:, 2, 2] = 1.0 / (1.0 - a * a)
        return matrices

    b0 = 1.0 / (1.0 - a0 * a0)
    return CoefficientField(
        evaluator=evaluate,
        K=max(1.0 / (1.0 - a0), 1.0 + a0, b0),
        dim=3,
        symmetric=True,
        description=f"jin_kazdan({'smooth' if smooth else 'piecewise'}, a0={a0:g})",
        descriptor={"family": "jin_kazdan", "a0": a0, "smooth": smooth},
    )


# ============================================================
# Seeded smooth random fields
# ============================================================

def _trig_modes(rng: np.random.Generator, n_modes: int) -> Callable[[np.ndarray], np.ndarray]:
    """Random low-order trigonometric polynomial normalized so |g| ≤ 1 everywhere."""
    weights = rng.uniform(-1.0, 1.0, n_modes)
    frequencies = rng.integers(-2, 3, size=(n_modes, 2)).astype(float)
    phases = rng.uniform(0.0, 2.0 * np.pi, n_modes)
    norm = float(np.sum(np.abs(weights))) or 1.0

    def g(points: np.ndarray) -> np.ndarray:
        arguments = (points @ frequencies.T) * (np.pi / 2.0) + phases
        return np.cos(arguments) @ weights / norm

    return g


def _admissible_skew(log_bound: float, K: float) -> float:
    """
    Largest s such that every σ = diag(λ1, λ2) + s'J with λ_i ∈ [e^{-L}, e^{L}] and
    |s'| ≤ s meets both ellipticity inequalities and the dilatation bound at K.
    """
    levels = np.exp(np.linspace(-log_bound, log_bound, 21))
    lam1, lam2 = np.meshgrid(levels, levels)
    lam1, lam2 = lam1.ravel(), lam2.ravel()
    target = dilatation_bound(K)

    def admissible(s: float) -> bool:
        for skew in s * np.linspace(0.0, 1.0, 11):
            sigma = np.zeros((lam1.size, 2, 2))
            sigma[:, 0, 0], sigma[:, 1, 1] = lam1, lam2
            sigma[:, 0, 1], sigma[:, 1, 0] = -skew, skew
            inverse_sym = np.minimum(lam1, lam2) / (lam1 * lam2 + skew * skew)
            if np.any(inverse_sym < 1.0 / K) or np.any(beltrami_dilatations(sigma).total > target):
                return False
        return True

    low, high = 0.0, float(np.sqrt(max(0.0, np.exp(-log_bound) * (K - np.exp(log_bound)))))
    for _ in range(50):
        middle = 0.5 * (low + high)
        if admissible(middle):
            low = middle
        else:
            high = middle
    return low


def family_smooth_random(
        seed: int,
        K_target: float,
        holder_alpha: float = 1.0,
        skew_amplitude: float = 0.0,
) -> CoefficientField:
    """
    σ(x) = R(θ(x)) diag(e^{ℓ1(x)}, e^{ℓ2(x)}) R(θ(x))ᵀ + s(x)·J with seeded
    trigonometric ℓ_i, θ, s. Log-eigenvalues stay within a fixed fraction of log K
    and the skew part within the admissible amplitude, so the field is elliptic
    with constant K_target and meets the dilatation bound; deterministic in seed.
    """
    if K_target <= 1.0:
        raise ValueError("K_target must exceed 1")
    if not 0.0 <= skew_amplitude <= 1.0:
        raise ValueError("skew_amplitude must lie in [0, 1]")
    if not 0.0 < holder_alpha <= 1.0:
        raise ValueError("holder_alpha must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    n_modes = int(config.coefficients.random_modes)
    g1, g2, g_angle, g_skew = (_trig_modes(rng, n_modes) for _ in range(4))
    log_bound = float(config.coefficients.random_log_fraction) * np.log(K_target)
    skew_bound = 0.9 * skew_amplitude * _admissible_skew(log_bound, K_target) if skew_amplitude > 0.0 else 0.0

    def evaluate(points: np.ndarray) -> np.ndarray:
        lam1 = np.exp(log_bound * g1(points))
        lam2 = np.exp(log_bound * g2(points))
        angle = np.pi * g_angle(points)
        cos_a, sin_a = np.cos(angle), np.sin(angle)
        matrices = np.empty((points.shape[0], 2, 2))
        matrices[:, 0, 0] = lam1 * cos_a ** 2 + lam2 * sin_a ** 2
        matrices[:, 1, 1] = lam1 * sin_a ** 2 + lam2 * cos_a ** 2
        matrices[:, 0, 1] = matrices[:, 1, 0] = (lam1 - lam2) * cos_a * sin_a
        if skew_bound > 0.0:
            skew = skew_bound * g_skew(points)
            matrices[:, 0, 1] -= skew
            matrices[:, 1, 0] += skew
        return matrices

    holder_constant = _estimate_holder_constant(evaluate, rng)
    field = CoefficientField(
        evaluator=evaluate,
        K=K_target,
        holder=(holder_alpha, holder_constant),
        symmetric=skew_bound == 0.0,
        description=f"smooth_random(seed={seed}, K={K_target:g})",
        descriptor={
            "family": "smooth_random", "seed": seed, "K": K_target,
            "holder_alpha": holder_alpha, "skew_amplitude": skew_amplitude,
        },
    )
    logger.info(
        "Built %s: skew bound %.4g, Hölder constant %.4g", field.description, skew_bound, holder_constant
    )
    return field


def _estimate_holder_constant(evaluate, rng: np.random.Generator) -> float:
    """
    Hölder constant valid for every exponent α ≤ 1: twice the larger of the sampled
    Lipschitz quotient and the entry oscillation. The modes have period 4 in each
    coordinate, so sampling [-2, 2]² covers the whole field.
    """
    base = rng.uniform(-2.0, 2.0, size=(4000, 2))
    directions = rng.normal(size=(4000, 2))
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    steps = 10.0 ** np.linspace(-4.0, 0.0, 4000)[:, None]
    jumps = np.abs(evaluate(base) - evaluate(base + steps * directions)).max(axis=(1, 2))
    lipschitz = float(np.max(jumps / steps[:, 0]))
    # pairs farther apart than one differ by at most the oscillation
    oscillation = float(np.ptp(evaluate(base), axis=0).max())
    return 2.0 * max(lipschitz, oscillation)


# ============================================================
# Piecewise-constant composite layouts
# ============================================================

def family_layout(layout) -> CoefficientField:
    """Isotropic σ = σ_{phase(cell)}·I on the unit square from a PhaseLayout."""
    sigmas = np.asarray(layout.sigmas, dtype=float)
    grid_n = layout.grid_n
    phases = np.asarray(layout.phase_of_cell, dtype=np.int64).reshape(grid_n, grid_n)

    def evaluate(points: np.ndarray) -> np.ndarray:
        column = np.clip(np.floor(points[:, 0] * grid_n).astype(int), 0, grid_n - 1)
        row = np.clip(np.floor(points[:, 1] * grid_n).astype(int), 0, grid_n - 1)
        values = sigmas[phases[row, column] - 1]
        return values[:, None, None] * np.eye(2)[None, :, :]

    return CoefficientField(
        evaluator=evaluate,
        K=float(max(sigmas.max(), 1.0 / sigmas.min(), 1.0)),
        symmetric=True,
        description=f"layout({grid_n}x{grid_n}, {len(sigmas)} phases)",
        descriptor={"family": "layout", "grid_n": grid_n, "sigmas": sigmas.tolist()},
    )


def field_from_descriptor(descriptor: dict) -> CoefficientField:
    """Build a field from its experiment JSON descriptor {"family": ..., parameters...}."""
    family = descriptor.get("family")
    try:
        if family == "constant":
            return family_constant(descriptor.get("matrix", [[1.0, 0.0], [0.0, 1.0]]), descriptor.get("K"))
        if family == "meyers":
            return family_meyers(float(descriptor["alpha"]))
        if family == "jin_kazdan":
            return family_jin_kazdan(smooth=bool(descriptor.get("smooth", True)), a0=float(descriptor.get("a0", 0.5)))
        if family == "smooth_random":
            return family_smooth_random(
                int(descriptor.get("seed", 0)),
                float(descriptor.get("K", 2.0)),
                float(descriptor.get("holder_alpha", 1.0)),
                float(descriptor.get("skew_amplitude", 0.0)),
            )
    except KeyError as error:
        raise ConfigError(f"coefficient.{error.args[0]} is required for family '{family}'",
                          {"field": f"coefficient.{error.args[0]}"}) from error
    raise ConfigError(f"unknown coefficient family '{family}'", {"field": "coefficient.family"})
