from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from src.coefficients.families import family_layout
from src.composites.phase_layout import PhaseLayout
from src.config.config_loader import config
from src.config.log_config import logger
from src.geometry.triangulator import triangulate_unit_square
from src.solver.fem_solver import solve_mapping
from src.utils.errors import InfeasibleClass, OrderingViolation


@dataclass(frozen=True, eq=False)
class BoundResult:
    """
    Energy value with its minimizer: per-cell matrices B_c for the optimization
    bounds, per-element DU for the finite element upper estimate.
    """

    value: float
    minimizer: Optional[np.ndarray]
    constraint_residuals: Dict[str, float]
    status: str = "ok"
    iterations: int = 0
    multiplier: Optional[float] = None
    cell_means: Optional[np.ndarray] = None
    dual_value: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "status": self.status,
            "iterations": self.iterations,
            "multiplier": self.multiplier,
            "dual_value": self.dual_value,
            "constraint_residuals": dict(self.constraint_residuals),
        }


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.shape != (2, 2):
        raise ValueError("A must be a 2x2 matrix")
    return A


def _conformal_parts(A: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """A = conformal part (c1, c2) + anticonformal part (d1, d2); det A = |c|² - |d|²."""
    conformal = np.array([0.5 * (A[0, 0] + A[1, 1]), 0.5 * (A[1, 0] - A[0, 1])])
    anticonformal = np.array([0.5 * (A[0, 0] - A[1, 1]), 0.5 * (A[0, 1] + A[1, 0])])
    return conformal, anticonformal


def _from_parts(conformal: np.ndarray, anticonformal: np.ndarray) -> np.ndarray:
    """Inverse of _conformal_parts, vectorized over leading axes (..., 2) -> (..., 2, 2)."""
    c1, c2 = conformal[..., 0], conformal[..., 1]
    d1, d2 = anticonformal[..., 0], anticonformal[..., 1]
    matrices = np.empty(conformal.shape[:-1] + (2, 2))
    matrices[..., 0, 0] = c1 + d1
    matrices[..., 0, 1] = d2 - c2
    matrices[..., 1, 0] = c2 + d2
    matrices[..., 1, 1] = c1 - d1
    return matrices


def _residuals(matrices: np.ndarray, weights: np.ndarray, A: np.ndarray) -> Dict[str, float]:
    determinants = np.linalg.det(matrices)
    mean = np.einsum("c,cij->ij", weights, matrices)
    return {
        "mean": float(np.max(np.abs(mean - A))),
        "mean_det": float(abs(weights @ determinants - np.linalg.det(A))),
        "min_det": float(determinants.min()),
    }


def _cell_energy(matrices: np.ndarray, weights: np.ndarray, sigmas: np.ndarray) -> float:
    return float(np.sum(weights * sigmas * np.einsum("cij,cij->c", matrices, matrices)))


# ============================================================
# Wiener bound
# ============================================================

def wiener_bound(layout: PhaseLayout, A) -> float:
    """F0(A) = Trace(Aᵀ h A) with h = (Σ p_i/σ_i)⁻¹ the harmonic mean."""
    A = _as_matrix(A)
    harmonic_mean = 1.0 / float(np.sum(layout.fractions / np.asarray(layout.sigmas, dtype=float)))
    return harmonic_mean * float(np.sum(A * A))


# ============================================================
# Finite element upper estimate of the cell energy
# ============================================================

def cell_energy_upper(layout: PhaseLayout, A, per_cell: Optional[int] = None) -> BoundResult:
    """
    Discrete energy of the σ-harmonic mapping with affine data U = Ax on a mesh
    resolving the cell grid. Converges to F(A) from above under nested refinement.
    """
    A = _as_matrix(A)
    per_cell = int(per_cell or config.composites.upper_per_cell)
    mesh = triangulate_unit_square(layout.grid_n, per_cell)
    coefficient_field = family_layout(layout)
    first, second = solve_mapping(mesh, coefficient_field, lambda points: points @ A.T)

    jacobians = np.stack([first.element_gradients, second.element_gradients], axis=1)
    weights = mesh.signed_areas / mesh.signed_areas.sum()
    sigmas = coefficient_field(mesh.centroids)[:, 0, 0]
    value = _cell_energy(jacobians, weights, sigmas)

    cells = layout.cell_index(mesh.centroids)
    totals = np.zeros((layout.n_cells, 2, 2))
    np.add.at(totals, cells, weights[:, None, None] * jacobians)
    cell_means = totals / np.bincount(cells, weights=weights, minlength=layout.n_cells)[:, None, None]

    result = BoundResult(value, jacobians, _residuals(jacobians, weights, A), iterations=mesh.n_triangles,
                         cell_means=cell_means)
    logger.info("Cell energy upper estimate %.10g on %s elements", value, mesh.n_triangles)
    return result


# ============================================================
# Translation bound: dual in the determinant multiplier
# ============================================================

class _TranslationDual:
    """
    g(t) = 2|c|²H₋(t) + 2|d|²H₊(t) + 2t det A, where H∓ are the weighted harmonic
    means of σ_c ∓ t. g is concave on |t| < min σ and sup g ≤ F1, with equality
    when the maximizer is interior.
    """

    def __init__(self, sigmas: np.ndarray, weights: np.ndarray, A: np.ndarray) -> None:
        self.sigmas, self.weights = sigmas, weights
        self.conformal, self.anticonformal = _conformal_parts(A)
        self.cc = float(self.conformal @ self.conformal)
        self.dd = float(self.anticonformal @ self.anticonformal)
        self.det_a = float(np.linalg.det(A))
        self.limit = float(sigmas.min())
        self.limit_cells = sigmas == self.limit

    def _harmonic(self, t: float, sign: float) -> Tuple[float, float, float]:
        """H, dH/dt, d²H/dt² for the harmonic mean of σ_c + sign·t."""
        denominators = self.sigmas + sign * t
        total = float(np.sum(self.weights / denominators))
        first = -sign * float(np.sum(self.weights / denominators ** 2))
        second = 2.0 * float(np.sum(self.weights / denominators ** 3))
        value = 1.0 / total
        slope = -first / total ** 2
        curvature = -second / total ** 2 + 2.0 * first ** 2 / total ** 3
        return value, slope, curvature

    def derivatives(self, t: float) -> Tuple[float, float]:
        _, slope_c, curvature_c = self._harmonic(t, -1.0)
        _, slope_d, curvature_d = self._harmonic(t, 1.0)
        gradient = 2.0 * self.cc * slope_c + 2.0 * self.dd * slope_d + 2.0 * self.det_a
        hessian = 2.0 * self.cc * curvature_c + 2.0 * self.dd * curvature_d
        return gradient, hessian

    def _factors(self, t: float, sign: float) -> Tuple[float, np.ndarray]:
        """H and the per-cell factors H/(σ_c + sign·t), with their limits on the convexity boundary."""
        denominators = self.sigmas + sign * t
        if np.any(denominators <= 0.0):
            factors = np.where(self.limit_cells, 1.0 / float(self.weights[self.limit_cells].sum()), 0.0)
            return 0.0, factors
        value = 1.0 / float(np.sum(self.weights / denominators))
        return value, value / denominators

    def value(self, t: float) -> float:
        h_conformal, _ = self._factors(t, -1.0)
        h_anticonformal, _ = self._factors(t, 1.0)
        return 2.0 * self.cc * h_conformal + 2.0 * self.dd * h_anticonformal + 2.0 * t * self.det_a

    def minimizer(self, t: float) -> np.ndarray:
        _, conformal_factors = self._factors(t, -1.0)
        _, anticonformal_factors = self._factors(t, 1.0)
        return _from_parts(
            conformal_factors[:, None] * self.conformal[None, :],
            anticonformal_factors[:, None] * self.anticonformal[None, :],
        )


def _maximize_dual(dual: _TranslationDual) -> Tuple[float, str, int]:
    """Safeguarded Newton on g'(t) = 0 over |t| < min σ; returns (t, status, iterations)."""
    tolerance = config.composites.newton_tolerance * max(dual.cc + dual.dd + abs(dual.det_a), 1e-300)
    inner = dual.limit * (1.0 - config.composites.boundary_margin)
    t = 0.0
    gradient, hessian = dual.derivatives(t)
    if abs(gradient) <= tolerance:
        return t, "ok", 0
    if gradient > 0.0:
        if dual.derivatives(inner)[0] >= 0.0:
            return dual.limit, "nonconvex_regime", 0
        low, high = 0.0, inner
    else:
        if dual.derivatives(-inner)[0] <= 0.0:
            return -dual.limit, "nonconvex_regime", 0
        low, high = -inner, 0.0

    for iteration in range(1, int(config.composites.newton_max_iterations) + 1):
        candidate = t - gradient / hessian if hessian < 0.0 else np.nan
        if not low < candidate < high:
            candidate = 0.5 * (low + high)
        t = float(candidate)
        gradient, hessian = dual.derivatives(t)
        logger.debug("translation multiplier iteration %s: t=%.15g g'=%.3e", iteration, t, gradient)
        if abs(gradient) <= tolerance or high - low <= 1e-15 * dual.limit:
            return t, "ok", iteration
        if gradient > 0.0:
            low = t
        else:
            high = t
    return t, "max_iterations", int(config.composites.newton_max_iterations)


def _primal_starts(weights: np.ndarray, A: np.ndarray, starts: Sequence[np.ndarray]) -> list:
    """The given starts, B ≡ A, then seeded perturbations of A that keep mean B = A."""
    n_cells = weights.size
    rng = np.random.default_rng(int(config.composites.primal_seed))
    scale = 0.5 * max(float(np.linalg.norm(A)), 1e-12)
    perturbed = []
    for _ in range(int(config.composites.primal_starts)):
        noise = rng.normal(scale=scale, size=(n_cells, 2, 2))
        perturbed.append(A + noise - np.einsum("c,cij->ij", weights, noise))
    return [*starts, np.broadcast_to(A, (n_cells, 2, 2)).copy(), *perturbed]


def _best_primal(weights: np.ndarray, sigmas: np.ndarray, A: np.ndarray, starts: Sequence[np.ndarray],
                 sign: Optional[float]) -> Tuple[Optional[BoundResult], Optional[BoundResult]]:
    """(best feasible, least infeasible) SLSQP result over the starts; sign None drops det B_c ≥ 0."""
    det_a = float(np.linalg.det(A))
    n_cells = weights.size
    best, fallback = None, None
    for index, start in enumerate(starts):
        outcome = _slsqp(np.asarray(start, dtype=float), weights, sigmas, A, sign)
        matrices = outcome.x.reshape(n_cells, 2, 2)
        residuals = _residuals(matrices, weights, A)
        min_signed = 0.0 if sign is None else float(np.min(sign * np.linalg.det(matrices)))
        value = _cell_energy(matrices, weights, sigmas)
        status = "ok" if outcome.success else "max_iterations"
        candidate = BoundResult(value, matrices, residuals, status, int(outcome.nit))
        logger.debug("SLSQP start %s: value %.10g, success %s, residuals %s", index, value, outcome.success, residuals)
        if _feasible(residuals, det_a, min_signed):
            if best is None or value < best.value:
                best = candidate
        elif fallback is None or residuals["mean_det"] < fallback.constraint_residuals["mean_det"]:
            fallback = candidate
    return best, fallback


def cell_translation_bound(weights, sigmas, A) -> BoundResult:
    """
    F1(A) for explicit cells: min of Σ w_c σ_c|B_c|² with mean B = A and mean det B = det A,
    through its concave dual in the multiplier t. When the maximizer reaches |t| = min σ
    the dual value is only a lower bound; the problem is then solved directly by
    multistart SLSQP and the best feasible value is reported next to `dual_value`.
    """
    A = _as_matrix(A)
    weights = np.asarray(weights, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    dual = _TranslationDual(sigmas, weights, A)
    t, status, iterations = _maximize_dual(dual)
    minimizer = dual.minimizer(t)
    dual_value = dual.value(t)
    result = BoundResult(dual_value, minimizer, _residuals(minimizer, weights, A), status, iterations, t,
                         dual_value=dual_value)
    if status == "ok":
        logger.info("Translation bound %.10g at t=%.6g after %s iterations", result.value, t, iterations)
        return result

    best, _ = _best_primal(weights, sigmas, A, _primal_starts(weights, A, [minimizer]), None)
    if best is None:
        logger.warning("Translation bound %s: t=%.6g, no feasible primal point, dual value %.10g",
                       status, t, dual_value)
        return result
    logger.warning("Translation bound dual stops at t=%.6g (%s): dual %.10g, primal %.10g",
                   t, status, dual_value, best.value)
    return BoundResult(best.value, best.minimizer, best.constraint_residuals, "primal_multistart",
                       best.iterations, t, dual_value=dual_value)


def translation_bound(layout: PhaseLayout, A) -> BoundResult:
    """F1(A) over the cells of a layout."""
    return cell_translation_bound(layout.cell_weights, layout.cell_sigmas, A)


# ============================================================
# Improved bound: pointwise det B >= 0
# ============================================================

def _orientation_sign(det_a: float, match_orientation: bool) -> float:
    if not match_orientation or det_a >= 0.0:
        return 1.0
    return -1.0


def _slsqp(start: np.ndarray, weights: np.ndarray, sigmas: np.ndarray, A: np.ndarray, sign: Optional[float]):
    n_cells = weights.size
    det_a = float(np.linalg.det(A))

    def objective(x: np.ndarray):
        B = x.reshape(n_cells, 2, 2)
        return _cell_energy(B, weights, sigmas), (2.0 * (weights * sigmas)[:, None, None] * B).ravel()

    def cofactors(B: np.ndarray) -> np.ndarray:
        # d det B / dB
        return np.stack([B[:, 1, 1], -B[:, 1, 0], -B[:, 0, 1], B[:, 0, 0]], axis=1)

    mean_jacobian = np.zeros((4, 4 * n_cells))
    for entry in range(4):
        mean_jacobian[entry, entry::4] = weights

    constraints = [
        {"type": "eq",
         "fun": lambda x: np.einsum("c,ck->k", weights, x.reshape(n_cells, 4)) - A.ravel(),
         "jac": lambda x: mean_jacobian},
        {"type": "eq",
         "fun": lambda x: np.array([weights @ np.linalg.det(x.reshape(n_cells, 2, 2)) - det_a]),
         "jac": lambda x: (weights[:, None] * cofactors(x.reshape(n_cells, 2, 2))).reshape(1, -1)},
    ]
    if sign is not None:
        constraints.append(
            {"type": "ineq",
             "fun": lambda x: sign * np.linalg.det(x.reshape(n_cells, 2, 2)),
             "jac": lambda x: sign * _block_rows(cofactors(x.reshape(n_cells, 2, 2)))}
        )
    return minimize(
        objective, start.ravel(), jac=True, method="SLSQP", constraints=constraints,
        options={"maxiter": int(config.composites.slsqp_max_iterations), "ftol": config.composites.slsqp_tolerance},
    )


def _block_rows(per_cell: np.ndarray) -> np.ndarray:
    """(C, 4) per-cell gradients -> (C, 4C) block-diagonal constraint Jacobian."""
    n_cells = per_cell.shape[0]
    jacobian = np.zeros((n_cells, 4 * n_cells))
    for cell in range(n_cells):
        jacobian[cell, 4 * cell:4 * cell + 4] = per_cell[cell]
    return jacobian


def _feasible(residuals: Dict[str, float], det_a: float, min_signed_det: float) -> bool:
    tolerance = config.composites.feasibility_tolerance
    return (
            residuals["mean"] <= tolerance
            and residuals["mean_det"] <= tolerance * max(1.0, abs(det_a))
            and min_signed_det >= -tolerance
    )


def improved_bound(
        layout: PhaseLayout,
        A,
        match_orientation: bool = False,
        translation: Optional[BoundResult] = None,
        extra_starts: Sequence[np.ndarray] = (),
) -> BoundResult:
    """
    F2(A): the F1 problem with det B_c ≥ 0 in every cell (det A·det B_c ≥ 0 with
    match_orientation). Active-set SQP from the F1 minimizer, from the boundary
    limit of the dual when the multiplier is pinned, from B ≡ A and from any extra
    starts; the best feasible local minimum is returned. Global optimality is not
    certified.
    """
    A = _as_matrix(A)
    det_a = float(np.linalg.det(A))
    tolerance = config.composites.feasibility_tolerance
    if not match_orientation and det_a < -tolerance:
        raise InfeasibleClass(
            f"det A = {det_a:.6g} < 0 cannot be the mean of nonnegative determinants",
            {"det_A": det_a, "class": "det B >= 0"},
        )
    sign = _orientation_sign(det_a, match_orientation)
    weights, sigmas = layout.cell_weights, layout.cell_sigmas
    translation = translation or translation_bound(layout, A)

    signed_dets = sign * np.linalg.det(translation.minimizer)
    if translation.status == "ok" and signed_dets.min() >= -tolerance:
        logger.info("Improved bound equals the translation bound (determinant constraint inactive)")
        return BoundResult(translation.value, translation.minimizer, dict(translation.constraint_residuals),
                           "ok", 0, translation.multiplier)

    starts = [translation.minimizer]
    if translation.status != "ok" and translation.multiplier is not None:
        starts.append(_TranslationDual(sigmas, weights, A).minimizer(translation.multiplier))
    starts += [np.broadcast_to(A, (layout.n_cells, 2, 2)).copy(), *extra_starts]
    best, fallback = _best_primal(weights, sigmas, A, starts, sign)

    if best is None:
        result = BoundResult(fallback.value, fallback.minimizer, fallback.constraint_residuals,
                             "not_certified", fallback.iterations, translation.multiplier)
        logger.warning("Improved bound: no feasible SQP result, best value %.10g", result.value)
        return result
    best = replace(best, multiplier=translation.multiplier)
    if best.status != "ok":
        logger.warning("Improved bound stopped at the iteration limit with feasible value %.10g", best.value)
    else:
        logger.info("Improved bound %.10g (translation bound %.10g)", best.value, translation.value)
    return best


# ============================================================
# Bound chain F0 <= F1 <= F2 <= F_upper
# ============================================================

@dataclass(frozen=True)
class BoundChain:
    wiener: float
    translation: BoundResult
    improved: Optional[BoundResult]
    upper: BoundResult
    tolerance: float
    notes: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "F0": self.wiener,
            "F1": self.translation.to_dict(),
            "F2": None if self.improved is None else self.improved.to_dict(),
            "F_upper": self.upper.to_dict(),
            "tolerance": self.tolerance,
            "notes": dict(self.notes),
        }


def bound_chain_report(layout: PhaseLayout, A, per_cell: Optional[int] = None) -> BoundChain:
    """
    All four quantities and the ordering check. The upper estimate tolerance adds the
    drop of the finite element energy between the half-resolution mesh and the
    working mesh as a discretization allowance.
    """
    A = _as_matrix(A)
    per_cell = int(per_cell or config.composites.upper_per_cell)
    wiener = wiener_bound(layout, A)
    translation = translation_bound(layout, A)
    upper = cell_energy_upper(layout, A, per_cell)
    allowance = 0.0
    if per_cell >= 2:
        allowance = max(0.0, cell_energy_upper(layout, A, per_cell // 2).value - upper.value)
    tolerance = float(config.composites.chain_tolerance) + allowance

    notes = {}
    try:
        improved = improved_bound(layout, A, translation=translation, extra_starts=[upper.cell_means])
    except InfeasibleClass as error:
        improved, notes["F2"] = None, str(error)
    # an F2 point is feasible for F1, so a lower F2 improves a multistart F1
    if (improved is not None and translation.status == "primal_multistart"
            and improved.status != "not_certified" and improved.value < translation.value):
        logger.info("Translation bound lowered from %.10g to %.10g by the F2 minimizer", translation.value, improved.value)
        translation = replace(translation, value=improved.value, minimizer=improved.minimizer,
                              constraint_residuals=dict(improved.constraint_residuals))
        notes["F1"] = "lowered to the F2 minimizer"

    strict = 1e-8
    chain = [("F0", wiener), ("F1", translation.value)]
    if improved is not None and improved.status != "not_certified":
        chain.append(("F2", improved.value))
    elif improved is not None:
        notes["F2"] = "no feasible SQP point; left out of the ordering"
    violations = [
        f"{lower_name} = {lower:.12g} > {higher_name} = {higher:.12g}"
        for (lower_name, lower), (higher_name, higher) in zip(chain, chain[1:])
        if lower > higher + strict
    ]
    top_name, top = chain[-1]
    if top > upper.value + tolerance:
        violations.append(f"{top_name} = {top:.12g} > F_upper = {upper.value:.12g} + {tolerance:.3g}")

    report = BoundChain(wiener, translation, improved, upper, tolerance, notes)
    if violations:
        raise OrderingViolation("; ".join(violations), report.to_dict())
    logger.info("Bound chain holds: %s", {**dict(chain), "F_upper": upper.value})
    return report
