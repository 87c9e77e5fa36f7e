import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from src.characters.boundary_datum import identity_datum, trace_scalar_datum
from src.characters.convexity_certifier import certify_convex, curvature_character
from src.characters.unimodal_certifier import certify_unimodal, extremal_arcs
from src.coefficients.coefficient_field import CoefficientField
from src.coefficients.dilatations import beltrami_dilatations, dilatation_bound
from src.coefficients.families import field_from_descriptor
from src.composites.bounds import bound_chain_report
from src.composites.phase_layout import layout_from_dict, random_layout
from src.config.log_config import logger
from src.geometry.boundary_curve import DomainSpec
from src.geometry.domain_builder import make_disk_domain, make_ellipse_domain, make_star_domain
from src.geometry.triangulator import triangulate
from src.jacobian.degeneration_fit import fit_degeneration_rate, with_powerlaw
from src.jacobian.gradient_bounds import verify_gradient_bounds
from src.jacobian.jacobian_lab import dilatation_quotient, directional_gradient_bound, jacobian_field
from src.oracles.jin_kazdan_oracle import (
    jin_kazdan_eval,
    jin_kazdan_piecewise,
    jin_kazdan_smooth,
    small_amplitude_limit,
    unique_continuation_demo,
)
from src.oracles.meyers_oracle import meyers_mapping
from src.oracles.wood_oracle import wood_eval
from src.pipeline.experiment_config import ExperimentConfig
from src.pipeline.parallel_sweep import ParallelSweep
from src.solver.fem_solver import (
    assemble_and_solve,
    convergence_study,
    l2_error,
    maximum_principle_excess,
    solve_mapping,
)
from src.solver.first_order_system import check_first_order_system
from src.solver.stream_function import stream_function
from src.utils.errors import ConfigError, LabError, OrderingViolation
from src.utils.utils import finite_difference_jacobian

VectorTrace = Callable[[np.ndarray], np.ndarray]
Table = Tuple[List[str], np.ndarray]


@dataclass
class ExperimentOutcome:
    name: str
    kind: str
    results: Dict[str, Any]
    checks: Dict[str, bool] = field(default_factory=dict)
    tables: Dict[str, Table] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def report(self, experiment: ExperimentConfig) -> dict:
        return {
            "experiment": experiment.to_dict(),
            "results": self.results,
            "checks": self.checks,
            "passed": self.passed,
        }


# ============================================================
# Builders from experiment descriptors
# ============================================================

def build_domain(spec: Dict[str, Any]) -> DomainSpec:
    n_boundary = int(spec.get("n_boundary", 256))
    shape = spec.get("shape")
    try:
        if shape == "disk":
            return make_disk_domain(n_boundary)
        if shape == "ellipse":
            return make_ellipse_domain(float(spec["a"]), float(spec["b"]), n_boundary)
        if shape == "star":
            return _star_domain(float(spec.get("base", 1.0)), spec.get("modes", []), n_boundary)
    except KeyError as error:
        raise ConfigError(f"domain.{error.args[0]} is required for shape '{shape}'",
                          {"field": f"domain.{error.args[0]}"}) from error
    except ValueError as error:
        raise ConfigError(f"invalid domain: {error}", {"field": "domain"}) from error
    raise ConfigError(f"unknown domain shape '{shape}'", {"field": "domain.shape"})


def _star_domain(base: float, modes: List[List[float]], n_boundary: int) -> DomainSpec:
    """ρ(θ) = base + Σ a_k cos(kθ + φ_k) with analytic derivatives."""
    modes = np.asarray(modes, dtype=float).reshape(-1, 3)
    orders, amplitudes, phases = modes[:, 0], modes[:, 1], modes[:, 2]

    def angles(theta: np.ndarray) -> np.ndarray:
        return np.outer(np.asarray(theta, dtype=float), orders) + phases

    def radius(theta):
        return base + np.cos(angles(theta)) @ amplitudes

    def radius_derivative(theta):
        return -np.sin(angles(theta)) @ (amplitudes * orders)

    def radius_second_derivative(theta):
        return -np.cos(angles(theta)) @ (amplitudes * orders ** 2)

    return make_star_domain(radius, n_boundary, radius_derivative, radius_second_derivative, description="star")


def build_field(descriptor: Dict[str, Any], seed: Optional[int] = None) -> CoefficientField:
    if seed is not None and descriptor.get("family") == "smooth_random":
        descriptor = {**descriptor, "seed": seed}
    return field_from_descriptor(descriptor)


def vector_trace(datum: Dict[str, Any], coefficient: Dict[str, Any]) -> VectorTrace:
    """Boundary map Φ as a function of points, shape (P, 2)."""
    kind = datum.get("type")
    if kind == "identity":
        return lambda points: np.asarray(points, dtype=float).copy()
    if kind == "linear":
        matrix = np.asarray(datum.get("matrix", [[1.0, 0.0], [0.0, 1.0]]), dtype=float)
        return lambda points: np.asarray(points, dtype=float) @ matrix.T
    if kind == "saddle":
        return lambda points: np.column_stack([points[:, 0] ** 2 - points[:, 1] ** 2, 2.0 * points[:, 0] * points[:, 1]])
    if kind == "meyers":
        alpha = float(coefficient["alpha"])
        return lambda points: meyers_mapping(alpha, points)
    raise ConfigError(f"unknown boundary datum '{kind}'", {"field": "datum.type"})


def scalar_trace(datum: Dict[str, Any], coefficient: Dict[str, Any]) -> VectorTrace:
    """First component of the boundary map; 'linear' may instead give a direction."""
    if datum.get("type") == "linear" and "direction" in datum:
        direction = np.asarray(datum["direction"], dtype=float)
        return lambda points: np.asarray(points, dtype=float) @ direction
    mapping = vector_trace(datum, coefficient)
    return lambda points: mapping(np.asarray(points, dtype=float))[:, 0]


def exact_solution(datum: Dict[str, Any], coefficient: Dict[str, Any]) -> Optional[VectorTrace]:
    """Closed-form scalar solution when the datum extends σ-harmonically by itself."""
    family, kind = coefficient.get("family"), datum.get("type")
    if family == "meyers" and kind in ("meyers", "identity"):
        alpha = float(coefficient["alpha"])
        return lambda points: meyers_mapping(alpha, points)[:, 0]
    if family == "constant":
        matrix = np.asarray(coefficient.get("matrix", np.eye(2)), dtype=float)
        if kind in ("identity", "linear"):
            return scalar_trace(datum, coefficient)
        if kind == "saddle" and np.allclose(matrix, matrix[0, 0] * np.eye(2)):
            return scalar_trace(datum, coefficient)
    return None


def _check_window(value: float, window) -> bool:
    low, high = float(window[0]), float(window[1])
    return bool(low <= value <= high)


def _check_target(value: float, target) -> bool:
    expected, tolerance = float(target[0]), float(target[1])
    return bool(abs(value - expected) <= tolerance)


# ============================================================
# solve / convergence
# ============================================================

def _run_solve(experiment: ExperimentConfig) -> ExperimentOutcome:
    domain = build_domain(experiment.domain)
    coefficient_field = build_field(experiment.coefficient, experiment.seed)
    trace = scalar_trace(experiment.datum, experiment.coefficient)
    acceptance, checks = experiment.acceptance, {}
    if "loop_residual_decay" in acceptance and len(experiment.mesh_sizes) < 2:
        raise ConfigError("loop_residual_decay needs at least two mesh sizes", {"field": "mesh_sizes"})

    # every level feeds the loop-residual study; the other results come from the last one
    loop_residuals = []
    for h in experiment.mesh_sizes:
        mesh = triangulate(domain, h)
        solution = assemble_and_solve(mesh, coefficient_field, trace)
        tree_stream = stream_function(solution, coefficient_field, "tree")
        loop_residuals.append(tree_stream.loop_residual)
    loop_ratios = [
        coarse / fine if fine > 0.0 else np.inf for coarse, fine in zip(loop_residuals, loop_residuals[1:])
    ]

    first_order = check_first_order_system(solution, tree_stream, coefficient_field)
    results = {
        "nodes": mesh.n_nodes,
        "elements": mesh.n_triangles,
        "h": mesh.h,
        "solver_residual": solution.residual_norm,
        "maximum_principle_excess": maximum_principle_excess(solution),
        "loop_residual": tree_stream.loop_residual,
        "loop_residuals": loop_residuals,
        "loop_residual_ratios": loop_ratios,
        "first_order": first_order.to_dict(),
    }
    exact = exact_solution(experiment.datum, experiment.coefficient)
    if exact is not None:
        results["l2_error"] = l2_error(solution, exact)

    if "max_l2_error" in acceptance and "l2_error" in results:
        checks["l2_error"] = results["l2_error"] <= float(acceptance["max_l2_error"])
    if "max_loop_residual" in acceptance:
        checks["loop_residual"] = tree_stream.loop_residual <= float(acceptance["max_loop_residual"])
    if "loop_residual_decay" in acceptance:
        checks["loop_residual_decay"] = all(ratio >= float(acceptance["loop_residual_decay"]) for ratio in loop_ratios)
    if "max_first_order_residual" in acceptance:
        checks["first_order"] = first_order.max_residual <= float(acceptance["max_first_order_residual"])
    if acceptance.get("maximum_principle") and coefficient_field.symmetric:
        checks["maximum_principle"] = results["maximum_principle_excess"] <= 1e-10

    tables = {
        "solution.csv": (["node", "x", "y", "u"],
                         np.column_stack([np.arange(mesh.n_nodes), mesh.nodes, solution.nodal_values])),
        "gradients.csv": (["tri", "cx", "cy", "gx", "gy"],
                          np.column_stack([np.arange(mesh.n_triangles), mesh.centroids, solution.element_gradients])),
    }
    return ExperimentOutcome(experiment.name, experiment.kind, results, checks, tables)


def _run_convergence(experiment: ExperimentConfig) -> ExperimentOutcome:
    exact = exact_solution(experiment.datum, experiment.coefficient)
    if exact is None:
        raise ConfigError("convergence experiments need a datum with a closed-form solution", {"field": "datum.type"})
    domain = build_domain(experiment.domain)
    coefficient_field = build_field(experiment.coefficient, experiment.seed)
    study = convergence_study(
        domain, coefficient_field, scalar_trace(experiment.datum, experiment.coefficient), exact, experiment.mesh_sizes
    )
    checks = {}
    if "order" in experiment.acceptance:
        checks["order"] = _check_window(study.mean_order, experiment.acceptance["order"])
    if experiment.acceptance.get("monotone"):
        checks["monotone"] = all(b < a for a, b in zip(study.errors, study.errors[1:]))
    return ExperimentOutcome(experiment.name, experiment.kind, {"convergence": study.to_dict()}, checks)


# ============================================================
# jacobian (single field or seeded sweep)
# ============================================================

def _beltrami_margin(coefficient_field: CoefficientField, seed: int) -> float:
    """bound - max(|μ| + |ν|) over 10³ points of [-1, 1]²; negative means violated."""
    points = np.random.default_rng(seed).uniform(-1.0, 1.0, size=(1000, 2))
    pair = beltrami_dilatations(coefficient_field(points))
    return float(dilatation_bound(coefficient_field.K) - np.max(pair.total))


def _jacobian_levels(experiment_data: Dict[str, Any], seed: Optional[int], with_table: bool) -> Dict[str, Any]:
    """All refinement levels of one coefficient field, as plain data."""
    domain = build_domain(experiment_data["domain"])
    coefficient_field = build_field(experiment_data["coefficient"], seed)
    datum, coefficient, options = experiment_data["datum"], experiment_data["coefficient"], experiment_data["options"]
    mapping_trace = vector_trace(datum, coefficient)
    exact = exact_solution(datum, coefficient)

    arcs = None
    gradient_options = options.get("gradient_bounds")
    if gradient_options:
        first_component = trace_scalar_datum(
            domain.parametrization, lambda points: mapping_trace(points)[:, 0], domain.boundary.n_samples,
            description="u1 datum",
        )
        arcs = extremal_arcs(first_component, certify_unimodal(first_component))
    hypotheses_hold = coefficient.get("family") in ("constant", "smooth_random")

    levels, table = [], None
    for h in experiment_data["mesh_sizes"]:
        mesh = triangulate(domain, h)
        mapping = solve_mapping(mesh, coefficient_field, mapping_trace)
        report = jacobian_field(mapping)
        if options.get("fit"):
            fit = fit_degeneration_rate(report, tuple(options["fit"]["center"]), tuple(options["fit"]["radii"]))
            report = with_powerlaw(report, fit)
        quotient = dilatation_quotient(mapping)
        level = {
            "h": mesh.h,
            "nodes": mesh.n_nodes,
            "jacobian": report.to_dict(),
            "directional": directional_gradient_bound(mapping).to_dict(),
            "quotient": quotient.to_dict(),
            "max_abs_det_minus_one": float(np.max(np.abs(report.determinants - 1.0))),
        }
        if arcs is not None:
            level["gradient_bounds"] = verify_gradient_bounds(
                mapping[0], arcs, float(gradient_options["delta"]), float(gradient_options["r"]), hypotheses_hold
            ).to_dict()
        if exact is not None:
            level["l2_error"] = l2_error(mapping[0], exact)
        levels.append(level)
        if with_table:
            table = np.column_stack([
                np.arange(mesh.n_triangles), mesh.centroids, report.determinants, quotient.values,
            ])
    return {
        "seed": seed,
        "field": coefficient_field.description,
        "beltrami_margin": _beltrami_margin(coefficient_field, 0 if seed is None else seed),
        "levels": levels,
        "table": table,
    }


# ============================================================
# Worker Function
# ============================================================

def _jacobian_seed_task(experiment_data: Dict[str, Any], seed: int, with_table: bool) -> Dict[str, Any]:
    """Worker for one seed of a sweep; must stay at module level for process pools."""
    try:
        return _jacobian_levels(experiment_data, seed, with_table)
    except Exception as error:
        logger.error("Jacobian sweep failed for seed %s: %s", seed, error)
        raise


def _run_jacobian(experiment: ExperimentConfig, num_workers: Optional[int]) -> ExperimentOutcome:
    experiment_data = experiment.to_dict()
    seeds = experiment.options.get("seeds")
    if seeds:
        sweep = ParallelSweep(num_workers, label="jacobian sweep")
        runs = sweep.run(_jacobian_seed_task, [(experiment_data, int(seed), index == 0) for index, seed in enumerate(seeds)])
    else:
        runs = [_jacobian_levels(experiment_data, None, True)]

    acceptance, checks = experiment.acceptance, {}
    finest = [run["levels"][-1] for run in runs]
    if "det_equals_one" in acceptance:
        checks["det_equals_one"] = all(
            level["max_abs_det_minus_one"] <= float(acceptance["det_equals_one"]) for run in runs for level in run["levels"]
        )
    if acceptance.get("positive_det"):
        checks["positive_det"] = all(level["jacobian"]["sign_changes"] == 0 for run in runs for level in run["levels"])
    if "stability" in acceptance:
        stable = []
        for run in runs:
            if len(run["levels"]) < 2:
                continue
            coarse = run["levels"][-2]["jacobian"]["interior_min"]["0.1"]
            fine = run["levels"][-1]["jacobian"]["interior_min"]["0.1"]
            stable.append(abs(coarse - fine) <= float(acceptance["stability"]) * max(abs(coarse), abs(fine)))
        checks["stability"] = all(stable)
    if "exponent" in acceptance:
        checks["exponent"] = all(
            _check_window(level["jacobian"]["powerlaw_exponent"], acceptance["exponent"]) for level in finest
        )
    if "max_l2_error" in acceptance:
        checks["l2_error"] = all(level.get("l2_error", np.inf) <= float(acceptance["max_l2_error"]) for level in finest)
    if acceptance.get("monotone_l2"):
        decreasing = []
        for run in runs:
            errors = [level.get("l2_error", np.nan) for level in run["levels"]]
            decreasing.append(len(errors) >= 2 and all(later < earlier for earlier, later in zip(errors, errors[1:])))
        checks["monotone_l2"] = all(decreasing)
    if acceptance.get("beltrami"):
        checks["beltrami"] = all(run["beltrami_margin"] >= -1e-12 for run in runs)
    if acceptance.get("positive_det") and all("gradient_bounds" in level for level in finest):
        checks["gradient_bounds"] = all(level["gradient_bounds"]["status"] == "ok" for level in finest)

    tables = {"jacobian.csv": (["tri", "cx", "cy", "det", "quotient"], runs[0]["table"])}
    results = {"runs": [{key: value for key, value in run.items() if key != "table"} for run in runs]}
    return ExperimentOutcome(experiment.name, experiment.kind, results, checks, tables)


# ============================================================
# character
# ============================================================

def _run_character(experiment: ExperimentConfig, num_workers: Optional[int]) -> ExperimentOutcome:
    domain = build_domain(experiment.domain)
    curve = domain.boundary
    predicted = curvature_character(curve)
    measured = certify_convex(identity_datum(curve), num_workers=num_workers)
    results = {"predicted": predicted.to_dict(), "measured": measured.to_dict(), "length": curve.total_length}

    acceptance, checks = experiment.acceptance, {}
    if "predicted_D" in acceptance:
        checks["predicted_D"] = _check_target(predicted.D, acceptance["predicted_D"])
    if "measured_D" in acceptance:
        checks["measured_D"] = _check_target(measured.D, acceptance["measured_D"])
    if acceptance.get("measured_at_least_predicted"):
        checks["measured_at_least_predicted"] = measured.D >= predicted.D * (1.0 - 1e-9)
    return ExperimentOutcome(experiment.name, experiment.kind, results, checks)


# ============================================================
# oracle
# ============================================================

def _run_wood(experiment: ExperimentConfig) -> ExperimentOutcome:
    rng = np.random.default_rng(experiment.seed)
    samples = int(experiment.options.get("samples", 100))
    points = rng.uniform(-1.0, 1.0, size=(samples, 3))
    on_plane = points.copy()
    on_plane[:, 0] = 0.0

    evaluations = [wood_eval(point) for point in points]
    plane_dets = np.array([wood_eval(point, check_harmonic=False).detDU for point in on_plane])
    laplacians = np.array([evaluation.residual for evaluation in evaluations])
    jacobian_errors = []
    for point, evaluation in zip(points, evaluations):
        numeric = finite_difference_jacobian(lambda x: wood_eval(x, check_harmonic=False).U, point, 1e-5)
        jacobian_errors.append(np.max(np.abs(numeric - evaluation.DU)) / max(1.0, np.max(np.abs(evaluation.DU))))
    sample = wood_eval([1.0, 0.0, 0.0], check_harmonic=False)

    results = {
        "plane_max_abs_det": float(np.max(np.abs(plane_dets))),
        "max_laplacian": float(laplacians.max()),
        "max_jacobian_mismatch": float(max(jacobian_errors)),
        "sample_point": sample.to_dict(),
    }
    acceptance = experiment.acceptance
    checks = {
        "plane_det_zero": results["plane_max_abs_det"] == 0.0,
        "jacobian_matches_differences": results["max_jacobian_mismatch"] <= 1e-6,
    }
    if "max_laplacian" in acceptance:
        checks["laplacian"] = results["max_laplacian"] <= float(acceptance["max_laplacian"])
    if "det_at_point" in acceptance:
        checks["det_at_point"] = _check_target(sample.detDU, acceptance["det_at_point"])

    rows = np.array([
        [*point, evaluation.detDU, float(np.sum(evaluation.DU ** 2))] for point, evaluation in zip(points, evaluations)
    ])
    tables = {"wood.csv": (["x1", "x2", "x3", "det", "trace"], rows)}
    return ExperimentOutcome(experiment.name, experiment.kind, results, checks, tables)


def _run_jin_kazdan(experiment: ExperimentConfig, smooth: bool) -> ExperimentOutcome:
    a0 = float(experiment.options.get("a0", 0.5))
    profile = jin_kazdan_smooth(a0=a0) if smooth else jin_kazdan_piecewise(a0)
    rng = np.random.default_rng(experiment.seed)

    heights = np.linspace(-1.0, 1.0, 41)
    heights = heights[heights != 0.0]
    slopes = profile.phi_prime(heights)
    residual_points = np.column_stack([rng.uniform(-1.0, 1.0, size=(20, 2)), np.repeat([0.5, -0.5], 10)])
    residuals = [jin_kazdan_eval(profile, point, check_residual=True).residual for point in residual_points]
    below = jin_kazdan_eval(profile, [0.3, -0.2, -1e-12]).DU
    above = jin_kazdan_eval(profile, [0.3, -0.2, 1e-12]).DU
    demo = unique_continuation_demo(profile)
    limit = small_amplitude_limit(smooth=smooth)

    results = {
        "a0": a0,
        "min_phi_prime_positive_side": float(slopes[heights > 0.0].min()),
        "max_phi_prime_negative_side": float(np.max(np.abs(slopes[heights < 0.0]))),
        "max_residual": float(max(residuals)),
        "gradient_jump": float(np.max(np.abs(above - below))),
        "unique_continuation": demo.to_dict(),
        "small_amplitude_limit": limit.to_dict(),
    }
    checks = {
        "det_zero_below": results["max_phi_prime_negative_side"] == 0.0,
        "det_positive_above": results["min_phi_prime_positive_side"] > 0.0,
        "contrast_split": demo.split_exact,
        "trace_at_least_two": demo.trace_min >= 2.0,
        "limit_monotone": limit.monotone,
    }
    if not smooth:
        exact = 2.0 * a0 * (1.0 - a0 ** 2) * heights[heights > 0.0]
        checks["piecewise_det_formula"] = bool(np.allclose(slopes[heights > 0.0], exact, rtol=1e-12, atol=0.0))
    acceptance = experiment.acceptance
    if "max_residual" in acceptance:
        checks["residual"] = results["max_residual"] <= float(acceptance["max_residual"])
    if "max_gradient_jump" in acceptance:
        checks["gradient_jump"] = results["gradient_jump"] <= float(acceptance["max_gradient_jump"])

    tables = {"unique_continuation.csv": (["x1", "x2", "x3", "det", "trace"], demo.table)}
    return ExperimentOutcome(experiment.name, experiment.kind, results, checks, tables)


def _run_oracle(experiment: ExperimentConfig) -> ExperimentOutcome:
    oracle = experiment.options["oracle"]
    if oracle == "wood":
        return _run_wood(experiment)
    return _run_jin_kazdan(experiment, smooth=oracle == "jin_kazdan_smooth")


# ============================================================
# bounds
# ============================================================

def _bound_chain_task(layout_data: Dict[str, Any], A: List[List[float]], per_cell: Optional[int]) -> Dict[str, Any]:
    """Worker for one (layout, A) instance; ordering violations come back as data."""
    layout = layout_from_dict(layout_data)
    try:
        chain = bound_chain_report(layout, np.asarray(A, dtype=float), per_cell)
        return {"layout": layout_data, "A": A, "ordering": True, "chain": chain.to_dict()}
    except OrderingViolation as error:
        logger.warning("Ordering violated for layout %s: %s", layout_data, error)
        return {"layout": layout_data, "A": A, "ordering": False, "chain": error.report, "message": str(error)}
    except Exception as error:
        logger.error("Bound chain failed for layout %s: %s", layout_data, error)
        raise


def _run_bounds(experiment: ExperimentConfig, num_workers: Optional[int]) -> ExperimentOutcome:
    options = experiment.options
    layouts = [layout_from_dict(data).to_dict() for data in options.get("layouts", [])]
    random_spec = options.get("random")
    if random_spec:
        for offset in range(int(random_spec.get("count", 10))):
            layouts.append(random_layout(
                experiment.seed + offset, int(random_spec["grid_n"]), random_spec["sigmas"]
            ).to_dict())
    if not layouts:
        raise ConfigError("bounds experiments need options.layouts or options.random", {"field": "options"})
    a_values = options.get("A_values", [[[1.0, 0.0], [0.0, 1.0]]])
    per_cell = options.get("per_cell")

    tasks = [(layout, A, per_cell) for layout in layouts for A in a_values]
    instances = ParallelSweep(num_workers, label="bound chains").run(_bound_chain_task, tasks)

    improvements = [
        instance["chain"]["F2"]["value"] - instance["chain"]["F1"]["value"]
        for instance in instances
        if instance["ordering"] and instance["chain"].get("F2") and instance["chain"]["F2"]["status"] != "not_certified"
    ]
    results = {"instances": instances, "max_F2_minus_F1": max(improvements) if improvements else None}

    acceptance, checks = experiment.acceptance, {}
    if acceptance.get("ordering"):
        checks["ordering"] = all(instance["ordering"] for instance in instances)
    if "all_equal" in acceptance:
        tolerance = float(acceptance["all_equal"])
        equal = []
        for instance in instances:
            chain = instance["chain"]
            values = [chain["F0"], chain["F1"]["value"], chain["F_upper"]["value"]]
            if chain.get("F2"):
                values.append(chain["F2"]["value"])
            equal.append(max(values) - min(values) <= tolerance)
        checks["all_equal"] = all(equal)
    return ExperimentOutcome(experiment.name, experiment.kind, results, checks)


# ============================================================
# Entry point
# ============================================================

def run_experiment(experiment: ExperimentConfig, num_workers: Optional[int] = None) -> ExperimentOutcome:
    """Run one validated experiment; nothing is written to disk here."""
    start_time = time.perf_counter()
    logger.info("Running experiment '%s' (%s)", experiment.name, experiment.kind)
    if experiment.kind == "solve":
        outcome = _run_solve(experiment)
    elif experiment.kind == "convergence":
        outcome = _run_convergence(experiment)
    elif experiment.kind == "jacobian":
        outcome = _run_jacobian(experiment, num_workers)
    elif experiment.kind == "character":
        outcome = _run_character(experiment, num_workers)
    elif experiment.kind == "oracle":
        outcome = _run_oracle(experiment)
    elif experiment.kind == "bounds":
        outcome = _run_bounds(experiment, num_workers)
    else:
        raise ConfigError(f"unknown experiment kind '{experiment.kind}'", {"field": "kind"})
    elapsed_time = time.perf_counter() - start_time
    logger.info(
        "Experiment '%s' finished in %.2fs: %s", experiment.name, elapsed_time,
        "passed" if outcome.passed else f"failed checks {[k for k, v in outcome.checks.items() if not v]}",
    )
    return outcome


def failure_outcome(experiment: ExperimentConfig, error: LabError) -> ExperimentOutcome:
    """Outcome recorded when an invariant check raised before the run finished."""
    return ExperimentOutcome(
        experiment.name,
        experiment.kind,
        {"error": type(error).__name__, "message": str(error), "report": error.report},
        {"completed": False},
    )
