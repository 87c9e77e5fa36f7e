import pytest

from src.config.log_config import setup_test_logger
from src.oracles.meyers_oracle import meyers_component
from src.pipeline.canned_experiments import canned_experiment
from src.pipeline.experiment_runner import run_experiment
from src.solver.fem_solver import convergence_study

logger = setup_test_logger()


def _finest_level(outcome):
    return outcome.results["runs"][0]["levels"][-1]


@pytest.mark.parametrize(
    "name, window",
    [("meyers-alpha2", (1.85, 2.15)), ("meyers-alpha05", (-1.15, -0.85))],
)
def test_meyers_degeneration_rate(name, window, tmp_output_dir):
    """det DU = α|x|^(2(α-1)): the fitted exponent recovers 2(α - 1) at h = 0.02."""
    outcome = run_experiment(canned_experiment(name, tmp_output_dir), num_workers=1)
    level = _finest_level(outcome)
    exponent = level["jacobian"]["powerlaw_exponent"]
    logger.info(f"{name}: exponent {exponent:.4f}, checks {outcome.checks}")

    assert window[0] <= exponent <= window[1]
    assert level["jacobian"]["sign_changes"] == 0
    assert level["gradient_bounds"]["status"] == "expected_degenerate"
    assert outcome.passed


def test_meyers_alpha2_first_component_error(tmp_output_dir):
    outcome = run_experiment(canned_experiment("meyers-alpha2", tmp_output_dir), num_workers=1)
    levels = outcome.results["runs"][0]["levels"]
    errors = [level["l2_error"] for level in levels]
    logger.info(f"Meyers alpha=2 relative L2 errors {errors}")

    assert len(levels) == 3
    assert errors[-1] <= 0.05
    assert all(later < earlier for earlier, later in zip(errors, errors[1:]))
    assert outcome.checks["l2_error"]
    assert outcome.checks["monotone_l2"]


def test_manufactured_convergence_order(tmp_output_dir):
    outcome = run_experiment(canned_experiment("convergence-manufactured", tmp_output_dir))
    study = outcome.results["convergence"]
    logger.info(f"Manufactured convergence: {study}")
    assert outcome.checks == {"order": True, "monotone": True}


def test_meyers_error_decreases_over_refinements(disk_domain, meyers_field_alpha2):
    """u1 = |x|x1 for α = 2; each halving of h over three levels must reduce the relative L2 error."""
    exact = meyers_component(2.0, 0)
    study = convergence_study(disk_domain, meyers_field_alpha2, exact, exact, [0.08, 0.04, 0.02])
    logger.info(f"Meyers alpha=2 refinement: errors {study.errors}, orders {study.orders}")

    assert all(later < earlier for earlier, later in zip(study.errors, study.errors[1:]))
    assert study.errors[-1] <= 0.05
