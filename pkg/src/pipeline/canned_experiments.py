from copy import deepcopy
from pathlib import Path
from typing import Dict, List, Optional, Union

from src.pipeline.experiment_config import ExperimentConfig, validate_experiment
from src.utils.errors import ConfigError

_DISK = {"shape": "disk", "n_boundary": 256}
_MEYERS_FIT = {"center": [0.0, 0.0], "radii": [0.2, 0.8]}


def _meyers(alpha: float, exponent_window, l2_bound: Optional[float] = None) -> dict:
    """The exponent is fitted on the last (finest) level only."""
    acceptance = {"exponent": list(exponent_window)}
    mesh_sizes = [0.02]
    if l2_bound is not None:
        acceptance["max_l2_error"] = l2_bound
        acceptance["monotone_l2"] = True
        mesh_sizes = [0.08, 0.04, 0.02]
    return {
        "kind": "jacobian",
        "domain": _DISK,
        "coefficient": {"family": "meyers", "alpha": alpha},
        "datum": {"type": "meyers"},
        "mesh_sizes": mesh_sizes,
        "options": {"fit": _MEYERS_FIT, "gradient_bounds": {"delta": 0.1, "r": 0.1}},
        "acceptance": acceptance,
    }


def _bounds(options: dict, acceptance: dict) -> dict:
    return {"kind": "bounds", "options": options, "acceptance": acceptance}


CANNED_EXPERIMENTS: Dict[str, dict] = {
    "identity": {
        "kind": "jacobian",
        "domain": _DISK,
        "coefficient": {"family": "constant", "matrix": [[1.0, 0.0], [0.0, 1.0]]},
        "datum": {"type": "identity"},
        "mesh_sizes": [0.1],
        "options": {"gradient_bounds": {"delta": 0.1, "r": 0.1}},
        "acceptance": {"det_equals_one": 1e-10, "positive_det": True},
    },
    "meyers-alpha05": _meyers(0.5, (-1.15, -0.85)),
    "meyers-alpha1": _meyers(1.0, (-0.05, 0.05)),
    "meyers-alpha2": _meyers(2.0, (1.85, 2.15), l2_bound=0.05),
    "meyers-alpha3": _meyers(3.0, (3.7, 4.3)),
    "smooth-random-sweep": {
        "kind": "jacobian",
        "domain": _DISK,
        "coefficient": {"family": "smooth_random", "K": 2.0},
        "datum": {"type": "identity"},
        "mesh_sizes": [0.1, 0.05, 0.025],
        "options": {"seeds": list(range(10)), "gradient_bounds": {"delta": 0.1, "r": 0.1}},
        "acceptance": {"positive_det": True, "stability": 0.25, "beltrami": True},
    },
    "ellipse-character": {
        "kind": "character",
        "domain": {"shape": "ellipse", "a": 2.0, "b": 1.0, "n_boundary": 512},
        "acceptance": {"predicted_D": [0.5, 1e-6], "measured_at_least_predicted": True},
    },
    "wood-demo": {
        "kind": "oracle",
        "options": {"oracle": "wood", "samples": 100},
        "acceptance": {"max_laplacian": 1e-8, "det_at_point": [3.0, 1e-10]},
    },
    "jin-kazdan-smooth": {
        "kind": "oracle",
        "options": {"oracle": "jin_kazdan_smooth", "a0": 0.5},
        "acceptance": {"max_residual": 1e-6},
    },
    "jin-kazdan-piecewise": {
        "kind": "oracle",
        "options": {"oracle": "jin_kazdan_piecewise", "a0": 0.5},
        "acceptance": {"max_residual": 1e-6, "max_gradient_jump": 1e-10},
    },
    "bounds-1phase": _bounds(
        {"layouts": [{"grid_n": 2, "phases": [1, 1, 1, 1], "sigmas": [3.0]}],
         "A_values": [[[1.0, 0.2], [0.1, 0.8]], [[1.0, 0.0], [0.0, 1.0]]], "per_cell": 4},
        {"ordering": True, "all_equal": 1e-8},
    ),
    "bounds-2phase": _bounds(
        {"random": {"count": 10, "grid_n": 4, "sigmas": [1.0, 2.0]},
         "A_values": [[[1.0, 0.0], [0.0, 0.5]]], "per_cell": 4},
        {"ordering": True},
    ),
    "bounds-3phase": _bounds(
        {"random": {"count": 10, "grid_n": 3, "sigmas": [1.0, 2.0, 5.0]},
         "A_values": [[[1.0, 0.0], [0.0, 0.5]], [[1.0, 0.0], [0.0, 1.0]]], "per_cell": 4},
        {"ordering": True},
    ),
    "convergence-manufactured": {
        "kind": "convergence",
        "domain": _DISK,
        "coefficient": {"family": "constant", "matrix": [[1.0, 0.0], [0.0, 1.0]]},
        "datum": {"type": "saddle"},
        "mesh_sizes": [0.2, 0.1, 0.05, 0.025],
        "acceptance": {"order": [1.7, 2.3], "monotone": True},
    },
    "stream-refinement": {
        "kind": "solve",
        "domain": _DISK,
        "coefficient": {"family": "smooth_random", "K": 2.0},
        "datum": {"type": "linear"},
        "mesh_sizes": [0.1, 0.05, 0.025],
        "seed": 3,
        "acceptance": {"loop_residual_decay": 1.5},
    },
}


def list_canned() -> List[str]:
    return list(CANNED_EXPERIMENTS)


def canned_experiment(name: str, output_root: Union[str, Path] = "output") -> ExperimentConfig:
    """Validated config of a catalog entry; unknown names raise ConfigError."""
    if name not in CANNED_EXPERIMENTS:
        raise ConfigError(f"unknown canned experiment '{name}'", {"field": "name", "known": list_canned()})
    data = deepcopy(CANNED_EXPERIMENTS[name])
    data["name"] = name
    return validate_experiment(data, default_output=output_root)
