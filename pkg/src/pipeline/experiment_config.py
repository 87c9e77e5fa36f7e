import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Tuple, Union

from box import Box

from src.utils.errors import ConfigError

EXPERIMENT_KINDS = ("solve", "character", "jacobian", "oracle", "bounds", "convergence")
DOMAIN_SHAPES = ("disk", "ellipse", "star")
COEFFICIENT_FAMILIES = ("constant", "meyers", "jin_kazdan", "smooth_random")
DATUM_TYPES = ("identity", "linear", "saddle", "meyers")
ORACLES = ("wood", "jin_kazdan_smooth", "jin_kazdan_piecewise")

# kinds that never touch a planar domain or a mesh
_MESHLESS_KINDS = ("oracle", "bounds")


@dataclass(frozen=True)
class ExperimentConfig:
    """One validated experiment: what to run, on what, and where the artifacts go."""

    kind: str
    name: str
    domain: Dict[str, Any]
    coefficient: Dict[str, Any]
    datum: Dict[str, Any]
    mesh_sizes: Tuple[float, ...]
    output_dir: Path
    seed: int = 0
    options: Dict[str, Any] = field(default_factory=dict)
    acceptance: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "name": self.name,
            "domain": self.domain,
            "coefficient": self.coefficient,
            "datum": self.datum,
            "mesh_sizes": list(self.mesh_sizes),
            "seed": self.seed,
            "options": self.options,
            "acceptance": self.acceptance,
        }


def _require(data: Box, key: str, path: str) -> Any:
    if key not in data:
        raise ConfigError(f"missing required field '{path}{key}'", {"field": f"{path}{key}"})
    return data[key]


def _plain(value: Any) -> Any:
    return value.to_dict() if isinstance(value, Box) else value


def validate_experiment(data: Union[dict, Box], default_output: Union[str, Path] = "output") -> ExperimentConfig:
    """Check kinds, families and mesh sizes; every failure names the offending field."""
    data = Box(data)
    kind = _require(data, "kind", "")
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(f"unknown experiment kind '{kind}'", {"field": "kind", "allowed": list(EXPERIMENT_KINDS)})
    name = str(data.get("name", kind))

    domain = _plain(data.get("domain", {"shape": "disk"}))
    coefficient = _plain(data.get("coefficient", {"family": "constant"}))
    datum = _plain(data.get("datum", {"type": "identity"}))
    if kind not in _MESHLESS_KINDS:
        if domain.get("shape") not in DOMAIN_SHAPES:
            raise ConfigError(f"unknown domain shape '{domain.get('shape')}'", {"field": "domain.shape"})
        if coefficient.get("family") not in COEFFICIENT_FAMILIES:
            raise ConfigError(f"unknown coefficient family '{coefficient.get('family')}'",
                              {"field": "coefficient.family"})
        if datum.get("type") not in DATUM_TYPES:
            raise ConfigError(f"unknown boundary datum '{datum.get('type')}'", {"field": "datum.type"})
        if datum.get("type") == "meyers" and coefficient.get("family") != "meyers":
            raise ConfigError("the meyers datum needs the meyers coefficient family", {"field": "datum.type"})

    try:
        mesh_sizes = tuple(float(h) for h in data.get("mesh_sizes", []))
    except (TypeError, ValueError) as error:
        raise ConfigError(f"mesh_sizes must be numbers: {error}", {"field": "mesh_sizes"}) from error
    if kind in ("solve", "jacobian", "convergence") and not mesh_sizes:
        raise ConfigError(f"kind '{kind}' needs at least one mesh size", {"field": "mesh_sizes"})
    if any(h <= 0.0 for h in mesh_sizes):
        raise ConfigError("mesh sizes must be positive", {"field": "mesh_sizes"})
    if kind == "convergence":
        if len(mesh_sizes) < 2 or any(b >= a for a, b in zip(mesh_sizes, mesh_sizes[1:])):
            raise ConfigError("convergence mesh sizes must be strictly decreasing (at least two)",
                              {"field": "mesh_sizes"})

    options = _plain(data.get("options", {}))
    if kind == "oracle" and options.get("oracle") not in ORACLES:
        raise ConfigError(f"unknown oracle '{options.get('oracle')}'", {"field": "options.oracle"})
    try:
        seed = int(data.get("seed", 0))
    except (TypeError, ValueError) as error:
        raise ConfigError("seed must be an integer", {"field": "seed"}) from error

    return ExperimentConfig(
        kind=kind,
        name=name,
        domain=domain,
        coefficient=coefficient,
        datum=datum,
        mesh_sizes=mesh_sizes,
        output_dir=Path(data.get("output_dir", Path(default_output) / name)),
        seed=seed,
        options=options,
        acceptance=_plain(data.get("acceptance", {})),
    )


def load_experiment(path: Union[str, Path]) -> ExperimentConfig:
    """Parse an experiment JSON file; syntax errors report line and column."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as error:
        raise ConfigError(f"cannot read {path}: {error.strerror}", {"field": "path", "path": str(path)}) from error
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise ConfigError(
            f"{path}: invalid JSON at line {error.lineno}, column {error.colno}: {error.msg}",
            {"line": error.lineno, "column": error.colno},
        ) from error
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object", {"field": ""})
    return validate_experiment(data)
