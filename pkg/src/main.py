import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from src.characters.boundary_datum import identity_datum
from src.characters.convexity_certifier import certify_convex, curvature_character
from src.config.log_config import logger
from src.geometry.mesh_io import write_mesh
from src.geometry.triangulator import triangulate
from src.pipeline.canned_experiments import CANNED_EXPERIMENTS, canned_experiment, list_canned
from src.pipeline.experiment_config import ExperimentConfig, load_experiment
from src.pipeline.experiment_runner import build_domain, failure_outcome, run_experiment
from src.pipeline.report_writer import format_report, write_csv, write_metadata, write_report
from src.utils.errors import ConfigError, LabError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2


def _resolve_experiment(target: str, output: Optional[str]) -> ExperimentConfig:
    """A path to an experiment JSON file, or the name of a canned experiment."""
    path = Path(target)
    if path.suffix == ".json" or path.exists():
        experiment = load_experiment(path)
        if output is not None:
            experiment = replace(experiment, output_dir=Path(output) / experiment.name)
        return experiment
    return canned_experiment(target, output if output is not None else "output")


def _read_json(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as error:
        raise ConfigError(f"cannot read {path}: {error.strerror}", {"path": path}) from error
    except json.JSONDecodeError as error:
        raise ConfigError(f"{path}: invalid JSON at line {error.lineno}, column {error.colno}: {error.msg}",
                          {"line": error.lineno, "column": error.colno}) from error
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


# ============================================================
# Sub-commands
# ============================================================

def command_run(args: argparse.Namespace) -> int:
    experiment = _resolve_experiment(args.target, args.output)
    start_time = time.perf_counter()
    try:
        outcome = run_experiment(experiment, num_workers=args.threads)
    except ConfigError:
        raise
    except LabError as error:
        logger.error("Experiment '%s' stopped on %s: %s", experiment.name, type(error).__name__, error)
        outcome = failure_outcome(experiment, error)

    output_dir = experiment.output_dir
    write_report(output_dir, outcome.report(experiment))
    for name, (header, rows) in outcome.tables.items():
        if rows is not None:
            write_csv(output_dir, name, header, rows)
    write_metadata(output_dir, experiment.name, args.threads, time.perf_counter() - start_time)

    failed = sorted(key for key, passed in outcome.checks.items() if not passed)
    if failed:
        print(f"{experiment.name}: FAILED {', '.join(failed)} (report in {output_dir})")
        return EXIT_INVARIANT
    print(f"{experiment.name}: passed {len(outcome.checks)} checks (report in {output_dir})")
    return EXIT_OK


def command_list(args: argparse.Namespace) -> int:
    for name in list_canned():
        print(f"{name:<28}{CANNED_EXPERIMENTS[name]['kind']}")
    return EXIT_OK


def command_mesh(args: argparse.Namespace) -> int:
    domain = build_domain(_read_json(args.domain))
    mesh = triangulate(domain, args.h)
    write_mesh(mesh, args.output)
    print(f"{mesh.n_nodes} nodes, {mesh.n_triangles} triangles, h = {mesh.h:.6g} -> {args.output}")
    return EXIT_OK


def command_character(args: argparse.Namespace) -> int:
    domain = build_domain(_read_json(args.curve))
    report = {"domain": domain.description, "length": domain.boundary.total_length}
    status = EXIT_OK
    try:
        report["predicted"] = curvature_character(domain.boundary).to_dict()
    except LabError as error:
        report["predicted"] = {"error": type(error).__name__, "message": str(error), "report": error.report}
        status = EXIT_INVARIANT
    try:
        report["measured"] = certify_convex(identity_datum(domain.boundary), num_workers=args.threads).to_dict()
    except LabError as error:
        report["measured"] = {"error": type(error).__name__, "message": str(error), "report": error.report}
        status = EXIT_INVARIANT
    sys.stdout.write(format_report(report))
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lab", description="σ-harmonic mapping numerical laboratory.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="Run an experiment config or a canned experiment")
    run_parser.add_argument("target", help="Path to an experiment JSON file or a canned experiment name")
    run_parser.add_argument("--output", default=None, help="Root directory for reports (default: output/)")
    run_parser.add_argument("--threads", type=int, default=None, help="Worker count (capped by LAB_THREADS)")
    run_parser.set_defaults(handler=command_run)

    list_parser = subparsers.add_parser("list", help="List the canned experiments")
    list_parser.set_defaults(handler=command_list)

    mesh_parser = subparsers.add_parser("mesh", help="Triangulate a domain and write the mesh file")
    mesh_parser.add_argument("domain", help="Domain JSON, e.g. {\"shape\": \"disk\", \"n_boundary\": 256}")
    mesh_parser.add_argument("--h", type=float, required=True, help="Target mesh size")
    mesh_parser.add_argument("-o", "--output", default="mesh.txt", help="Mesh file to write")
    mesh_parser.set_defaults(handler=command_mesh)

    character_parser = subparsers.add_parser("character", help="Curvature and measured convexity characters")
    character_parser.add_argument("curve", help="Domain JSON describing the boundary curve")
    character_parser.add_argument("--threads", type=int, default=None, help="Worker count for the direction sweep")
    character_parser.set_defaults(handler=command_character)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point of the `lab` command line; returns the process exit status."""
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as error:
        logger.error("Configuration error: %s", error)
        print(f"error: {error}", file=sys.stderr)
        return EXIT_CONFIG
    except LabError as error:
        logger.error("%s: %s", type(error).__name__, error)
        print(f"error: {type(error).__name__}: {error}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
