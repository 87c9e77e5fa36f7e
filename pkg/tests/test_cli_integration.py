import json

import pytest

from src.config.log_config import setup_test_logger
from src.geometry.mesh_io import read_mesh
from src.main import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, main
from src.pipeline.canned_experiments import list_canned

logger = setup_test_logger()


def _write_json(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def test_run_canned_identity(tmp_output_dir, capsys):
    status = main(["run", "identity", "--output", str(tmp_output_dir), "--threads", "1"])
    run_dir = tmp_output_dir / "identity"
    report = json.loads((run_dir / "report.json").read_text(encoding="utf-8"))
    logger.info(f"Identity report checks: {report['checks']}")

    assert status == EXIT_OK
    assert report["passed"] is True
    assert report["experiment"]["name"] == "identity"
    assert (run_dir / "jacobian.csv").exists()
    assert json.loads((run_dir / "metadata.json").read_text(encoding="utf-8"))["workers"] == 1
    assert "identity: passed" in capsys.readouterr().out


def test_rerun_report_is_byte_identical(tmp_output_dir):
    assert main(["run", "wood-demo", "--output", str(tmp_output_dir / "first")]) == EXIT_OK
    assert main(["run", "wood-demo", "--output", str(tmp_output_dir / "second")]) == EXIT_OK
    first = (tmp_output_dir / "first" / "wood-demo" / "report.json").read_bytes()
    second = (tmp_output_dir / "second" / "wood-demo" / "report.json").read_bytes()
    assert first == second


def test_failed_check_exits_with_invariant_status(tmp_path, tmp_output_dir):
    config_path = _write_json(tmp_path / "strict.json", {
        "kind": "jacobian",
        "name": "strict-identity",
        "domain": {"shape": "disk", "n_boundary": 128},
        "coefficient": {"family": "constant", "matrix": [[1.0, 0.0], [0.0, 1.0]]},
        "datum": {"type": "identity"},
        "mesh_sizes": [0.2],
        "acceptance": {"det_equals_one": -1.0},
    })
    status = main(["run", config_path, "--output", str(tmp_output_dir)])
    report = json.loads((tmp_output_dir / "strict-identity" / "report.json").read_text(encoding="utf-8"))

    assert status == EXIT_INVARIANT
    assert report["passed"] is False
    assert report["checks"] == {"det_equals_one": False}


def test_unknown_experiment_is_config_error(tmp_output_dir, capsys):
    assert main(["run", "no-such-experiment", "--output", str(tmp_output_dir)]) == EXIT_CONFIG
    assert "unknown canned experiment" in capsys.readouterr().err
    assert list(tmp_output_dir.iterdir()) == []


def test_malformed_config_leaves_no_output(tmp_path, tmp_output_dir):
    broken = tmp_path / "broken.json"
    broken.write_text('{"kind": "solve", "mesh_sizes": [0.1', encoding="utf-8")
    assert main(["run", str(broken), "--output", str(tmp_output_dir)]) == EXIT_CONFIG
    assert list(tmp_output_dir.iterdir()) == []


def test_list_prints_catalog(capsys):
    assert main(["list"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 15
    assert lines[0].split() == ["identity", "jacobian"]


def test_mesh_command_writes_readable_mesh(tmp_path, capsys):
    domain_path = _write_json(tmp_path / "disk.json", {"shape": "disk", "n_boundary": 128})
    mesh_path = tmp_path / "disk.mesh"
    assert main(["mesh", domain_path, "--h", "0.2", "-o", str(mesh_path)]) == EXIT_OK

    mesh = read_mesh(mesh_path)
    logger.info(f"CLI mesh: {capsys.readouterr().out.strip()}")
    assert mesh.n_triangles > 0
    assert mesh.h <= 0.2 * 1.5


def test_character_command(tmp_path, capsys):
    ellipse_path = _write_json(tmp_path / "ellipse.json", {"shape": "ellipse", "a": 2.0, "b": 1.0})
    assert main(["character", ellipse_path, "--threads", "2"]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["predicted"]["D"] == pytest.approx(0.5, rel=1e-6)
    assert report["measured"]["D"] >= 0.5 - 1e-9


def test_character_command_on_nonconvex_star(tmp_path, capsys):
    """ρ = 1 + 0.3cos3θ bends inward at its three minima."""
    star_path = _write_json(tmp_path / "star.json", {"shape": "star", "modes": [[3, 0.3, 0.0]]})
    assert main(["character", star_path]) == EXIT_INVARIANT
    report = json.loads(capsys.readouterr().out)
    assert report["predicted"]["error"] == "NotStrictlyConvex"


@pytest.mark.parametrize("name", list_canned())
def test_every_canned_experiment_exits_ok(name, tmp_output_dir):
    status = main(["run", name, "--output", str(tmp_output_dir), "--threads", "2"])
    report = json.loads((tmp_output_dir / name / "report.json").read_text(encoding="utf-8"))
    logger.info(f"{name}: exit {status}, checks {report['checks']}")

    assert status == EXIT_OK
    assert report["passed"] is True
    assert report["checks"]
