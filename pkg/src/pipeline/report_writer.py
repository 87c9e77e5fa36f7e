import csv
import io
import json
import math
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import numpy as np

from src.config.config_loader import config
from src.config.log_config import logger
from src.pipeline.parallel_sweep import resolve_worker_count
from src.utils.utils import atomic_write_text


def _clean(value: Any, digits: int) -> Any:
    """JSON-ready copy: numpy scalars and arrays unwrapped, floats rounded, non-finite floats as strings."""
    if isinstance(value, dict):
        return {str(key): _clean(item, digits) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(item, digits) for item in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist(), digits)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return str(value)
        return float(f"{value:.{digits}g}")
    if isinstance(value, Path):
        return str(value)
    return value


def format_report(report: Dict[str, Any]) -> str:
    """Sorted, rounded JSON: identical inputs give byte-identical text."""
    cleaned = _clean(report, int(config.runner.float_digits))
    return json.dumps(cleaned, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_report(output_dir: Path, report: Dict[str, Any]) -> Path:
    path = Path(output_dir) / config.runner.report_name
    atomic_write_text(path, format_report(report))
    logger.info("Report written to %s", path)
    return path


def write_metadata(output_dir: Path, experiment_name: str, num_workers: Optional[int] = None,
                   elapsed_seconds: Optional[float] = None) -> Path:
    """Run-dependent facts kept out of the report so reruns compare byte for byte."""
    threads_env = config.parallel.threads_env_var
    metadata = {
        "experiment": experiment_name,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "elapsed_seconds": elapsed_seconds,
        "workers": resolve_worker_count(num_workers),
        threads_env: os.environ.get(threads_env),
    }
    path = Path(output_dir) / config.runner.metadata_name
    atomic_write_text(path, json.dumps(_clean(metadata, 12), indent=2, sort_keys=True) + "\n")
    return path


def write_csv(output_dir: Path, name: str, header: Sequence[str], rows: np.ndarray) -> Path:
    """Atomic CSV dump of a numeric table."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    digits = int(config.runner.float_digits)
    for row in np.asarray(rows):
        writer.writerow([f"{float(item):.{digits}g}" for item in row])
    path = Path(output_dir) / name
    atomic_write_text(path, buffer.getvalue())
    logger.info("Wrote %s rows to %s", len(rows), path)
    return path
