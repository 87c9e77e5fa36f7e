from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from src.config.config_loader import config
from src.config.log_config import logger
from src.jacobian.jacobian_lab import JacobianReport
from src.utils.errors import InsufficientBins


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    r_squared: float
    prefactor: float
    bin_radii: Tuple[float, ...]
    bin_medians: Tuple[float, ...]

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "r_squared": self.r_squared, "prefactor": self.prefactor,
                "bins": len(self.bin_radii)}


def fit_degeneration_rate(
        report: JacobianReport,
        center: Sequence[float] = (0.0, 0.0),
        radii: Tuple[float, float] = (0.2, 0.8),
        n_bins: Optional[int] = None,
) -> PowerLawFit:
    """
    Least-squares slope of log(median det per radial bin) against log(median radius).
    Bins with too few elements or a non-positive median are dropped.
    """
    n_bins = n_bins or config.jacobian.n_bins
    radius = np.linalg.norm(report.centroids - np.asarray(center, dtype=float), axis=1)
    edges = np.linspace(radii[0], radii[1], n_bins + 1)
    bin_of = np.digitize(radius, edges) - 1

    radii_kept, medians = [], []
    for index in range(n_bins):
        members = bin_of == index
        if np.count_nonzero(members) < config.jacobian.min_bin_count:
            continue
        median_det = float(np.median(report.determinants[members]))
        if median_det <= 0.0:
            continue
        radii_kept.append(float(np.median(radius[members])))
        medians.append(median_det)

    if len(medians) < config.jacobian.min_bins:
        raise InsufficientBins(
            f"only {len(medians)} usable radial bins (need {config.jacobian.min_bins})",
            {"bins": len(medians), "window": list(radii)},
        )

    log_r, log_det = np.log(radii_kept), np.log(medians)
    slope, intercept = np.polyfit(log_r, log_det, 1)
    predicted = slope * log_r + intercept
    total = float(np.sum((log_det - log_det.mean()) ** 2))
    r_squared = 1.0 - float(np.sum((log_det - predicted) ** 2)) / total if total > 0.0 else 1.0

    fit = PowerLawFit(float(slope), r_squared, float(np.exp(intercept)), tuple(radii_kept), tuple(medians))
    logger.info("Degeneration rate: exponent %.4f (r^2 %.4f) over %s bins", fit.exponent, r_squared, len(medians))
    return fit


def with_powerlaw(report: JacobianReport, fit: PowerLawFit) -> JacobianReport:
    return replace(report, powerlaw_fit=(fit.exponent, fit.r_squared))
