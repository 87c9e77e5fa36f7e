from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from src.config.config_loader import config
from src.utils.errors import EllipticityViolation

ComplexValues = Union[complex, np.ndarray]


@dataclass(frozen=True, eq=False)
class BeltramiPair:
    """Complex dilatations of f_z̄ = μ f_z + ν conj(f_z), at one point or per point."""

    mu: ComplexValues
    nu: ComplexValues

    @property
    def total(self) -> ComplexValues:
        return np.abs(self.mu) + np.abs(self.nu)


def dilatation_bound(K: float) -> float:
    return (K - 1.0) / (K + 1.0)


def beltrami_dilatations(sigma: np.ndarray, K: Optional[float] = None) -> BeltramiPair:
    """
    μ = (σ22 - σ11 - i(σ12 + σ21)) / (1 + Tr σ + det σ),
    ν = (1 - det σ + i(σ12 - σ21)) / (1 + Tr σ + det σ).
    Accepts one 2×2 matrix or a stack (..., 2, 2). With K given, the bound
    |μ| + |ν| ≤ (K-1)/(K+1) is enforced.
    """
    sigma = np.asarray(sigma, dtype=float)
    s11, s12, s21, s22 = sigma[..., 0, 0], sigma[..., 0, 1], sigma[..., 1, 0], sigma[..., 1, 1]
    determinant = s11 * s22 - s12 * s21
    denominator = 1.0 + s11 + s22 + determinant
    if np.any(denominator <= 0.0):
        raise EllipticityViolation("1 + Tr sigma + det sigma must be positive")
    mu = (s22 - s11 - 1j * (s12 + s21)) / denominator
    nu = (1.0 - determinant + 1j * (s12 - s21)) / denominator
    if sigma.ndim == 2:
        mu, nu = complex(mu), complex(nu)
    pair = BeltramiPair(mu, nu)

    if K is not None:
        total = np.max(pair.total)
        if total > dilatation_bound(K) + config.coefficients.dilatation_slack:
            raise EllipticityViolation(
                f"|mu|+|nu| = {total:.15f} exceeds (K-1)/(K+1) = {dilatation_bound(K):.15f}",
                {"total": float(total), "K": K},
            )
    return pair


def inverse_beltrami(pair: BeltramiPair) -> BeltramiPair:
    """
    Dilatations of the inverse map g = f⁻¹, which solves
    g_w̄ = -ν(g) g_w - μ(g) conj(g_w); the values are to be read at g(w).
    """
    return BeltramiPair(-pair.nu, -pair.mu)
