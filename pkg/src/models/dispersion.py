"""
Material dispersion of the chip substrate.

The refractive index follows a Sellmeier sum

    n(λ)² = 1 + Σ_k B_k λ² / (λ² − C_k²)

with λ and C_k in micrometers. Every function accepts scalars or numpy arrays.
The bridge between wavelength and angular frequency is λ = 2πc/ω.
"""

from dataclasses import dataclass

import numpy as np
from scipy.constants import c

from src.utils.errors import DomainError, SingularityError

TWO_PI_C = 2.0 * np.pi * c


@dataclass(frozen=True)
class SellmeierModel:
    """Sellmeier coefficients and the wavelength band where they hold.

    terms: tuple of (B_k, C_k) pairs, C_k in micrometers
    valid_range: (λ_min, λ_max) in micrometers
    """

    terms: tuple
    valid_range: tuple
    name: str = "custom"

    def __post_init__(self):
        if not self.terms:
            raise DomainError("Sellmeier model needs at least one term")
        for b, c_k in self.terms:
            if not (b > 0 and c_k > 0):
                raise DomainError(f"Sellmeier terms must be positive, got B={b}, C={c_k}")
        low, high = self.valid_range
        if not 0 < low < high:
            raise DomainError(f"invalid Sellmeier range {self.valid_range}")

    @property
    def strengths(self):
        return np.array([t[0] for t in self.terms], dtype=float)

    @property
    def resonances(self):
        return np.array([t[1] for t in self.terms], dtype=float)


def wavelength_to_angular_frequency(wavelength):
    """Vacuum wavelength (m) to angular frequency (rad/s)."""
    return TWO_PI_C / wavelength


def angular_frequency_to_wavelength(omega):
    """Angular frequency (rad/s) to vacuum wavelength (m)."""
    return TWO_PI_C / omega


def _check_domain(model, wavelength_um):
    lam = np.asarray(wavelength_um, dtype=float)
    low, high = model.valid_range
    inside = np.isfinite(lam) & (lam > low) & (lam < high)
    if not np.all(inside):
        bad = np.atleast_1d(lam)[~np.atleast_1d(inside)][0]
        raise DomainError(f"wavelength {bad:.6g} um outside Sellmeier range ({low}, {high}) um")
    lam2 = lam[..., None] ** 2
    if np.any(lam2 == model.resonances ** 2):
        raise SingularityError(f"wavelength hits a Sellmeier resonance of model {model.name}")
    return lam


def refractive_index(model, wavelength_um):
    """
    Refractive index at a vacuum wavelength.

    Args:
        model (SellmeierModel): The dispersion model
        wavelength_um (float or ndarray): Wavelength in micrometers

    Returns:
        float or ndarray: Dimensionless index

    Raises:
        DomainError: wavelength outside the model's valid range
        SingularityError: wavelength on a resonance
    """
    lam = _check_domain(model, wavelength_um)
    lam2 = lam[..., None] ** 2
    n2 = 1.0 + np.sum(model.strengths * lam2 / (lam2 - model.resonances ** 2), axis=-1)
    n = np.sqrt(n2)
    return float(n) if np.ndim(n) == 0 else n


def index_at_angular_frequency(model, omega):
    """
    Refractive index at an angular frequency, through λ = 2πc/ω.

    Args:
        model (SellmeierModel): The dispersion model
        omega (float or ndarray): Angular frequency in rad/s

    Returns:
        float or ndarray: Dimensionless index
    """
    return refractive_index(model, angular_frequency_to_wavelength(omega) * 1e6)


def group_index(model, wavelength_um):
    """Group index n − λ dn/dλ from the analytic derivative of the Sellmeier sum."""
    lam = _check_domain(model, wavelength_um)
    lam_b = lam[..., None]
    denom = lam_b ** 2 - model.resonances ** 2
    n = np.sqrt(1.0 + np.sum(model.strengths * lam_b ** 2 / denom, axis=-1))
    dn2 = np.sum(-2.0 * model.strengths * lam_b * model.resonances ** 2 / denom ** 2, axis=-1)
    ng = n - lam * dn2 / (2.0 * n)
    return float(ng) if np.ndim(ng) == 0 else ng


def wavenumber(model, omega):
    """Propagation constant k = n(ω)ω/c in 1/m."""
    return index_at_angular_frequency(model, omega) * omega / c
