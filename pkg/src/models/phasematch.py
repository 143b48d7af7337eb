"""
Birefringent phase matching of spontaneous four-wave mixing.

Two pump photons on the slow axis (index n + Δn) create a signal/idler pair
on the fast axis. Energy conservation is built into the parametrisation
ω_s = ω_p + Ω, ω_i = ω_p − Ω, so only the momentum mismatch

    Δk(Ω) = 2[n(ω_p) + Δn]ω_p/c − n(ω_s)ω_s/c − n(ω_i)ω_i/c

is ever solved for.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.constants import c
from scipy.optimize import brentq

from src.data_handlers.coefficient_loader import load_default_sellmeier
from src.models.dispersion import (
    TWO_PI_C,
    angular_frequency_to_wavelength,
    index_at_angular_frequency,
    wavelength_to_angular_frequency,
)
from src.utils.config import (
    BRACKET_STEP_M,
    DELTA_N,
    LENGTH_M,
    MAX_BRACKET_STEPS,
    PUMP_WAVELENGTH_M,
    ROOT_TOLERANCE_K,
    SPECTROMETER_RESOLUTION_M,
)
from src.utils.errors import (
    DegenerateOnlyError,
    DomainError,
    InconsistentInputError,
    NoSolutionError,
    NumericalError,
    PhotonPairError,
)
from src.utils.validators import require, validate_non_negative, validate_positive, validate_range

logger = logging.getLogger(__name__)

SCAN_COLUMNS = ["eta", "lambda_s_plus_nm", "lambda_s_minus_nm", "lambda_i_plus_nm", "lambda_i_minus_nm"]


@dataclass(frozen=True)
class WaveguideSpec:
    """Physical parameters of one source waveguide."""

    delta_n: float = DELTA_N
    length: float = LENGTH_M
    pump_wavelength: float = PUMP_WAVELENGTH_M
    label: str = "wg"
    fabrication_meta: dict = field(default_factory=dict, compare=False, hash=False)
    material: object = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        require(validate_non_negative("delta_n", self.delta_n))
        require(validate_positive("length", self.length))
        require(validate_positive("pump_wavelength", self.pump_wavelength))
        if self.material is None:
            object.__setattr__(self, "material", load_default_sellmeier())
        low, high = self.material.valid_range
        require(validate_range("pump_wavelength_um", self.pump_wavelength * 1e6, low, high,
                               include_low=False, include_high=False))

    @property
    def omega_p(self):
        return wavelength_to_angular_frequency(self.pump_wavelength)

    def with_delta_n(self, delta_n, label=None):
        return replace(self, delta_n=delta_n, label=self.label if label is None else label)

    def perturbed(self, eta, label=None):
        """Copy with Δn' = Δn(1 + η)."""
        return self.with_delta_n(self.delta_n * (1.0 + eta), label=label)

    def omega_limits(self):
        """Largest detuning keeping both ω_p ± Ω inside the dispersion range."""
        low, high = self.material.valid_range
        omega_hi = wavelength_to_angular_frequency(low * 1e-6)
        omega_lo = wavelength_to_angular_frequency(high * 1e-6)
        return min(omega_hi - self.omega_p, self.omega_p - omega_lo)


@dataclass(frozen=True)
class PhaseMatchSolution:
    omega_p: float
    omega_s: float
    omega_i: float
    lambda_s: float
    lambda_i: float
    detuning: float
    residual_k: float

    @property
    def lambda_p(self):
        return angular_frequency_to_wavelength(self.omega_p)

    def as_dict(self):
        return {
            "lambda_p_nm": self.lambda_p * 1e9,
            "lambda_s_nm": self.lambda_s * 1e9,
            "lambda_i_nm": self.lambda_i * 1e9,
            "omega_s_rad_s": self.omega_s,
            "omega_i_rad_s": self.omega_i,
            "detuning_rad_s": self.detuning,
            "residual_k_per_m": self.residual_k,
        }


def phase_mismatch(spec, detuning):
    """
    Momentum mismatch at a symmetric detuning Ω from the pump.

    Args:
        spec (WaveguideSpec): The waveguide
        detuning (float or ndarray): Ω in rad/s

    Returns:
        float or ndarray: Δk in 1/m

    Raises:
        DomainError: ω_p ± Ω outside the dispersion range
    """
    omega_p = spec.omega_p
    omega_s = omega_p + detuning
    omega_i = omega_p - detuning
    n_p = index_at_angular_frequency(spec.material, omega_p)
    n_s = index_at_angular_frequency(spec.material, omega_s)
    n_i = index_at_angular_frequency(spec.material, omega_i)
    return (2.0 * (n_p + spec.delta_n) * omega_p - n_s * omega_s - n_i * omega_i) / c


def joint_phase_mismatch(spec, omega_s, omega_i):
    """
    Momentum mismatch for independent signal and idler frequencies.

    Both pump photons are taken at the mean frequency (ω_s + ω_i)/2, which
    reduces to `phase_mismatch` on the energy-conservation line.
    """
    omega_bar = 0.5 * (omega_s + omega_i)
    k_pump = (index_at_angular_frequency(spec.material, omega_bar) + spec.delta_n) * omega_bar
    k_s = index_at_angular_frequency(spec.material, omega_s) * omega_s
    k_i = index_at_angular_frequency(spec.material, omega_i) * omega_i
    return (2.0 * k_pump - k_s - k_i) / c


def _bracket_root(spec):
    step = TWO_PI_C * BRACKET_STEP_M / spec.pump_wavelength ** 2
    limit = spec.omega_limits() * (1.0 - 1e-9)
    n_steps = min(int(limit // step), MAX_BRACKET_STEPS)
    if n_steps < 1:
        raise NoSolutionError("pump too close to the dispersion range edge to bracket a root")
    grid = step * np.arange(1, n_steps + 1)
    mismatch = phase_mismatch(spec, grid)
    flipped = np.nonzero(mismatch <= 0.0)[0]
    if flipped.size == 0:
        ends = (float(phase_mismatch(spec, 0.0)), float(mismatch[-1]))
        raise NoSolutionError(
            f"no sign change of phase mismatch for Ω in (0, {grid[-1]:.4g}] rad/s; "
            f"Δk at bracket ends = {ends[0]:.4g}, {ends[1]:.4g} 1/m",
            bracket=(0.0, float(grid[-1])),
            mismatch=ends,
        )
    k = flipped[0]
    low = grid[k - 1] if k > 0 else 0.0
    return low, grid[k]


def solve_phase_matching(spec):
    """
    Solve Δk(Ω) = 0 for the nondegenerate signal/idler pair.

    Args:
        spec (WaveguideSpec): The waveguide (Δn > 0)

    Returns:
        PhaseMatchSolution: The unique root with Ω > 0

    Raises:
        DegenerateOnlyError: Δn = 0
        NoSolutionError: Δk keeps its sign over the whole search range
    """
    if spec.delta_n == 0:
        raise DegenerateOnlyError("delta_n = 0 admits only the degenerate root Ω = 0")
    low, high = _bracket_root(spec)
    logger.debug("phase-matching root bracketed in [%.6g, %.6g] rad/s for %s", low, high, spec.label)
    if phase_mismatch(spec, high) == 0.0:
        detuning = high
    else:
        detuning = brentq(lambda w: phase_mismatch(spec, w), low, high, xtol=1e-6, rtol=1e-15, maxiter=200)
    residual = float(phase_mismatch(spec, detuning))
    if abs(residual) > ROOT_TOLERANCE_K:
        raise NumericalError(
            f"root residual {residual:.3g} 1/m exceeds tolerance {ROOT_TOLERANCE_K}",
            diagnostics={"detuning": detuning, "bracket": (low, high)},
        )
    omega_p = spec.omega_p
    omega_s = omega_p + detuning
    omega_i = omega_p - detuning
    return PhaseMatchSolution(
        omega_p=omega_p,
        omega_s=omega_s,
        omega_i=omega_i,
        lambda_s=angular_frequency_to_wavelength(omega_s),
        lambda_i=angular_frequency_to_wavelength(omega_i),
        detuning=float(detuning),
        residual_k=residual,
    )


def _scan_point(spec, eta):
    row = {"eta": eta}
    try:
        require(validate_range("eta", eta, 0.0, 0.5, include_high=False))
        plus = solve_phase_matching(spec.perturbed(eta))
        minus = solve_phase_matching(spec.perturbed(-eta))
    except PhotonPairError as exc:
        logger.warning("perturbation scan point eta=%g failed: %s", eta, exc)
        row.update({col: np.nan for col in SCAN_COLUMNS[1:]})
        row["error"] = str(exc)
        return row
    row.update({
        "lambda_s_plus_nm": plus.lambda_s * 1e9,
        "lambda_s_minus_nm": minus.lambda_s * 1e9,
        "lambda_i_plus_nm": plus.lambda_i * 1e9,
        "lambda_i_minus_nm": minus.lambda_i * 1e9,
        "error": "",
    })
    return row


def perturbation_scan(spec, eta_grid, workers=1):
    """
    Phase-matched wavelengths under Δn' = Δn(1 ± η).

    Failed grid points are kept with NaN wavelengths and a message in the
    `error` column.

    Args:
        spec (WaveguideSpec): Unperturbed waveguide
        eta_grid (list): Perturbations in [0, 0.5)
        workers (int): Threads used to evaluate grid points

    Returns:
        DataFrame: One row per η, ordered as eta_grid
    """
    etas = [float(e) for e in eta_grid]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda e: _scan_point(spec, e), etas))
    else:
        rows = [_scan_point(spec, e) for e in etas]
    return pd.DataFrame(rows, columns=SCAN_COLUMNS + ["error"])


def max_fluctuation_nm(scan, eta):
    """Largest shift (nm) of either arm from the unperturbed wavelengths at a given η."""
    row = scan.loc[np.isclose(scan["eta"], eta)]
    if row.empty:
        raise DomainError(f"eta={eta} not in scan")
    base = scan.loc[np.isclose(scan["eta"], 0.0)]
    if base.empty:
        raise DomainError("scan lacks the unperturbed eta=0 point")
    row, base = row.iloc[0], base.iloc[0]
    shifts = [
        abs(row["lambda_s_plus_nm"] - base["lambda_s_plus_nm"]),
        abs(row["lambda_s_minus_nm"] - base["lambda_s_minus_nm"]),
        abs(row["lambda_i_plus_nm"] - base["lambda_i_plus_nm"]),
        abs(row["lambda_i_minus_nm"] - base["lambda_i_minus_nm"]),
    ]
    return float(max(shifts))


def infer_birefringence(lambda_p, lambda_s, lambda_i, material=None, resolution=SPECTROMETER_RESOLUTION_M):
    """
    Birefringence implied by a measured pump/signal/idler triple.

    Each measured wavelength carries ±resolution, so the pair may miss exact
    energy conservation by up to 2πc·res·(2/λ_p² + 1/λ_s² + 1/λ_i²). The pair
    is projected onto the conservation line with Ω = (ω_s − ω_i)/2 before the
    closed-form inversion of Δk = 0.

    Args:
        lambda_p, lambda_s, lambda_i (float): Wavelengths in meters
        material (SellmeierModel): Dispersion model, default fused silica
        resolution (float): Wavelength resolution in meters

    Returns:
        float: Δn

    Raises:
        InconsistentInputError: ordering or energy conservation violated
    """
    material = material or load_default_sellmeier()
    if not lambda_s <= lambda_p <= lambda_i:
        raise InconsistentInputError(
            f"expected lambda_s <= lambda_p <= lambda_i, got {lambda_s}, {lambda_p}, {lambda_i}"
        )
    omega_p = wavelength_to_angular_frequency(lambda_p)
    omega_s = wavelength_to_angular_frequency(lambda_s)
    omega_i = wavelength_to_angular_frequency(lambda_i)
    mismatch = abs(2.0 * omega_p - omega_s - omega_i)
    allowed = TWO_PI_C * resolution * (2.0 / lambda_p ** 2 + 1.0 / lambda_s ** 2 + 1.0 / lambda_i ** 2)
    if mismatch > allowed:
        raise InconsistentInputError(
            f"energy conservation violated by {mismatch:.4g} rad/s (allowed {allowed:.4g} rad/s)"
        )
    detuning = 0.5 * (omega_s - omega_i)
    omega_s = omega_p + detuning
    omega_i = omega_p - detuning
    n_p = index_at_angular_frequency(material, omega_p)
    n_s = index_at_angular_frequency(material, omega_s)
    n_i = index_at_angular_frequency(material, omega_i)
    return float((n_s * omega_s + n_i * omega_i - 2.0 * n_p * omega_p) / (2.0 * omega_p))


def wavelength_sensitivity(spec, eta=1e-3):
    """Central-difference derivatives (dλ_s/dη, dλ_i/dη) in meters per unit η."""
    plus = solve_phase_matching(spec.perturbed(eta))
    minus = solve_phase_matching(spec.perturbed(-eta))
    return (plus.lambda_s - minus.lambda_s) / (2 * eta), (plus.lambda_i - minus.lambda_i) / (2 * eta)
