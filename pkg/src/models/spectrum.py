"""
Joint spectral amplitude of one source and its single-photon marginals.

    f(ω_s, ω_i) = α(ω_s + ω_i) · sinc(Δk(ω_s, ω_i) L / 2)

α is the sum-frequency envelope of a Gaussian pump pulse: two pump photons
are annihilated, so α is the autoconvolution of the pump spectral amplitude
and is √2 wider than it. All frequency grids are uniform in angular frequency;
amplitudes are normalised so that Σ|f|² Δω_s Δω_i = 1.
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError, eigh, svd
from scipy.special import expit

from src.models.dispersion import TWO_PI_C, angular_frequency_to_wavelength, wavelength_to_angular_frequency
from src.models.phasematch import joint_phase_mismatch, solve_phase_matching
from src.utils.config import (
    BANDPASS_ORDER,
    DICHROIC_EDGE_M,
    EDGE_ORDER,
    GRID_SIZE,
    GRID_SPAN_BANDWIDTHS,
    MIN_GRID_SIZE,
    NARROW_BANDPASS_M,
    PUMP_FWHM_M,
    PUMP_WAVELENGTH_M,
    WIDE_BANDPASS_M,
)
from src.utils.errors import (
    AmbiguousPeakError,
    DomainError,
    FilteredToNothingError,
    GridTooSmallError,
    NumericalError,
)
from src.utils.validators import require, validate_integer_at_least, validate_positive

logger = logging.getLogger(__name__)

FILTER_KINDS = ("bandpass", "longpass", "shortpass")
BOUNDARY_FRACTION = 0.5
EDGE_WIDTH_M = 2e-9
SURVIVAL_FLOOR = 1e-9
FILTER_SPAN_FWHM = 1.2


@dataclass(frozen=True)
class PumpEnvelope:
    center_wavelength: float = PUMP_WAVELENGTH_M
    bandwidth_fwhm: float = PUMP_FWHM_M
    shape: str = "gaussian"

    def __post_init__(self):
        require(validate_positive("bandwidth_fwhm", self.bandwidth_fwhm))
        if self.shape != "gaussian":
            raise DomainError(f"unsupported pump shape {self.shape!r}")

    @property
    def omega_center(self):
        return wavelength_to_angular_frequency(self.center_wavelength)

    @property
    def omega_fwhm(self):
        """Intensity FWHM in angular frequency."""
        return TWO_PI_C * self.bandwidth_fwhm / self.center_wavelength ** 2

    @property
    def omega_sigma(self):
        """σ of the spectral amplitude exp(−(ω−ω_p)²/(2σ²))."""
        return self.omega_fwhm / (2.0 * math.sqrt(math.log(2.0)))

    def sum_envelope(self, omega_sum):
        """Two-photon pump envelope α(ω_s + ω_i), peak 1."""
        detuning = omega_sum - 2.0 * self.omega_center
        return np.exp(-detuning ** 2 / (4.0 * self.omega_sigma ** 2))


@dataclass(frozen=True)
class SpectralFilter:
    """Intensity filter defined in wavelength (meters).

    bandpass: super-Gaussian exp(−ln2 |2(λ−center)/fwhm|^(2·order))
    longpass/shortpass: logistic edge at `center`, fwhm is the edge width
    """

    center: float
    fwhm: float
    kind: str = "bandpass"
    order: int = BANDPASS_ORDER

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise DomainError(f"filter kind must be one of {FILTER_KINDS}, got {self.kind!r}")
        require(validate_positive("fwhm", self.fwhm))
        require(validate_integer_at_least("order", self.order, 1))

    def transmission(self, wavelength):
        x = (np.asarray(wavelength, dtype=float) - self.center) / self.fwhm
        if self.kind == "bandpass":
            return np.exp(-math.log(2.0) * np.abs(2.0 * x) ** (2 * self.order))
        if self.kind == "longpass":
            return expit(self.order * x)
        return expit(-self.order * x)


@dataclass(frozen=True)
class GridConfig:
    size_s: int = GRID_SIZE
    size_i: int = GRID_SIZE
    span_bandwidths: float = GRID_SPAN_BANDWIDTHS
    half_span: float = None
    center_s: float = None
    center_i: float = None

    def __post_init__(self):
        require(validate_integer_at_least("size_s", self.size_s, MIN_GRID_SIZE))
        require(validate_integer_at_least("size_i", self.size_i, MIN_GRID_SIZE))

    def refined(self, factor=2):
        return replace(self, size_s=self.size_s * factor, size_i=self.size_i * factor)


@dataclass(frozen=True, eq=False)
class JointSpectrum:
    omega_s: np.ndarray
    omega_i: np.ndarray
    amplitude: np.ndarray
    survival: float = 1.0
    label: str = ""

    def __post_init__(self):
        if self.amplitude.shape != (self.omega_s.size, self.omega_i.size):
            raise DomainError("amplitude shape does not match the frequency grids")
        if min(self.omega_s.size, self.omega_i.size) < MIN_GRID_SIZE:
            raise DomainError(f"joint spectrum grids need at least {MIN_GRID_SIZE} points per axis")

    @property
    def d_omega_s(self):
        return float(self.omega_s[1] - self.omega_s[0])

    @property
    def d_omega_i(self):
        return float(self.omega_i[1] - self.omega_i[0])

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.amplitude) ** 2) * self.d_omega_s * self.d_omega_i))

    def discrete(self):
        """Amplitude scaled by √(Δω_s Δω_i): a matrix with unit Frobenius norm."""
        return self.amplitude * math.sqrt(self.d_omega_s * self.d_omega_i)


def _normalised(js_amplitude, d_s, d_i):
    norm = math.sqrt(float(np.sum(np.abs(js_amplitude) ** 2)) * d_s * d_i)
    if norm == 0.0:
        raise FilteredToNothingError("joint spectrum is identically zero")
    return js_amplitude / norm


def frequency_grid(center, half_span, size):
    return np.linspace(center - half_span, center + half_span, size)


def phase_matching_function(spec, omega_s, omega_i):
    """sinc(Δk L / 2) on arbitrary (broadcastable) frequency arrays."""
    delta_k = joint_phase_mismatch(spec, omega_s, omega_i)
    return np.sinc(delta_k * spec.length / (2.0 * np.pi))


def default_half_span(spec, pump, solution, grid):
    """
    Grid half span: span_bandwidths pump FWHMs, widened to 1.5 times the
    detuning of the first sinc zero along the anti-diagonal when that is larger.
    """
    step = 1e-3 * pump.omega_fwhm
    slope = abs(
        joint_phase_mismatch(spec, solution.omega_s + step, solution.omega_i - step)
        - joint_phase_mismatch(spec, solution.omega_s - step, solution.omega_i + step)
    ) / (2.0 * step)
    span = grid.span_bandwidths * pump.omega_fwhm
    if slope > 0.0:
        span = max(span, 1.5 * 2.0 * np.pi / (slope * spec.length))
    return float(span)


def _raw_amplitude(spec, pump, omega_s, omega_i):
    oms, omi = np.meshgrid(omega_s, omega_i, indexing="ij")
    amplitude = pump.sum_envelope(oms + omi) * phase_matching_function(spec, oms, omi)
    return amplitude.astype(complex)


def _check_boundary(amplitude, description):
    peak = np.max(np.abs(amplitude))
    edge = max(
        np.max(np.abs(amplitude[0, :])), np.max(np.abs(amplitude[-1, :])),
        np.max(np.abs(amplitude[:, 0])), np.max(np.abs(amplitude[:, -1])),
    )
    if peak == 0.0 or edge >= BOUNDARY_FRACTION * peak:
        raise GridTooSmallError(
            f"joint spectrum leaves the grid: boundary |f| = {edge:.3g} vs peak {peak:.3g} ({description})"
        )


def _default_grids(spec, pump, grid):
    solution = None
    if grid.center_s is None or grid.center_i is None or grid.half_span is None:
        solution = solve_phase_matching(spec)
    center_s = grid.center_s if grid.center_s is not None else solution.omega_s
    center_i = grid.center_i if grid.center_i is not None else solution.omega_i
    half_span = grid.half_span if grid.half_span is not None else default_half_span(spec, pump, solution, grid)
    return (
        frequency_grid(center_s, half_span, grid.size_s),
        frequency_grid(center_i, half_span, grid.size_i),
        half_span,
    )


def build_jsa(spec, pump=None, grid=None, label=None):
    """
    Joint spectral amplitude of one waveguide.

    Args:
        spec (WaveguideSpec): The waveguide
        pump (PumpEnvelope): Pump pulse, default 2 nm FWHM at the waveguide's pump wavelength
        grid (GridConfig): Frequency grids, default centred on the phase-matched pair

    Returns:
        JointSpectrum: Normalised amplitude

    Raises:
        GridTooSmallError: the amplitude reaches the grid boundary
    """
    pump = pump or PumpEnvelope(center_wavelength=spec.pump_wavelength)
    grid = grid or GridConfig()
    omega_s, omega_i, half_span = _default_grids(spec, pump, grid)
    amplitude = _raw_amplitude(spec, pump, omega_s, omega_i)
    _check_boundary(amplitude, f"half span {half_span:.4g} rad/s, {grid.size_s}x{grid.size_i} points")
    return JointSpectrum(
        omega_s=omega_s,
        omega_i=omega_i,
        amplitude=_normalised(amplitude, omega_s[1] - omega_s[0], omega_i[1] - omega_i[0]),
        label=label if label is not None else spec.label,
    )


def chain_transmission(chain, omega):
    """Product of the intensity transmissions of a filter chain."""
    wavelength = angular_frequency_to_wavelength(omega)
    total = np.ones_like(omega, dtype=float)
    for spectral_filter in chain:
        total = total * spectral_filter.transmission(wavelength)
    return total


def apply_filters(js, signal_chain=(), idler_chain=()):
    """
    Pass the pair through per-arm filter chains.

    The amplitude is multiplied by √T on each axis and renormalised; the
    fraction of pairs surviving is accumulated in `survival`.

    Raises:
        FilteredToNothingError: less than 1e-9 of the pairs survive
    """
    t_s = np.sqrt(chain_transmission(signal_chain, js.omega_s))
    t_i = np.sqrt(chain_transmission(idler_chain, js.omega_i))
    filtered = js.amplitude * t_s[:, None] * t_i[None, :]
    kept = float(np.sum(np.abs(filtered) ** 2) * js.d_omega_s * js.d_omega_i)
    if kept < SURVIVAL_FLOOR:
        raise FilteredToNothingError(f"filters keep only {kept:.3g} of the joint spectrum")
    return replace(
        js,
        amplitude=filtered / math.sqrt(kept),
        survival=js.survival * kept,
    )


def _narrowest_bandpass(chain):
    bandpasses = [f for f in chain if f.kind == "bandpass"]
    return min(bandpasses, key=lambda f: f.fwhm) if bandpasses else None


def _filter_axis(chain, fallback, size):
    narrowest = _narrowest_bandpass(chain)
    if narrowest is None:
        return fallback
    center = wavelength_to_angular_frequency(narrowest.center)
    half_span = FILTER_SPAN_FWHM * TWO_PI_C * narrowest.fwhm / narrowest.center ** 2
    return frequency_grid(center, half_span, size)


def build_filtered_jsa(spec, pump=None, signal_chain=(), idler_chain=(), grid=None, label=None):
    """
    Joint spectrum behind the filters, sampled on grids fitted to the filters.

    An arm with a bandpass filter is sampled over ±FILTER_SPAN_FWHM widths of
    its narrowest bandpass, which resolves 1 nm filters that the full grid
    would cover with a handful of points. Survival is measured against the
    unfiltered spectrum on the default grid.

    Returns:
        JointSpectrum: Normalised filtered amplitude with its survival

    Raises:
        FilteredToNothingError: less than 1e-9 of the pairs survive
        GridTooSmallError: the filtered amplitude reaches the grid boundary
    """
    pump = pump or PumpEnvelope(center_wavelength=spec.pump_wavelength)
    grid = grid or GridConfig()
    label = label if label is not None else spec.label
    if _narrowest_bandpass(signal_chain) is None and _narrowest_bandpass(idler_chain) is None:
        return apply_filters(build_jsa(spec, pump, grid, label), signal_chain, idler_chain)

    full_s, full_i, half_span = _default_grids(spec, pump, grid)
    reference = _raw_amplitude(spec, pump, full_s, full_i)
    _check_boundary(reference, f"half span {half_span:.4g} rad/s")
    total = float(np.sum(np.abs(reference) ** 2)) * (full_s[1] - full_s[0]) * (full_i[1] - full_i[0])

    omega_s = _filter_axis(signal_chain, full_s, grid.size_s)
    omega_i = _filter_axis(idler_chain, full_i, grid.size_i)
    d_s = omega_s[1] - omega_s[0]
    d_i = omega_i[1] - omega_i[0]
    t_s = np.sqrt(chain_transmission(signal_chain, omega_s))
    t_i = np.sqrt(chain_transmission(idler_chain, omega_i))
    amplitude = _raw_amplitude(spec, pump, omega_s, omega_i) * t_s[:, None] * t_i[None, :]
    kept = float(np.sum(np.abs(amplitude) ** 2)) * d_s * d_i / total
    if kept < SURVIVAL_FLOOR:
        raise FilteredToNothingError(f"filters keep only {kept:.3g} of the joint spectrum")
    _check_boundary(amplitude, "filter-fitted grid")
    logger.debug("filtered joint spectrum for %s keeps %.4f of the pairs", label, kept)
    return JointSpectrum(
        omega_s=omega_s,
        omega_i=omega_i,
        amplitude=_normalised(amplitude, d_s, d_i),
        survival=kept,
        label=label,
    )


def methods_filter_chains(solution, narrowband=False):
    """
    Filter chains of the detection set-up.

    The signal arm gets a shortpass and the idler arm a longpass around the
    dichroic split, each followed by a 12 nm tunable bandpass centred on the
    phase-matched wavelength. `narrowband` appends the 1 nm bandpass filters
    used for two-source interference.

    Returns:
        tuple: (signal_chain, idler_chain)
    """
    signal_chain = [
        SpectralFilter(DICHROIC_EDGE_M - 10e-9, EDGE_WIDTH_M, "shortpass", EDGE_ORDER),
        SpectralFilter(solution.lambda_s, WIDE_BANDPASS_M),
    ]
    idler_chain = [
        SpectralFilter(DICHROIC_EDGE_M + 10e-9, EDGE_WIDTH_M, "longpass", EDGE_ORDER),
        SpectralFilter(solution.lambda_i, WIDE_BANDPASS_M),
    ]
    if narrowband:
        signal_chain.append(SpectralFilter(solution.lambda_s, NARROW_BANDPASS_M))
        idler_chain.append(SpectralFilter(solution.lambda_i, NARROW_BANDPASS_M))
    return signal_chain, idler_chain


def narrowband_chains(lambda_s, lambda_i, fwhm=NARROW_BANDPASS_M):
    return [SpectralFilter(lambda_s, fwhm)], [SpectralFilter(lambda_i, fwhm)]


def marginal_spectrum(js, which="signal"):
    """
    Single-photon spectrum of one arm, normalised to its maximum.

    Args:
        js (JointSpectrum): The joint spectrum
        which (str): "signal" or "idler"

    Returns:
        DataFrame: columns wavelength_nm, intensity_normalized (ascending wavelength)
    """
    intensity = np.abs(js.amplitude) ** 2
    if which == "signal":
        density = intensity.sum(axis=1) * js.d_omega_i
        omega = js.omega_s
    elif which == "idler":
        density = intensity.sum(axis=0) * js.d_omega_s
        omega = js.omega_i
    else:
        raise DomainError(f"which must be 'signal' or 'idler', got {which!r}")
    wavelength_nm = angular_frequency_to_wavelength(omega) * 1e9
    order = np.argsort(wavelength_nm)
    return pd.DataFrame({
        "wavelength_nm": wavelength_nm[order],
        "intensity_normalized": density[order] / density.max(),
    })


def _half_max_region(spectrum):
    wavelength = np.asarray(spectrum["wavelength_nm"], dtype=float)
    intensity = np.asarray(spectrum["intensity_normalized"], dtype=float)
    mask = intensity >= 0.5 * intensity.max()
    starts = np.count_nonzero(np.diff(mask.astype(int)) == 1) + int(mask[0])
    if starts > 1:
        raise AmbiguousPeakError(f"spectrum has {starts} disjoint regions above half maximum")
    return wavelength, intensity, mask


def central_wavelength(spectrum):
    """
    Intensity-weighted centroid over the samples above half maximum.

    Args:
        spectrum (DataFrame): columns wavelength_nm, intensity_normalized

    Returns:
        float: Central wavelength in meters

    Raises:
        AmbiguousPeakError: two disjoint above-half-max regions
    """
    wavelength, intensity, mask = _half_max_region(spectrum)
    spacing = np.abs(np.gradient(wavelength))
    weights = intensity[mask] * spacing[mask]
    return float(np.sum(wavelength[mask] * weights) / np.sum(weights)) * 1e-9


def marginal_fwhm_nm(spectrum):
    """Full width at half maximum, with linear interpolation at both edges."""
    wavelength, intensity, mask = _half_max_region(spectrum)
    idx = np.nonzero(mask)[0]
    lo, hi = idx[0], idx[-1]
    half = 0.5 * intensity.max()

    def crossing(a, b):
        if intensity[a] == intensity[b]:
            return wavelength[a]
        return wavelength[a] + (half - intensity[a]) * (wavelength[b] - wavelength[a]) / (intensity[b] - intensity[a])

    left = crossing(lo - 1, lo) if lo > 0 else wavelength[lo]
    right = crossing(hi, hi + 1) if hi < wavelength.size - 1 else wavelength[hi]
    return float(right - left)


@dataclass(frozen=True)
class SchmidtResult:
    schmidt_coefficients: np.ndarray
    purity: float
    schmidt_number: float


def schmidt_decompose(js):
    """
    Schmidt decomposition of the discretised joint amplitude by SVD.

    Raises:
        NumericalError: SVD did not converge
    """
    matrix = js.discrete()
    try:
        singular = svd(matrix, compute_uv=False, lapack_driver="gesdd")
    except LinAlgError:
        try:
            singular = svd(matrix, compute_uv=False, lapack_driver="gesvd")
        except LinAlgError as e:
            raise NumericalError(
                f"SVD of the joint spectrum did not converge: {e}",
                diagnostics={
                    "shape": matrix.shape,
                    "d_omega_s": js.d_omega_s,
                    "d_omega_i": js.d_omega_i,
                    "finite": bool(np.all(np.isfinite(matrix))),
                },
            ) from e
    weights = singular ** 2
    weights = weights / weights.sum()
    purity = float(np.sum(weights ** 2))
    return SchmidtResult(schmidt_coefficients=weights, purity=purity, schmidt_number=1.0 / purity)


def spectral_density_matrix(js, which="idler"):
    """
    Reduced single-photon spectral density matrix with unit trace.

    Element [a, b] is ρ(ω_a, ω_b) Δω on the arm's own grid.
    """
    matrix = js.discrete()
    if which == "idler":
        return matrix.T @ matrix.conj()
    if which == "signal":
        return matrix @ matrix.conj().T
    raise DomainError(f"which must be 'signal' or 'idler', got {which!r}")


def purity_from_density_matrix(rho):
    """Tr ρ² from the eigenvalues of a Hermitian density matrix."""
    eigenvalues = eigh(rho, eigvals_only=True)
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    eigenvalues = eigenvalues / eigenvalues.sum()
    return float(np.sum(eigenvalues ** 2))
