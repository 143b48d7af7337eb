"""
Heralded two-source Hong-Ou-Mandel interference.

Each source's signal photon goes straight to its own trigger detector; the
two idler photons meet on a 50:50 splitter whose outputs are watched by two
more detectors. A fourfold coincidence needs all four detectors in one pulse.

The spectral factor of the dip is the delayed overlap

    O(τ) = Tr[ρ_A U(τ) ρ_B U(τ)†],   U(τ) = diag(e^{iωτ})

of the heralded idler density matrices. Photon routing at the splitter uses
the two-port bunching law for k_A + k_B photons entering from the two
inputs: all k photons leave by one port with probability
O·C(k, k_A)/2^k + (1 − O)/2^k per port, which is exact for one photon per
input and for two photons in one input plus one in the other.
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np
import pandas as pd
from scipy.constants import c
from scipy.interpolate import interp1d
from scipy.optimize import curve_fit
from scipy.special import comb
from scipy.stats import binom

from src.models.phasematch import solve_phase_matching
from src.models.spectrum import (
    JointSpectrum,
    PumpEnvelope,
    build_filtered_jsa,
    narrowband_chains,
    spectral_density_matrix,
)
from src.models.tmsv import TmsvState, squeezing_from_mu
from src.simulation.montecarlo import DetectionConfig, sample_pair_numbers, substream
from src.utils.config import (
    HOM_MEAN_PAIRS,
    HOM_MU_LIMIT,
    HOM_POINTS,
    HOM_PULSES_PER_POINT,
    HOM_STAGE_STEP_M,
    NARROW_BANDPASS_M,
)
from src.utils.errors import DomainError, EstimatorUndefinedError
from src.utils.validators import require, validate_integer_at_least, validate_range

logger = logging.getLogger(__name__)

FILTER_POLICIES = ("common", "tracking")
MAX_RESAMPLED_POINTS = 8192
SCAN_COLUMNS = ["delay_fs", "fourfold_counts", "fourfold_rate", "fit_value", "overlap"]

# channel indices of one delay point
HERALDS, PAIRS_A, PAIRS_B, LOSS_A, LOSS_B, ROUTING, PORT, DARK_C, DARK_D = range(9)


def stage_delay_grid(n_points=HOM_POINTS, stage_step=HOM_STAGE_STEP_M):
    """Delays of a translation stage scanned symmetrically about zero, in seconds."""
    require(validate_integer_at_least("n_points", n_points, 3))
    half = (n_points - 1) // 2
    return np.arange(-half, half + 1) * stage_step / c


@dataclass(frozen=True)
class HomScanConfig:
    delay_grid: tuple = field(default_factory=lambda: tuple(stage_delay_grid()))
    n_pulses_per_point: int = HOM_PULSES_PER_POINT
    splitter_ratio: float = 0.5

    def __post_init__(self):
        require(validate_integer_at_least("n_pulses_per_point", self.n_pulses_per_point, 1))
        require(validate_range("splitter_ratio", self.splitter_ratio, 0.0, 1.0,
                               include_low=False, include_high=False))
        delays = np.asarray(self.delay_grid, dtype=float)
        if delays.size < 3 or not np.allclose(np.sort(delays), -np.sort(delays)[::-1], rtol=0, atol=1e-9 * np.abs(delays).max()):
            raise DomainError("delay grid must hold at least 3 points placed symmetrically about zero")


@dataclass(frozen=True, eq=False)
class HomSource:
    """One arm of the interferometer: pair statistics and filtered joint spectrum."""

    state: object
    spectrum: JointSpectrum
    label: str = ""

    @property
    def mu(self):
        return self.state.mu


@dataclass(frozen=True, eq=False)
class HomResult:
    delays: np.ndarray
    counts: np.ndarray
    rates: np.ndarray
    overlaps: np.ndarray
    baseline: float
    minimum: float
    visibility: float
    dip_width: float
    dip_center: float
    fit_values: np.ndarray
    negative_visibility: bool = False

    def to_frame(self):
        return pd.DataFrame({
            "delay_fs": self.delays * 1e15,
            "fourfold_counts": self.counts,
            "fourfold_rate": self.rates,
            "fit_value": self.fit_values,
            "overlap": self.overlaps,
        }, columns=SCAN_COLUMNS)

    def summary(self):
        return {
            "visibility": self.visibility,
            "dip_width_fs": self.dip_width * 1e15,
            "dip_center_fs": self.dip_center * 1e15,
            "baseline_counts": self.baseline,
            "minimum_counts": self.minimum,
            "negative_visibility": self.negative_visibility,
        }


def prepare_source(spec, mu=HOM_MEAN_PAIRS, pump=None, policy="common", nominal=None,
                   filter_fwhm=NARROW_BANDPASS_M, grid=None):
    """
    Filtered heralding source for interference experiments.

    Args:
        spec (WaveguideSpec): The waveguide
        mu (float): Mean pair number per pulse
        pump (PumpEnvelope): Pump pulse
        policy (str): "common" centres the 1 nm filters on `nominal`, the
            wavelengths every source of the set-up is measured at; "tracking"
            centres them on this waveguide's own phase-matched pair
        nominal (PhaseMatchSolution): Filter centres for the common policy

    Under "common" the 1 nm filters cut every source down to the same
    spectral window, so a birefringence error shows up only as lost
    throughput and barely lowers the visibility. Use "tracking" to see the
    spectral distinguishability of detuned waveguides.

    Returns:
        HomSource: The source
    """
    if policy not in FILTER_POLICIES:
        raise DomainError(f"filter policy must be one of {FILTER_POLICIES}, got {policy!r}")
    if policy == "tracking" or nominal is None:
        centres = solve_phase_matching(spec)
    else:
        centres = nominal
    signal_chain, idler_chain = narrowband_chains(centres.lambda_s, centres.lambda_i, filter_fwhm)
    js = build_filtered_jsa(spec, pump or PumpEnvelope(center_wavelength=spec.pump_wavelength),
                            signal_chain, idler_chain, grid=grid)
    return HomSource(state=TmsvState(r=squeezing_from_mu(mu)), spectrum=js, label=spec.label)


def _resample_idler(js, omega):
    d_new = omega[1] - omega[0]
    kwargs = dict(axis=1, bounds_error=False, fill_value=0.0, assume_sorted=True)
    real = interp1d(js.omega_i, js.amplitude.real, **kwargs)(omega)
    imag = interp1d(js.omega_i, js.amplitude.imag, **kwargs)(omega)
    matrix = (real + 1j * imag) * math.sqrt(js.d_omega_s * d_new)
    return matrix.T @ matrix.conj()


def common_idler_states(js_a, js_b):
    """
    Idler density matrices of two sources on one frequency grid.

    Identical grids are used as they are; otherwise both joint spectra are
    interpolated onto a grid covering the union of the two idler grids at the
    finer step, with zero amplitude outside each source's own grid.

    Returns:
        tuple: (omega, rho_a, rho_b)

    Raises:
        DomainError: the union grid would exceed MAX_RESAMPLED_POINTS
    """
    if js_a.omega_i.shape == js_b.omega_i.shape and np.allclose(js_a.omega_i, js_b.omega_i, rtol=0, atol=1e-6 * js_a.d_omega_i):
        return js_a.omega_i, spectral_density_matrix(js_a), spectral_density_matrix(js_b)
    step = min(js_a.d_omega_i, js_b.d_omega_i)
    low = min(js_a.omega_i[0], js_b.omega_i[0])
    high = max(js_a.omega_i[-1], js_b.omega_i[-1])
    size = int(round((high - low) / step)) + 1
    if size > MAX_RESAMPLED_POINTS:
        raise DomainError(
            f"idler grids are {high - low:.4g} rad/s apart end to end; resampling needs {size} points"
        )
    omega = np.linspace(low, high, size)
    rho_a = _resample_idler(js_a, omega)
    rho_b = _resample_idler(js_b, omega)
    for rho in (rho_a, rho_b):
        trace = np.trace(rho).real
        if trace > 0:
            rho /= trace
    logger.debug("resampled idler states onto %d points", size)
    return omega, rho_a, rho_b


def delayed_overlap(rho_a, rho_b, omega, tau):
    """
    Tr[ρ_A U(τ) ρ_B U(τ)†] for one delay or an array of delays.

    Args:
        rho_a, rho_b (ndarray): Density matrices on the grid `omega`
        omega (ndarray): Angular frequencies of the grid
        tau (float or ndarray): Delays in seconds
    """
    relative = omega - omega.mean()
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    values = np.empty(taus.size)
    for k, t in enumerate(taus):
        phase = np.exp(1j * relative * t)
        rotated = phase[:, None] * rho_b * phase.conj()[None, :]
        values[k] = float(np.sum(rho_a * rotated.T).real)
    values = np.clip(values, 0.0, 1.0)
    return values if np.ndim(tau) else float(values[0])


def bunching_probability(k_a, k_b, overlap):
    """
    Probability that k_a + k_b photons entering the two splitter inputs leave
    through both output ports.
    """
    k_a = np.asarray(k_a)
    k_b = np.asarray(k_b)
    k = k_a + k_b
    distinguishable = 1.0 - np.power(2.0, 1 - k)
    indistinguishable = 1.0 - 2.0 * comb(k, k_a) / np.power(2.0, k)
    both = overlap * indistinguishable + (1.0 - overlap) * distinguishable
    return np.where(k >= 2, both, 0.0)


def _trigger_probabilities(p, eta_signal, dark_prob):
    n = np.arange(p.size)
    return 1.0 - (1.0 - dark_prob) * (1.0 - eta_signal) ** n


def _heralded_idler_counts(p, det):
    """Distribution of idler photons reaching the splitter in a heralded pulse (unnormalised)."""
    heralded = p * _trigger_probabilities(p, det.eta_signal, det.dark_prob)
    n = np.arange(p.size)
    k = np.arange(p.size)
    return binom.pmf(k[None, :], n[:, None], det.eta_idler).T @ heralded


def analytic_fourfold_probability(source_a, source_b, overlap, det):
    """
    Per-pulse fourfold coincidence probability.

    Both triggers must click (pair photon or dark count), then both splitter
    outputs must click, either from photons or from a dark count on a port
    left empty.

    Args:
        source_a, source_b: Objects with pair_probabilities()
        overlap (float): Delayed spectral overlap O(τ)
        det (DetectionConfig): Efficiencies and dark probability
    """
    h_a = _heralded_idler_counts(source_a.pair_probabilities(), det)
    h_b = _heralded_idler_counts(source_b.pair_probabilities(), det)
    k_a, k_b = np.meshgrid(np.arange(h_a.size), np.arange(h_b.size), indexing="ij")
    both = bunching_probability(k_a, k_b, overlap)
    d = det.dark_prob
    port_clicks = np.where(k_a + k_b == 0, d * d, both + (1.0 - both) * d)
    return float(h_a @ port_clicks @ h_b)


def hom_visibility_analytic(js_a, js_b, mu_a, mu_b, det=None):
    """
    Visibility V = (P(∞) − P(0)) / P(∞) of two thermal heralded sources.

    The spectral factor is the zero-delay overlap of the heralded idler
    states; the multi-photon terms enter through the photon-number sums of
    `analytic_fourfold_probability`.

    Args:
        js_a, js_b (JointSpectrum): Filtered joint spectra
        mu_a, mu_b (float): Mean pair numbers, each below HOM_MU_LIMIT
        det (DetectionConfig): Detection, default lossless without darks

    Returns:
        float: Visibility
    """
    omega, rho_a, rho_b = common_idler_states(js_a, js_b)
    return visibility_from_overlap(delayed_overlap(rho_a, rho_b, omega, 0.0), mu_a, mu_b, det)


def visibility_from_overlap(overlap, mu_a, mu_b, det=None):
    """Visibility of two thermal heralded sources whose idler states overlap by `overlap`."""
    for name, mu in (("mu_a", mu_a), ("mu_b", mu_b)):
        require(validate_range(name, mu, 0.0, HOM_MU_LIMIT, include_low=False, include_high=False))
    det = det or DetectionConfig(eta_signal=1.0, eta_idler=1.0, dark_prob=0.0)
    state_a = TmsvState(r=squeezing_from_mu(mu_a))
    state_b = TmsvState(r=squeezing_from_mu(mu_b))
    baseline = analytic_fourfold_probability(state_a, state_b, 0.0, det)
    dip = analytic_fourfold_probability(state_a, state_b, overlap, det)
    return (baseline - dip) / baseline


def _dip_model(tau, baseline, visibility, center, width):
    return baseline * (1.0 - visibility * np.exp(-((tau - center) ** 2) / (2.0 * width ** 2)))


def fit_dip(delays, counts, width_guess):
    """
    Gaussian dip fit B(1 − V exp(−(τ−τ0)²/(2w²))).

    Returns:
        tuple: (baseline, visibility, center, width, fitted values)
    """
    delays = np.asarray(delays, dtype=float)
    counts = np.asarray(counts, dtype=float)
    edge = np.concatenate([counts[:2], counts[-2:]]).mean()
    if edge <= 0:
        raise EstimatorUndefinedError("zero baseline counts, visibility undefined",
                                      counts={"edge_counts": counts[[0, 1, -2, -1]].tolist()})
    # fit in units of the guessed width so all parameters are of order one
    scale = width_guess
    x = delays / scale
    guess = (edge, 1.0 - counts.min() / edge, float(x[np.argmin(counts)]), 1.0)
    sigma = np.sqrt(np.maximum(counts, 1.0))
    try:
        params, _ = curve_fit(_dip_model, x, counts, p0=guess, sigma=sigma, maxfev=20000)
    except RuntimeError as e:
        logger.warning("dip fit did not converge (%s), using raw extrema", e)
        params = guess
    baseline, visibility, center, width = (float(v) for v in params)
    return baseline, visibility, center * scale, abs(width) * scale, _dip_model(x, *params)


def _coherence_width(omega, rho_a, rho_b, delays):
    overlaps = delayed_overlap(rho_a, rho_b, omega, delays)
    if overlaps.max() <= 0:
        return float(np.ptp(delays)) / 6.0
    half = overlaps >= 0.5 * overlaps.max()
    fwhm = float(np.ptp(delays[half])) or float(delays[1] - delays[0])
    return fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))


def _simulate_delay(source_a, source_b, overlap, det, n_pulses, seed, stream):
    """Fourfold counts at one delay, simulating only the doubly heralded pulses."""
    p_a = source_a.pair_probabilities()
    p_b = source_b.pair_probabilities()
    trig_a = p_a * _trigger_probabilities(p_a, det.eta_signal, det.dark_prob)
    trig_b = p_b * _trigger_probabilities(p_b, det.eta_signal, det.dark_prob)
    herald = trig_a.sum() * trig_b.sum()
    heralded = int(substream(seed, stream, 0, HERALDS).binomial(n_pulses, herald))
    if heralded == 0:
        return 0
    n_a = sample_pair_numbers(substream(seed, stream, 0, PAIRS_A), trig_a / trig_a.sum(), heralded)
    n_b = sample_pair_numbers(substream(seed, stream, 0, PAIRS_B), trig_b / trig_b.sum(), heralded)
    k_a = substream(seed, stream, 0, LOSS_A).binomial(n_a, det.eta_idler)
    k_b = substream(seed, stream, 0, LOSS_B).binomial(n_b, det.eta_idler)
    both = substream(seed, stream, 0, ROUTING).random(heralded) < bunching_probability(k_a, k_b, overlap)
    occupied = k_a + k_b > 0
    to_c = substream(seed, stream, 0, PORT).random(heralded) < 0.5
    port_c = both | (occupied & to_c)
    port_d = both | (occupied & ~to_c)
    port_c |= substream(seed, stream, 0, DARK_C).random(heralded) < det.dark_prob
    port_d |= substream(seed, stream, 0, DARK_D).random(heralded) < det.dark_prob
    return int(np.count_nonzero(port_c & port_d))


def hom_scan_mc(source_a, source_b, cfg=None, det=None):
    """
    Monte Carlo fourfold coincidences versus idler delay.

    Pulses where both triggers click are drawn first (binomially, from the
    exact trigger probabilities); only those pulses are followed through the
    splitter, which leaves the count distribution unchanged. Delay point j
    uses stream j + 1 of the detection seed.

    Args:
        source_a, source_b (HomSource): The two sources
        cfg (HomScanConfig): Delay grid and pulses per point
        det (DetectionConfig): Detection apparatus and seed

    Returns:
        HomResult: Counts, Gaussian dip fit and visibility

    Raises:
        EstimatorUndefinedError: no fourfold counts away from the dip
    """
    cfg = cfg or HomScanConfig()
    det = det or DetectionConfig()
    delays = np.asarray(cfg.delay_grid, dtype=float)
    omega, rho_a, rho_b = common_idler_states(source_a.spectrum, source_b.spectrum)
    overlaps = delayed_overlap(rho_a, rho_b, omega, delays)
    counts = np.array([
        _simulate_delay(source_a.state, source_b.state, overlap, det, cfg.n_pulses_per_point, det.seed, j + 1)
        for j, overlap in enumerate(overlaps)
    ])
    rates = counts * det.rep_rate / cfg.n_pulses_per_point
    baseline, visibility, center, width, fitted = fit_dip(delays, counts, _coherence_width(omega, rho_a, rho_b, delays))
    if visibility < 0:
        logger.warning("fitted HOM visibility %.4f is negative", visibility)
    logger.info("HOM %s/%s: V=%.4f width=%.1f fs", source_a.label, source_b.label, visibility, width * 1e15)
    return HomResult(
        delays=delays,
        counts=counts,
        rates=rates,
        overlaps=overlaps,
        baseline=baseline,
        minimum=baseline * (1.0 - visibility),
        visibility=visibility,
        dip_width=width,
        dip_center=center,
        fit_values=fitted,
        negative_visibility=visibility < 0,
    )


def pairwise_visibility_matrix(sources, pairs=None, det=None):
    """
    Analytic visibility for pairs of sources.

    Args:
        sources (list): HomSource objects
        pairs (list): Index pairs, default every pair including self-pairs
        det (DetectionConfig): Detection, default lossless without darks

    Returns:
        DataFrame: source_a, source_b, label_a, label_b, overlap, visibility
    """
    if len(sources) < 2:
        raise DomainError("pairwise visibilities need at least two sources")
    if pairs is None:
        pairs = list(combinations_with_replacement(range(len(sources)), 2))
    rows = []
    for a, b in pairs:
        if not (0 <= a < len(sources) and 0 <= b < len(sources)):
            raise DomainError(f"source index pair ({a}, {b}) out of range for {len(sources)} sources")
        src_a, src_b = sources[a], sources[b]
        omega, rho_a, rho_b = common_idler_states(src_a.spectrum, src_b.spectrum)
        overlap = delayed_overlap(rho_a, rho_b, omega, 0.0)
        rows.append({
            "source_a": a,
            "source_b": b,
            "label_a": src_a.label,
            "label_b": src_b.label,
            "overlap": overlap,
            "visibility": visibility_from_overlap(overlap, src_a.mu, src_b.mu, det),
        })
    return pd.DataFrame(rows)
