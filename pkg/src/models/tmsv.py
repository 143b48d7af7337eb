"""
Two-mode squeezed vacuum output of a single source.

    |ψ⟩ = Σ_n c_n |n⟩_s |n⟩_i,   c_n = tanhⁿ(r) / cosh(r)

The pair-number distribution c_n² is thermal with mean μ = sinh²(r). All
statistics are evaluated by explicit Fock summation up to a truncation whose
neglected tail is below TAIL_BOUND.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from src.utils.config import MAX_TRUNCATION, POWER_RANGE_MW, TAIL_BOUND
from src.utils.errors import DomainError, NumericalError
from src.utils.validators import (
    require,
    validate_efficiency,
    validate_non_negative,
    validate_positive,
    validate_range,
)


def required_truncation(r):
    """
    Smallest N_max ≥ ceil(20 + 40r), in steps of 10, whose neglected tail
    tanh^{2(N+1)}(r) is below TAIL_BOUND.

    Raises:
        NumericalError: the tail bound needs more than MAX_TRUNCATION photons
    """
    n_max = math.ceil(20 + 40 * r)
    q = math.tanh(r) ** 2
    if q == 0.0:
        return n_max
    while q ** (n_max + 1) >= TAIL_BOUND:
        n_max += 10
        if n_max > MAX_TRUNCATION:
            raise NumericalError(
                f"squeezing r={r:.4g} needs a Fock truncation above {MAX_TRUNCATION}",
                diagnostics={"r": r, "tail_ratio": q},
            )
    return n_max


@dataclass(frozen=True)
class TmsvState:
    """Squeezing parameter r with Fock truncation N_max."""

    r: float
    truncation: int = None

    def __post_init__(self):
        require(validate_non_negative("r", self.r))
        needed = required_truncation(self.r)
        if self.truncation is None:
            object.__setattr__(self, "truncation", needed)
        elif self.truncation < needed:
            tail = math.tanh(self.r) ** (2 * (self.truncation + 1))
            raise DomainError(
                f"truncation {self.truncation} leaves tail probability {tail:.3g} >= {TAIL_BOUND}"
            )

    @property
    def mu(self):
        return mean_pair_number(self)

    def pair_probabilities(self):
        return photon_number_distribution(self)


@dataclass(frozen=True)
class FockPairSource:
    """Arbitrary pair-number distribution, e.g. a perfect single-pair source P(1) = 1."""

    probabilities: tuple = field(default=(0.0, 1.0))

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if np.any(p < 0) or not math.isclose(p.sum(), 1.0, abs_tol=1e-12):
            raise DomainError("pair probabilities must be non-negative and sum to 1")

    @property
    def mu(self):
        p = self.pair_probabilities()
        return float(np.dot(np.arange(p.size), p))

    def pair_probabilities(self):
        return np.asarray(self.probabilities, dtype=float)


@dataclass(frozen=True)
class PumpCalibration:
    """Linear squeezing calibration r = kappa × P (P in mW)."""

    kappa: float
    valid_power_range: tuple = POWER_RANGE_MW

    def __post_init__(self):
        require(validate_positive("kappa", self.kappa))

    @classmethod
    def from_anchor(cls, power_mw, r, valid_power_range=POWER_RANGE_MW):
        return cls(kappa=r / power_mw, valid_power_range=valid_power_range)

    @classmethod
    def from_g2si_anchor(cls, power_mw, g2si, valid_power_range=POWER_RANGE_MW):
        """Calibrate so that the ideal-TMSV g_si at power_mw equals the measured value."""
        return cls.from_anchor(power_mw, squeezing_from_mu(mu_from_g2si(g2si)), valid_power_range)


def fock_coefficients(state):
    """
    Fock amplitudes c_n for n = 0..N_max.

    Args:
        state (TmsvState): The squeezed state

    Returns:
        ndarray: Real non-negative coefficients
    """
    n = np.arange(state.truncation + 1)
    return np.power(math.tanh(state.r), n) / math.cosh(state.r)


def photon_number_distribution(state):
    """Pair-number probabilities P(n) = c_n²."""
    return fock_coefficients(state) ** 2


def mean_pair_number(state):
    """μ = Σ n c_n² (equals sinh²r up to the truncation tail)."""
    p = photon_number_distribution(state)
    return float(np.dot(np.arange(p.size), p))


def cross_correlation_g2si(state):
    """
    Signal-idler cross-correlation ⟨n_s n_i⟩ / (⟨n_s⟩⟨n_i⟩) by Fock summation.

    Raises:
        DomainError: r = 0 (zero mean photon number)
    """
    if state.r == 0:
        raise DomainError("g2_si is undefined for r = 0")
    p = photon_number_distribution(state)
    n = np.arange(p.size)
    mean = np.dot(n, p)
    return float(np.dot(n * n, p) / (mean * mean))


def _click_probability(n, efficiency):
    """Probability that a bucket detector of given efficiency clicks on n photons."""
    if efficiency == 1.0:
        return (n >= 1).astype(float)
    return -np.expm1(n * math.log1p(-efficiency))


def heralded_g2(state, herald_efficiency=1.0):
    """
    Heralded g²(0) of the signal mode conditioned on a bucket-detector click
    on the idler with efficiency η_h.

    The heralded pair-number distribution is c_n² (1 − (1 − η_h)ⁿ), normalised.

    Args:
        state (TmsvState or FockPairSource): The source
        herald_efficiency (float): Idler detection efficiency in (0, 1]

    Returns:
        float: ⟨n(n−1)⟩ / ⟨n⟩² of the heralded signal (0 when nothing heralds)
    """
    require(validate_efficiency("herald_efficiency", herald_efficiency))
    p = state.pair_probabilities()
    n = np.arange(p.size)
    heralded = p * _click_probability(n, herald_efficiency)
    norm = heralded.sum()
    first = np.dot(n, heralded)
    if norm == 0.0 or first == 0.0:
        return 0.0
    return float(norm * np.dot(n * (n - 1), heralded) / (first * first))


def power_to_squeezing(calib, power_mw):
    """
    Squeezing state reached at a pump power, r = kappa × P.

    Raises:
        DomainError: power outside the calibration range
    """
    low, high = calib.valid_power_range
    require(validate_range("power_mw", power_mw, low, high))
    return TmsvState(r=calib.kappa * power_mw)


def mu_from_g2si(g2si):
    """Invert g_si = 2 + 1/μ of the ideal two-mode squeezed vacuum."""
    if not g2si > 2.0:
        raise DomainError(f"g2_si must exceed 2 for a physical TMSV, got {g2si}")
    return 1.0 / (g2si - 2.0)


def squeezing_from_mu(mu):
    require(validate_non_negative("mu", mu))
    return math.asinh(math.sqrt(mu))


def pair_probability(state):
    """Single-pair probability c_1²."""
    return float(photon_number_distribution(state)[1])


def multi_pair_ratio(state):
    """c_2² / c_1² = tanh²r, the relative weight of double pairs."""
    p = photon_number_distribution(state)
    if p[1] == 0.0:
        return 0.0
    return float(p[2] / p[1])
