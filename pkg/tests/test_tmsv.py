"""Tests for the two-mode squeezed vacuum statistics and the power calibration"""

import math

import numpy as np
import pytest

from src.models.tmsv import (
    FockPairSource,
    PumpCalibration,
    TmsvState,
    cross_correlation_g2si,
    fock_coefficients,
    heralded_g2,
    mu_from_g2si,
    multi_pair_ratio,
    pair_probability,
    photon_number_distribution,
    power_to_squeezing,
    required_truncation,
    squeezing_from_mu,
)
from src.utils.errors import DomainError, NumericalError


@pytest.mark.parametrize("r", [0.0, 0.01, 0.1, 0.545, 1.0])
def test_normalisation(r):
    assert np.sum(fock_coefficients(TmsvState(r=r)) ** 2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("r", [0.01, 0.1, 0.545, 1.0])
def test_marginal_is_thermal(r):
    """c_n^2 equals mu^n / (1 + mu)^(n + 1) term by term"""
    state = TmsvState(r=r)
    mu = math.sinh(r) ** 2
    n = np.arange(state.truncation + 1)
    thermal = mu ** n / (1 + mu) ** (n + 1)
    assert np.allclose(photon_number_distribution(state), thermal, rtol=0, atol=1e-12)
    assert state.mu == pytest.approx(mu, rel=1e-10)


@pytest.mark.parametrize("r", [0.05, 0.0792, 0.545])
def test_g2si_closed_form(r):
    state = TmsvState(r=r)
    assert cross_correlation_g2si(state) == pytest.approx(2 + 1 / math.sinh(r) ** 2, abs=1e-9)


def test_g2si_undefined_without_pairs():
    with pytest.raises(DomainError):
        cross_correlation_g2si(TmsvState(r=0.0))


def test_truncation_tail_bound():
    assert required_truncation(0.0) == 20
    assert required_truncation(1.0) >= 60
    with pytest.raises(DomainError):
        TmsvState(r=1.0, truncation=10)


@pytest.mark.parametrize("r", [5.0, 20.0])
def test_truncation_search_is_bounded(r):
    with pytest.raises(NumericalError) as info:
        TmsvState(r=r)
    assert info.value.diagnostics["r"] == r


def test_mu_from_measured_g2si():
    """g_si = 160.49 inverts to mu = 0.00631 and r = 0.0792"""
    mu = mu_from_g2si(160.49)
    assert mu == pytest.approx(0.00631, abs=1e-5)
    assert squeezing_from_mu(mu) == pytest.approx(0.0792, abs=2e-4)
    assert cross_correlation_g2si(TmsvState(r=squeezing_from_mu(mu))) == pytest.approx(160.49, rel=1e-9)


@pytest.mark.parametrize("g2si", [2.0, 1.5])
def test_mu_from_unphysical_g2si(g2si):
    with pytest.raises(DomainError):
        mu_from_g2si(g2si)


def test_heralded_g2_lossless_herald():
    mu = 0.00631
    state = TmsvState(r=squeezing_from_mu(mu))
    assert heralded_g2(state) == pytest.approx(2 * mu / (1 + mu), rel=1e-9)
    assert heralded_g2(state) == pytest.approx(0.0126, abs=1e-4)


def test_heralded_g2_increases_with_mu():
    values = [heralded_g2(TmsvState(r=squeezing_from_mu(mu)), 0.64) for mu in (0.001, 0.01, 0.03, 0.06)]
    assert np.all(np.diff(values) > 0)


@pytest.mark.parametrize("mu", [0.001, 0.00631, 0.03, 0.06])
def test_heralded_g2_below_envelope(mu):
    assert heralded_g2(TmsvState(r=squeezing_from_mu(mu))) < 0.12


def test_heralded_g2_of_single_pairs():
    assert heralded_g2(FockPairSource(), 0.5) == 0.0


def test_heralded_g2_rejects_zero_efficiency():
    with pytest.raises(DomainError):
        heralded_g2(TmsvState(r=0.1), 0.0)


def test_fock_pair_source_validation():
    assert FockPairSource((0.5, 0.25, 0.25)).mu == pytest.approx(0.75)
    with pytest.raises(DomainError):
        FockPairSource((0.5, 0.6))


def test_pair_probabilities():
    state = TmsvState(r=0.3)
    assert pair_probability(state) == pytest.approx(math.tanh(0.3) ** 2 / math.cosh(0.3) ** 2)
    assert multi_pair_ratio(state) == pytest.approx(math.tanh(0.3) ** 2)


def test_power_calibration_anchor():
    calib = PumpCalibration.from_anchor(150.0, 0.545)
    assert power_to_squeezing(calib, 150.0).r == pytest.approx(0.545)
    assert power_to_squeezing(calib, 0.0).r == 0.0
    low = power_to_squeezing(calib, 10.0)
    assert low.r == pytest.approx(0.0363, abs=1e-4)
    assert low.mu == pytest.approx(0.00132, abs=2e-5)


def test_power_outside_calibration():
    calib = PumpCalibration.from_anchor(150.0, 0.545)
    with pytest.raises(DomainError):
        power_to_squeezing(calib, 200.0)


def test_g2si_anchor_calibration():
    calib = PumpCalibration.from_g2si_anchor(10.0, 160.49)
    state = power_to_squeezing(calib, 10.0)
    assert cross_correlation_g2si(state) == pytest.approx(160.49, rel=1e-9)


def test_mu_scales_quadratically_at_low_power():
    calib = PumpCalibration.from_anchor(150.0, 0.545)
    powers = np.arange(1.0, 11.0)
    mus = [power_to_squeezing(calib, p).mu for p in powers]
    slope = np.polyfit(np.log(powers), np.log(mus), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.01)
