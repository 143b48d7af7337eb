"""Tests for the Sellmeier dispersion model and its coefficient files"""

import numpy as np
import pytest

from src.data_handlers.coefficient_loader import load_sellmeier, save_sellmeier
from src.models.dispersion import (
    SellmeierModel,
    angular_frequency_to_wavelength,
    group_index,
    index_at_angular_frequency,
    refractive_index,
    wavelength_to_angular_frequency,
    wavenumber,
)
from src.utils.errors import ConfigError, DomainError, OutputError, SingularityError


@pytest.mark.parametrize("wavelength_um, expected", [(0.78, 1.45367), (0.6328, 1.45702), (1.55, 1.44402)])
def test_fused_silica_index(material, wavelength_um, expected):
    """Check the shipped coefficients against tabulated fused-silica indices"""
    assert refractive_index(material, wavelength_um) == pytest.approx(expected, abs=2e-4)


def test_index_at_helium_d_line(material):
    assert refractive_index(material, 0.5876) == pytest.approx(1.45846, abs=2e-5)
    assert index_at_angular_frequency(material, wavelength_to_angular_frequency(0.5876e-6)) == pytest.approx(1.45846, abs=2e-5)


def test_frequency_and_wavelength_indices_agree_exactly(material):
    rng = np.random.default_rng(7)
    low, high = material.valid_range
    omega = rng.uniform(wavelength_to_angular_frequency(0.999 * high * 1e-6), wavelength_to_angular_frequency(1.001 * low * 1e-6), 1000)
    expected = refractive_index(material, angular_frequency_to_wavelength(omega) * 1e6)
    assert np.array_equal(index_at_angular_frequency(material, omega), expected)
    for value in omega[:20]:
        assert index_at_angular_frequency(material, value) == refractive_index(material, 2 * np.pi * 299792458.0 / value * 1e6)


def test_index_accepts_arrays(material):
    lam = np.linspace(0.5, 1.5, 11)
    n = refractive_index(material, lam)
    assert n.shape == lam.shape
    # normal dispersion in the visible and near infrared
    assert np.all(np.diff(n) < 0)


def test_index_at_angular_frequency_matches_wavelength(material):
    omega = wavelength_to_angular_frequency(780e-9)
    assert index_at_angular_frequency(material, omega) == pytest.approx(refractive_index(material, 0.78), rel=1e-14)
    assert angular_frequency_to_wavelength(omega) == pytest.approx(780e-9, rel=1e-15)
    assert omega == pytest.approx(2.41500e15, rel=1e-4)


def test_wavenumber(material):
    omega = wavelength_to_angular_frequency(780e-9)
    assert wavenumber(material, omega) == pytest.approx(2 * np.pi * refractive_index(material, 0.78) / 780e-9, rel=1e-12)


def test_group_index_exceeds_phase_index(material):
    n = refractive_index(material, 0.78)
    ng = group_index(material, 0.78)
    assert ng > n
    assert ng == pytest.approx(1.4676, abs=2e-3)


def test_group_index_matches_numerical_derivative(material):
    lam, h = 0.8, 1e-5
    dn = (refractive_index(material, lam + h) - refractive_index(material, lam - h)) / (2 * h)
    assert group_index(material, lam) == pytest.approx(refractive_index(material, lam) - lam * dn, rel=1e-8)


@pytest.mark.parametrize("wavelength_um", [0.1, 5.0, float("nan")])
def test_outside_valid_range(material, wavelength_um):
    with pytest.raises(DomainError):
        refractive_index(material, wavelength_um)


def test_resonance_is_singular():
    model = SellmeierModel(terms=((1.0, 0.5),), valid_range=(0.2, 2.0))
    with pytest.raises(SingularityError):
        refractive_index(model, 0.5)


@pytest.mark.parametrize("terms, valid_range", [((), (0.2, 2.0)), (((-1.0, 0.1),), (0.2, 2.0)), (((1.0, 0.1),), (2.0, 0.2))])
def test_invalid_model(terms, valid_range):
    with pytest.raises(DomainError):
        SellmeierModel(terms=terms, valid_range=valid_range)


def test_save_and_load(material, tmp_path):
    path = tmp_path / "silica.env"
    save_sellmeier(material, str(path))
    loaded = load_sellmeier(str(path))
    assert loaded.terms == material.terms
    assert loaded.valid_range == material.valid_range


def test_load_missing_key(tmp_path):
    path = tmp_path / "broken.env"
    path.write_text("B1=0.6961663\nC1=0.0684043\nlambda_min=0.21\nlambda_max=3.71\n")
    with pytest.raises(ConfigError):
        load_sellmeier(str(path))


def test_load_missing_file(tmp_path):
    with pytest.raises(OutputError):
        load_sellmeier(str(tmp_path / "absent.env"))
