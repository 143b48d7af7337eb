"""Tests for the birefringent phase-matching solver"""

import numpy as np
import pytest

from src.models.dispersion import wavelength_to_angular_frequency
from src.models.phasematch import (
    SCAN_COLUMNS,
    WaveguideSpec,
    infer_birefringence,
    max_fluctuation_nm,
    perturbation_scan,
    phase_mismatch,
    solve_phase_matching,
    wavelength_sensitivity,
)
from src.utils.config import DELTA_N
from src.utils.errors import DegenerateOnlyError, DomainError, InconsistentInputError, NoSolutionError


def test_default_pair(solution):
    """The default waveguide lands within 1 nm of the measured 732.5/833.5 nm pair"""
    assert abs(solution.lambda_s * 1e9 - 732.5) <= 1.0
    assert abs(solution.lambda_i * 1e9 - 833.5) <= 1.0
    assert abs(solution.residual_k) < 1e-6


def test_default_birefringence_matches_measured_pair():
    assert infer_birefringence(780e-9, 732.5e-9, 833.5e-9) == pytest.approx(DELTA_N, rel=0.03)


def test_energy_conservation(solution):
    assert solution.omega_s + solution.omega_i == pytest.approx(2 * solution.omega_p, rel=1e-14)
    assert 2 / solution.lambda_p == pytest.approx(1 / solution.lambda_s + 1 / solution.lambda_i, rel=1e-12)


def test_mismatch_changes_sign_at_root(spec, solution):
    assert phase_mismatch(spec, 0.5 * solution.detuning) > 0
    assert phase_mismatch(spec, 1.5 * solution.detuning) < 0


def test_as_dict_reports_nanometers(solution):
    report = solution.as_dict()
    assert report["lambda_p_nm"] == pytest.approx(780.0, rel=1e-12)
    assert report["lambda_s_nm"] == pytest.approx(solution.lambda_s * 1e9)


def test_zero_birefringence(spec):
    with pytest.raises(DegenerateOnlyError):
        solve_phase_matching(spec.with_delta_n(0.0))


def test_shifted_pump(material):
    solution = solve_phase_matching(WaveguideSpec(pump_wavelength=800e-9, material=material))
    assert solution.lambda_s < 800e-9 < solution.lambda_i


def test_no_solution_reports_bracket(spec):
    with pytest.raises(NoSolutionError) as info:
        solve_phase_matching(spec.with_delta_n(0.05))
    assert info.value.bracket[0] == 0.0
    assert info.value.mismatch[0] > 0


@pytest.mark.parametrize("kwargs", [{"delta_n": -1e-5}, {"length": 0.0}, {"pump_wavelength": 5e-6}])
def test_invalid_waveguide(material, kwargs):
    with pytest.raises(DomainError):
        WaveguideSpec(material=material, **kwargs)


def test_detuning_grows_with_birefringence(spec):
    detunings = [solve_phase_matching(spec.with_delta_n(dn)).detuning for dn in (3e-5, 6e-5, 9e-5)]
    assert detunings[0] < detunings[1] < detunings[2]


def test_perturbation_scan_fluctuation(spec):
    """A 20% birefringence error moves the pair by about 5 nm"""
    scan = perturbation_scan(spec, [0.0, 0.05, 0.2])
    assert list(scan.columns) == SCAN_COLUMNS + ["error"]
    assert 3.5 < max_fluctuation_nm(scan, 0.2) < 6.5
    row = scan.iloc[1]
    base = scan.iloc[0]
    assert abs(row["lambda_s_plus_nm"] - base["lambda_s_plus_nm"]) > 1.0
    assert abs(row["lambda_s_minus_nm"] - base["lambda_s_minus_nm"]) > 1.0


def test_perturbation_scan_is_worker_independent(spec):
    etas = np.linspace(0.0, 0.1, 6)
    serial = perturbation_scan(spec, etas)
    threaded = perturbation_scan(spec, etas, workers=3)
    assert serial.equals(threaded)


def test_perturbation_scan_marks_failures(spec):
    scan = perturbation_scan(spec, [0.0, 0.6])
    assert scan.loc[0, "error"] == ""
    assert scan.loc[1, "error"]
    assert np.isnan(scan.loc[1, "lambda_s_plus_nm"])


def test_max_fluctuation_requires_reference(spec):
    scan = perturbation_scan(spec, [0.1])
    with pytest.raises(DomainError):
        max_fluctuation_nm(scan, 0.1)


def test_infer_birefringence_inverts_solver(spec, solution):
    delta_n = infer_birefringence(solution.lambda_p, solution.lambda_s, solution.lambda_i, spec.material)
    assert delta_n == pytest.approx(spec.delta_n, rel=1e-6)


def test_infer_birefringence_within_resolution(spec, solution):
    """Measured wavelengths off by a tenth of the resolution still invert"""
    delta_n = infer_birefringence(solution.lambda_p, solution.lambda_s + 0.02e-9, solution.lambda_i, spec.material)
    assert delta_n == pytest.approx(spec.delta_n, rel=0.05)


@pytest.mark.parametrize("lambdas, expected, rel", [
    ((780e-9, 732.5e-9, 833.5e-9), 6e-5, 0.15),
    ((780e-9, 780e-9, 780e-9), 0.0, 0.0),
])
def test_infer_birefringence_known_triples(lambdas, expected, rel):
    assert infer_birefringence(*lambdas) == pytest.approx(expected, rel=rel, abs=1e-15)


@pytest.mark.parametrize("lambdas", [(780e-9, 732.5e-9, 900e-9), (780e-9, 800e-9, 833.5e-9)])
def test_infer_birefringence_inconsistent(lambdas):
    with pytest.raises(InconsistentInputError):
        infer_birefringence(*lambdas)


def test_sensitivity_ratio_is_energy_forced(spec, solution):
    d_signal, d_idler = wavelength_sensitivity(spec)
    assert d_signal < 0 < d_idler
    assert -d_idler / d_signal == pytest.approx((solution.lambda_i / solution.lambda_s) ** 2, rel=1e-3)


def test_omega_limits_inside_dispersion_range(spec):
    limit = spec.omega_limits()
    assert spec.omega_p - limit >= wavelength_to_angular_frequency(spec.material.valid_range[1] * 1e-6) * (1 - 1e-12)
