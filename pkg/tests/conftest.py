"""Shared fixtures for the test suite"""

import pytest

from src.data_handlers.coefficient_loader import load_default_sellmeier
from src.models.phasematch import WaveguideSpec, solve_phase_matching
from src.models.spectrum import PumpEnvelope
from src.simulation.montecarlo import DetectionConfig


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte Carlo runs of 10^8 pulses or full-chip experiments")


@pytest.fixture(scope="session")
def material():
    return load_default_sellmeier()


@pytest.fixture(scope="session")
def spec(material):
    return WaveguideSpec(material=material)


@pytest.fixture(scope="session")
def solution(spec):
    return solve_phase_matching(spec)


@pytest.fixture(scope="session")
def pump():
    return PumpEnvelope()


@pytest.fixture
def detection():
    """Default efficiencies on a short run split into several batches."""
    return DetectionConfig(n_pulses=400_000, batch_size=65_536, seed=11)
