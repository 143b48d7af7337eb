"""Tests for run configuration loading"""

import os
import re

import pytest

from src.data_handlers.config_loader import RunConfig, config_keys, load_run_config
from src.models.tmsv import power_to_squeezing
from src.utils.config import DEFAULT_CONFIG_PATH, GSI_ANCHOR_CONFIG_PATH, GSI_ANCHOR_POWER_MW, GSI_ANCHOR_VALUE, SEED
from src.utils.errors import ConfigError


def write_config(tmp_path, text, name="run.env"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_built_in_defaults():
    cfg = load_run_config(environ={})
    assert isinstance(cfg, RunConfig)
    assert cfg.seed == SEED
    assert cfg.hom.filter_policy == "common"
    assert cfg.detection_config().eta_signal == pytest.approx(0.64)
    assert cfg.detection_config().dark_prob == pytest.approx(100 / 80e6)


def test_default_preset_loads():
    cfg = load_run_config(DEFAULT_CONFIG_PATH, environ={})
    assert os.path.isabs(cfg.run.sellmeier_path)
    assert os.path.exists(cfg.run.sellmeier_path)
    assert cfg.chip.count == 128
    assert cfg.chip.eta_sigma < 0
    assert cfg.waveguide_spec().length == pytest.approx(0.02)
    assert len(cfg.hom_scan_config().delay_grid) == 121


def test_low_power_preset_matches_the_anchor():
    cfg = load_run_config(GSI_ANCHOR_CONFIG_PATH, environ={})
    assert cfg.calibration.power_mw == GSI_ANCHOR_POWER_MW
    assert cfg.calibration.value == GSI_ANCHOR_VALUE
    r = power_to_squeezing(cfg.pump_calibration(), GSI_ANCHOR_POWER_MW).r
    assert r == pytest.approx(0.07935, rel=1e-3)


def test_precedence(tmp_path):
    path = write_config(tmp_path, "RUN_SEED=1\nCHIP_COUNT=16\nHOM_POINTS=31\n")
    cfg = load_run_config(path, environ={"RUN_SEED": "2", "CHIP_COUNT": "32"}, overrides={"RUN_SEED": 3})
    assert cfg.seed == 3
    assert cfg.chip.count == 32
    assert cfg.hom.points == 31


def test_overrides_of_none_are_ignored(tmp_path):
    path = write_config(tmp_path, "RUN_SEED=1\n")
    assert load_run_config(path, overrides={"RUN_SEED": None}, environ={}).seed == 1


def test_scientific_notation_for_integers():
    cfg = load_run_config(environ={"DETECTION_PULSES": "1e6"})
    assert cfg.detection.pulses == 1_000_000
    assert cfg.detection_config().n_pulses == 1_000_000


def test_fractional_integer_is_rejected():
    with pytest.raises(ConfigError, match="DETECTION_PULSES"):
        load_run_config(environ={"DETECTION_PULSES": "1.5"})


@pytest.mark.parametrize("text, message", [
    ("FOO=1\n", "unknown keys"),
    ("WAVEGUIDE_DELTA_N=abc\n", "WAVEGUIDE_DELTA_N"),
    ("HOM_FILTER_POLICY=nearest\n", "HOM_FILTER_POLICY"),
    ("CALIBRATION_MODE=guess\n", "CALIBRATION_MODE"),
    ("DETECTION_COUPLING=1.5\n", "invalid configuration"),
    ("WAVEGUIDE_LENGTH_MM=-3\n", "invalid configuration"),
    ("RUN_SELLMEIER_PATH=missing.env\n", "Sellmeier file not found"),
])
def test_invalid_files(tmp_path, text, message):
    path = write_config(tmp_path, text)
    with pytest.raises(ConfigError, match=message):
        load_run_config(path, environ={})


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(str(tmp_path / "absent.env"), environ={})


def test_unknown_override():
    with pytest.raises(ConfigError, match="unknown override"):
        load_run_config(overrides={"RUN_COLOUR": "red"}, environ={})


def test_environment_ignores_unrelated_variables():
    cfg = load_run_config(environ={"HOME": "/tmp", "PATH": "/bin"})
    assert cfg.seed == SEED


def test_keys_follow_section_prefixes():
    keys = config_keys()
    assert "DETECTION_REP_RATE_HZ" in keys
    assert "CHIP_ETA_SIGMA" in keys
    assert "OUTPUT_DIR" in keys
    assert all(key == key.upper() for key in keys)


def test_config_hash():
    base = load_run_config(environ={})
    digest = base.config_hash()
    assert re.fullmatch(r"[0-9a-f]{16}", digest)
    assert load_run_config(environ={}).config_hash() == digest
    assert load_run_config(overrides={"RUN_SEED": 99}, environ={}).config_hash() != digest
    assert load_run_config(overrides={"OUTPUT_DIR": "elsewhere"}, environ={}).config_hash() == digest


def test_hash_follows_sellmeier_contents_not_location(tmp_path):
    with open(load_run_config(environ={}).run.sellmeier_path) as f:
        coefficients = f.read()
    copy = tmp_path / "copy.env"
    copy.write_text(coefficients)
    moved = load_run_config(overrides={"RUN_SELLMEIER_PATH": str(copy)}, environ={})
    assert moved.config_hash() == load_run_config(environ={}).config_hash()
