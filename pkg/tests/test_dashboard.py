"""Tests for the in-memory experiment runner behind the dashboard"""

import re
from pathlib import Path

import pytest

from main import SessionSink, run_experiment
from src.utils.errors import DegenerateOnlyError
from src.utils.styles import CUSTOM_CSS, DASHBOARD_CLASSES

COMPONENTS_DIR = Path(__file__).resolve().parents[1] / "src" / "components"


def test_phasematch_in_memory():
    summary, tables, config_hash = run_experiment("phasematch", {"RUN_SEED": 3}, {})
    assert summary["lambda_s_nm"] == pytest.approx(732.5, abs=1.0)
    assert tables == {}
    assert len(config_hash) == 16


def test_perturbation_scan_tables():
    summary, tables, _ = run_experiment("perturb-scan", {}, {"eta_max": 0.1, "points": 5})
    assert list(tables) == ["perturb_scan.csv"]
    assert len(tables["perturb_scan.csv"]) == 5
    assert summary["eta_max"] == 0.1


def test_model_errors_propagate():
    with pytest.raises(DegenerateOnlyError):
        run_experiment("phasematch", {"WAVEGUIDE_DELTA_N": 0.0}, {})


def test_sink_ignores_binary_spectra():
    sink = SessionSink()
    sink.jsa(object(), "jsa.bin")
    sink.summary({"a": 1}, "a.json")
    assert sink.tables == {}
    assert sink.summaries == {"a.json": {"a": 1}}


def test_stylesheet_covers_rendered_classes():
    defined = set(re.findall(r"^\s*\.([\w-]+)\s*\{", CUSTOM_CSS, flags=re.M))
    rendered = set()
    for path in COMPONENTS_DIR.glob("*.py"):
        rendered |= set(re.findall(r"class='([\w-]+)'", path.read_text()))
    assert defined == rendered == set(DASHBOARD_CLASSES)
