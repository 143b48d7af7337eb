"""Tests for CSV, JSON and binary joint-spectrum outputs"""

import json

import numpy as np
import pandas as pd
import pytest

from src.data_handlers.results_writer import (
    OutputSession,
    jsa_config_hash,
    read_jsa,
    write_csv,
    write_jsa,
    write_summary,
)
from src.models.spectrum import JointSpectrum
from src.utils.errors import OutputError


@pytest.fixture
def table():
    return pd.DataFrame({"power_mw": [10.0, 20.0], "g2si": [160.49, 1 / 3], "counts": [5, 7]})


@pytest.fixture
def spectrum():
    omega_s = np.linspace(2.50e15, 2.60e15, 64)
    omega_i = np.linspace(2.20e15, 2.30e15, 80)
    amplitude = np.outer(np.hanning(64), np.hanning(80)) * np.exp(1j * np.linspace(0, 1, 80))[None, :]
    return JointSpectrum(omega_s=omega_s, omega_i=omega_i, amplitude=amplitude, label="wg")


def body(path):
    with open(path) as f:
        return [line for line in f if not line.startswith("# generated=")]


def test_csv_header(tmp_path, table):
    path = write_csv(table, str(tmp_path / "out.csv"), "abc123", 42)
    with open(path) as f:
        lines = f.read().splitlines()
    assert lines[0] == "# config_hash=abc123"
    assert lines[1] == "# seed=42"
    assert lines[2].startswith("# generated=")
    assert lines[3] == "power_mw,g2si,counts"
    assert lines[5] == "20,0.333333333333,7"
    loaded = pd.read_csv(path, comment="#")
    assert loaded["counts"].tolist() == [5, 7]


def test_csv_body_is_reproducible(tmp_path, table):
    first = write_csv(table, str(tmp_path / "a.csv"), "h", 1)
    second = write_csv(table, str(tmp_path / "b.csv"), "h", 1)
    assert body(first) == body(second)


def test_csv_creates_directories(tmp_path, table):
    path = write_csv(table, str(tmp_path / "nested" / "dir" / "out.csv"), "h", 1)
    assert (tmp_path / "nested" / "dir" / "out.csv").exists()
    assert path.endswith("out.csv")


def test_csv_write_failure(tmp_path, table):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OutputError):
        write_csv(table, str(blocker / "out.csv"), "h", 1)


def test_summary_is_plain_sorted_json(tmp_path):
    summary = {"visibility": np.float64(0.93), "count": np.int64(3), "flag": np.bool_(True),
               "missing": float("nan"), "values": np.array([1.0, 2.0])}
    path = write_summary(summary, str(tmp_path / "s.json"), "h", 5)
    text = (tmp_path / "s.json").read_text()
    data = json.loads(text)
    assert data == {
        "config_hash": "h",
        "seed": 5,
        "results": {"visibility": 0.93, "count": 3, "flag": True, "missing": None, "values": [1.0, 2.0]},
    }
    assert text.index('"count"') < text.index('"visibility"')
    assert path.endswith("s.json")


def test_jsa_file_layout(tmp_path, spectrum):
    path = write_jsa(str(tmp_path / "a.bin"), spectrum, "0123456789abcdef")
    raw = (tmp_path / "a.bin").read_bytes()
    assert raw[:4] == b"JSA2"
    assert raw[4:20] == b"0123456789abcdef"
    assert len(raw) == 4 + 16 + 4 + 4 + 32 + 64 * 80 * 16
    loaded = read_jsa(path, label="wg")
    assert np.array_equal(loaded.amplitude, spectrum.amplitude)
    assert np.allclose(loaded.omega_s, spectrum.omega_s, rtol=1e-15)
    assert np.allclose(loaded.omega_i, spectrum.omega_i, rtol=1e-15)


def test_jsa_bad_magic(tmp_path, spectrum):
    path = tmp_path / "a.bin"
    write_jsa(str(path), spectrum)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(OutputError, match="magic"):
        read_jsa(str(path))


def test_jsa_truncated(tmp_path, spectrum):
    path = tmp_path / "a.bin"
    write_jsa(str(path), spectrum)
    raw = path.read_bytes()
    path.write_bytes(raw[:-16])
    with pytest.raises(OutputError, match="expected"):
        read_jsa(str(path))
    path.write_bytes(raw[:10])
    with pytest.raises(OutputError, match="too short"):
        read_jsa(str(path))


def test_jsa_missing_file(tmp_path):
    with pytest.raises(OutputError):
        read_jsa(str(tmp_path / "absent.bin"))


def test_session_keeps_files_on_success(tmp_path, table):
    with OutputSession(str(tmp_path), "h", 1) as out:
        out.csv(table, "t.csv")
        out.summary({"a": 1}, "t.json")
    assert (tmp_path / "t.csv").exists()
    assert (tmp_path / "t.json").exists()


def test_session_removes_files_on_failure(tmp_path, table, spectrum):
    with pytest.raises(RuntimeError):
        with OutputSession(str(tmp_path), "h", 1) as out:
            out.csv(table, "t.csv")
            out.jsa(spectrum, "t.bin")
            raise RuntimeError("solver failed")
    assert list(tmp_path.iterdir()) == []


def test_session_stamps_spectra_with_config_hash(tmp_path, spectrum):
    with OutputSession(str(tmp_path), "5f2c9a0b1d3e4f67", 1) as out:
        path = out.jsa(spectrum, "t.bin")
    assert jsa_config_hash(path) == "5f2c9a0b1d3e4f67"


def test_jsa_without_hash_and_with_oversized_hash(tmp_path, spectrum):
    path = write_jsa(str(tmp_path / "a.bin"), spectrum)
    assert jsa_config_hash(path) == ""
    with pytest.raises(OutputError, match="longer"):
        write_jsa(str(tmp_path / "b.bin"), spectrum, "x" * 17)
