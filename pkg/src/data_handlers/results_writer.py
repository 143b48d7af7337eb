"""
Writers for run outputs.

CSV tables carry a `#`-prefixed header with the config hash, the seed and,
as the last header line, a generation timestamp. Everything after the header
depends only on the configuration and the seed. Summaries are JSON with
sorted keys and no timestamp. Joint spectra have their own binary format.
"""

import json
import logging
import os
from datetime import datetime, timezone

import numpy as np

from src.models.spectrum import JointSpectrum
from src.utils.errors import OutputError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
JSA_MAGIC = b"JSA2"
JSA_HASH_BYTES = 16
JSA_HEADER = np.dtype([
    ("magic", "S4"),
    ("config_hash", f"S{JSA_HASH_BYTES}"),
    ("n_s", "<u4"),
    ("n_i", "<u4"),
    ("bounds", "<f8", (4,)),
])
JSA_DATA = np.dtype("<c16")


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    try:
        os.makedirs(parent, exist_ok=True)
    except OSError as e:
        raise OutputError(f"cannot create directory {parent}: {e}") from e


def write_csv(df, path, config_hash, seed):
    """
    Write a DataFrame with the provenance header.

    Args:
        df (DataFrame): Table to write
        path (str): Destination file
        config_hash (str): Hash of the resolved configuration
        seed (int): Run seed

    Returns:
        str: The path written
    """
    _ensure_parent(path)
    generated = datetime.now(timezone.utc).isoformat(timespec="seconds")
    try:
        with open(path, "w", newline="", encoding="utf-8") as f:
            f.write(f"# config_hash={config_hash}\n")
            f.write(f"# seed={seed}\n")
            f.write(f"# generated={generated}\n")
            df.to_csv(f, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    logger.info("wrote %s (%d rows)", path, len(df))
    return path


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_summary(summary, path, config_hash, seed):
    """Write headline numbers as sorted-key JSON next to the CSV outputs."""
    _ensure_parent(path)
    payload = {"config_hash": config_hash, "seed": seed, "results": _plain(summary)}
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, sort_keys=True, indent=2)
            f.write("\n")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    logger.info("wrote %s", path)
    return path


def write_jsa(path, js, config_hash=""):
    """
    Dump a joint spectrum: little-endian header `JSA2`, the config hash
    (16 ASCII bytes, NUL padded), n_s, n_i and the four grid bounds, followed
    by complex128 amplitudes in row-major (s, i) order.
    """
    encoded = config_hash.encode("ascii")
    if len(encoded) > JSA_HASH_BYTES:
        raise OutputError(f"config hash {config_hash!r} longer than {JSA_HASH_BYTES} bytes")
    _ensure_parent(path)
    header = np.zeros(1, dtype=JSA_HEADER)
    header["magic"] = JSA_MAGIC
    header["config_hash"] = encoded
    header["n_s"] = js.omega_s.size
    header["n_i"] = js.omega_i.size
    header["bounds"] = (js.omega_s[0], js.omega_s[-1], js.omega_i[0], js.omega_i[-1])
    try:
        with open(path, "wb") as f:
            f.write(header.tobytes())
            f.write(np.ascontiguousarray(js.amplitude, dtype=JSA_DATA).tobytes())
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e}") from e
    logger.info("wrote %s (%dx%d)", path, js.omega_s.size, js.omega_i.size)
    return path


def _read_jsa_file(path):
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as e:
        raise OutputError(f"cannot read {path}: {e}") from e
    if len(raw) < JSA_HEADER.itemsize:
        raise OutputError(f"{path} is too short to be a JSA file")
    header = np.frombuffer(raw, dtype=JSA_HEADER, count=1)[0]
    if bytes(header["magic"]) != JSA_MAGIC:
        raise OutputError(f"{path} is not a JSA file (bad magic)")
    return header, raw


def jsa_config_hash(path):
    """Config hash stored in the header of a JSA file."""
    header, _ = _read_jsa_file(path)
    return bytes(header["config_hash"]).rstrip(b"\0").decode("ascii")


def read_jsa(path, label=""):
    """Read a file produced by `write_jsa` back into a JointSpectrum."""
    header, raw = _read_jsa_file(path)
    n_s, n_i = int(header["n_s"]), int(header["n_i"])
    expected = JSA_HEADER.itemsize + n_s * n_i * JSA_DATA.itemsize
    if len(raw) != expected:
        raise OutputError(f"{path} has {len(raw)} bytes, expected {expected}")
    amplitude = np.frombuffer(raw, dtype=JSA_DATA, offset=JSA_HEADER.itemsize).reshape(n_s, n_i).astype(complex)
    s_min, s_max, i_min, i_max = (float(b) for b in header["bounds"])
    return JointSpectrum(
        omega_s=np.linspace(s_min, s_max, n_s),
        omega_i=np.linspace(i_min, i_max, n_i),
        amplitude=amplitude,
        label=label,
    )


class OutputSession:
    """
    Collects the files written during one command and removes them all if the
    command fails.

    Usage:
        with OutputSession(out_dir, config_hash, seed) as out:
            out.csv(df, "scan.csv")
    """

    def __init__(self, out_dir, config_hash, seed):
        self.out_dir = out_dir
        self.config_hash = config_hash
        self.seed = seed
        self.written = []

    def __enter__(self):
        try:
            os.makedirs(self.out_dir, exist_ok=True)
        except OSError as e:
            raise OutputError(f"cannot create output directory {self.out_dir}: {e}") from e
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            self.discard()
        return False

    def _track(self, name):
        path = os.path.join(self.out_dir, name)
        self.written.append(path)
        return path

    def csv(self, df, name):
        return write_csv(df, self._track(name), self.config_hash, self.seed)

    def summary(self, summary, name):
        return write_summary(summary, self._track(name), self.config_hash, self.seed)

    def jsa(self, js, name):
        return write_jsa(self._track(name), js, self.config_hash)

    def discard(self):
        for path in self.written:
            if os.path.exists(path):
                os.remove(path)
                logger.warning("removed partial output %s", path)
        self.written = []
