"""
Run configuration.

A run is described by one dotenv-style file of `SECTION_KEY=value` lines,
read with python-dotenv. Values are resolved with the precedence

    built-in defaults < config file < environment variables < command-line flags

and the fully resolved configuration is hashed so that every output can be
traced back to the exact inputs that produced it.
"""

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields

from dotenv import dotenv_values

from src.data_handlers.coefficient_loader import load_default_sellmeier, load_sellmeier
from src.models.phasematch import WaveguideSpec
from src.models.spectrum import GridConfig, PumpEnvelope
from src.models.tmsv import PumpCalibration
from src.simulation.hom import FILTER_POLICIES, HomScanConfig, stage_delay_grid
from src.simulation.montecarlo import detection_from_components
from src.utils import config as defaults
from src.utils.errors import ConfigError, DomainError

logger = logging.getLogger(__name__)

CALIBRATION_MODES = ("r_anchor", "g2si_anchor")


@dataclass(frozen=True)
class RunSection:
    seed: int = defaults.SEED
    sellmeier_path: str = defaults.SELLMEIER_PATH


@dataclass(frozen=True)
class WaveguideSection:
    delta_n: float = defaults.DELTA_N
    length_mm: float = defaults.LENGTH_M * 1e3
    pump_nm: float = defaults.PUMP_WAVELENGTH_M * 1e9


@dataclass(frozen=True)
class PumpSection:
    fwhm_nm: float = defaults.PUMP_FWHM_M * 1e9


@dataclass(frozen=True)
class CalibrationSection:
    mode: str = "r_anchor"
    power_mw: float = defaults.POWER_RANGE_MW[1]
    value: float = defaults.KAPPA_PER_MW * defaults.POWER_RANGE_MW[1]
    max_power_mw: float = defaults.POWER_RANGE_MW[1]


@dataclass(frozen=True)
class DetectionSection:
    rep_rate_hz: float = defaults.REP_RATE_HZ
    coupling: float = defaults.COUPLING_EFFICIENCY
    detector_qe: float = defaults.DETECTOR_QE
    dark_rate_hz: float = defaults.DARK_RATE_HZ
    window_ns: float = defaults.COINCIDENCE_WINDOW_S * 1e9
    pulses: int = defaults.N_PULSES
    batch_size: int = defaults.BATCH_SIZE
    workers: int = 1


@dataclass(frozen=True)
class ChipSection:
    count: int = defaults.CHIP_COUNT
    signal_std_nm: float = defaults.CHIP_SIGNAL_STD_M * 1e9
    # negative: calibrate from signal_std_nm
    eta_sigma: float = -1.0
    hom_groups: int = defaults.HOM_GROUPS


@dataclass(frozen=True)
class HomSection:
    points: int = defaults.HOM_POINTS
    step_mm: float = defaults.HOM_STAGE_STEP_M * 1e3
    pulses_per_point: int = defaults.HOM_PULSES_PER_POINT
    mean_pairs: float = defaults.HOM_MEAN_PAIRS
    filter_policy: str = "common"


@dataclass(frozen=True)
class GridSection:
    size: int = defaults.GRID_SIZE
    span_bandwidths: float = defaults.GRID_SPAN_BANDWIDTHS


@dataclass(frozen=True)
class OutputSection:
    dir: str = defaults.OUTPUT_DIR


SECTIONS = {
    "RUN": ("run", RunSection),
    "WAVEGUIDE": ("waveguide", WaveguideSection),
    "PUMP": ("pump", PumpSection),
    "CALIBRATION": ("calibration", CalibrationSection),
    "DETECTION": ("detection", DetectionSection),
    "CHIP": ("chip", ChipSection),
    "HOM": ("hom", HomSection),
    "GRID": ("grid", GridSection),
    "OUTPUT": ("output", OutputSection),
}


@dataclass(frozen=True)
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    waveguide: WaveguideSection = field(default_factory=WaveguideSection)
    pump: PumpSection = field(default_factory=PumpSection)
    calibration: CalibrationSection = field(default_factory=CalibrationSection)
    detection: DetectionSection = field(default_factory=DetectionSection)
    chip: ChipSection = field(default_factory=ChipSection)
    hom: HomSection = field(default_factory=HomSection)
    grid: GridSection = field(default_factory=GridSection)
    output: OutputSection = field(default_factory=OutputSection)

    @property
    def seed(self):
        return self.run.seed

    def config_hash(self):
        """SHA-256 of the canonical JSON of everything except the output location, 16 hex chars."""
        payload = asdict(self)
        payload.pop("output")
        payload["run"]["sellmeier_path"] = _file_digest(self.run.sellmeier_path)
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]

    def material(self):
        if os.path.abspath(self.run.sellmeier_path) == os.path.abspath(defaults.SELLMEIER_PATH):
            return load_default_sellmeier()
        return load_sellmeier(self.run.sellmeier_path)

    def waveguide_spec(self, label="wg"):
        return WaveguideSpec(
            delta_n=self.waveguide.delta_n,
            length=self.waveguide.length_mm * 1e-3,
            pump_wavelength=self.waveguide.pump_nm * 1e-9,
            label=label,
            fabrication_meta=dict(defaults.FABRICATION_META),
            material=self.material(),
        )

    def pump_envelope(self):
        return PumpEnvelope(center_wavelength=self.waveguide.pump_nm * 1e-9, bandwidth_fwhm=self.pump.fwhm_nm * 1e-9)

    def pump_calibration(self):
        power_range = (0.0, self.calibration.max_power_mw)
        if self.calibration.mode == "g2si_anchor":
            return PumpCalibration.from_g2si_anchor(self.calibration.power_mw, self.calibration.value, power_range)
        return PumpCalibration.from_anchor(self.calibration.power_mw, self.calibration.value, power_range)

    def detection_config(self, n_pulses=None):
        d = self.detection
        return detection_from_components(
            coupling=d.coupling,
            detector_qe=d.detector_qe,
            dark_rate_hz=d.dark_rate_hz,
            rep_rate=d.rep_rate_hz,
            coincidence_window=d.window_ns * 1e-9,
            n_pulses=n_pulses or d.pulses,
            seed=self.run.seed,
            batch_size=d.batch_size,
            workers=d.workers,
        )

    def hom_scan_config(self):
        return HomScanConfig(
            delay_grid=tuple(stage_delay_grid(self.hom.points, self.hom.step_mm * 1e-3)),
            n_pulses_per_point=self.hom.pulses_per_point,
        )

    def grid_config(self):
        return GridConfig(size_s=self.grid.size, size_i=self.grid.size, span_bandwidths=self.grid.span_bandwidths)

    def validate(self):
        """Build every model object once so that invalid values fail at load time."""
        if not os.path.exists(self.run.sellmeier_path):
            raise ConfigError(f"Sellmeier file not found: {self.run.sellmeier_path}")
        if self.calibration.mode not in CALIBRATION_MODES:
            raise ConfigError(f"CALIBRATION_MODE must be one of {CALIBRATION_MODES}, got {self.calibration.mode!r}")
        if self.hom.filter_policy not in FILTER_POLICIES:
            raise ConfigError(f"HOM_FILTER_POLICY must be one of {FILTER_POLICIES}, got {self.hom.filter_policy!r}")
        try:
            self.waveguide_spec()
            self.pump_envelope()
            self.pump_calibration()
            self.detection_config()
            self.hom_scan_config()
            self.grid_config()
        except DomainError as e:
            raise ConfigError(f"invalid configuration: {e}") from e
        return self


def _file_digest(path):
    try:
        with open(path, "rb") as f:
            return hashlib.sha256(f.read()).hexdigest()
    except OSError:
        return os.path.basename(path)


def config_keys():
    """Every accepted key with its section attribute, field name and type."""
    keys = {}
    for prefix, (attr, section) in SECTIONS.items():
        for f in fields(section):
            keys[f"{prefix}_{f.name.upper()}"] = (attr, f.name, f.type)
    return keys


def _parse(key, raw, kind):
    try:
        if kind is int:
            try:
                return int(raw)
            except ValueError:
                number = float(raw)
                if not number.is_integer():
                    raise
                return int(number)
        if kind is float:
            return float(raw)
        return str(raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind.__name__}") from e


def load_run_config(path=None, overrides=None, environ=None):
    """
    Resolve a run configuration.

    Args:
        path (str): Config file, optional
        overrides (dict): KEY -> value from command-line flags
        environ (dict): Environment, default os.environ

    Returns:
        RunConfig: Validated configuration

    Raises:
        ConfigError: unknown keys, unparsable or invalid values, missing file
    """
    keys = config_keys()
    values = {}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        from_file = dotenv_values(path)
        unknown = sorted(set(from_file) - set(keys))
        if unknown:
            raise ConfigError(f"unknown keys in {path}: {', '.join(unknown)}")
        values.update({k: v for k, v in from_file.items() if v is not None})
        sellmeier = values.get("RUN_SELLMEIER_PATH")
        if sellmeier and not os.path.isabs(sellmeier):
            values["RUN_SELLMEIER_PATH"] = os.path.join(os.path.dirname(os.path.abspath(path)), sellmeier)
        logger.debug("read %d keys from %s", len(from_file), path)
    environ = os.environ if environ is None else environ
    values.update({k: environ[k] for k in keys if k in environ})
    for key, value in (overrides or {}).items():
        if key not in keys:
            raise ConfigError(f"unknown override {key}")
        if value is not None:
            values[key] = value

    sections = {attr: {} for attr, _ in SECTIONS.values()}
    for key, raw in values.items():
        attr, name, kind = keys[key]
        sections[attr][name] = raw if isinstance(raw, kind) else _parse(key, raw, kind)
    built = {attr: section(**sections[attr]) for attr, section in SECTIONS.values()}
    return RunConfig(**built).validate()
