"""
Configuration settings for the photon-pair source toolkit.
Contains paths, physical defaults, simulation settings and UI settings.
"""

import os
from pathlib import Path

# Base directories
BASE_DIR = Path(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))
DATA_DIR = os.path.join(BASE_DIR, "data")
OUTPUT_DIR = os.path.join(BASE_DIR, "results")

# File paths
SELLMEIER_PATH = os.path.join(DATA_DIR, "fused_silica_sellmeier.env")
DEFAULT_CONFIG_PATH = os.path.join(DATA_DIR, "default.env")
GSI_ANCHOR_CONFIG_PATH = os.path.join(DATA_DIR, "gsi_anchor.env")

# Waveguide defaults
DELTA_N = 5.72e-5     # pair within 1 nm of the measured 732.5/833.5 nm
LENGTH_M = 20e-3
PUMP_WAVELENGTH_M = 780e-9
FABRICATION_META = {
    "pulse_energy_nJ": "260",
    "writing_velocity_mm_s": "1.268",
    "depth_um": "75",
    "writing_wavelength_nm": "513",
    "writing_rep_rate_MHz": "1",
    "writing_pulse_duration_fs": "290",
}

# Phase-matching solver settings
ROOT_TOLERANCE_K = 1e-6          # 1/m
BRACKET_STEP_M = 1e-9            # wavelength-equivalent scan step
MAX_BRACKET_STEPS = 20000
SPECTROMETER_RESOLUTION_M = 0.2e-9

# Pump and squeezing calibration
PUMP_FWHM_M = 2e-9
KAPPA_PER_MW = 0.545 / 150.0
POWER_RANGE_MW = (0.0, 150.0)
DEFAULT_POWERS_MW = (10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0,
                     90.0, 100.0, 110.0, 120.0, 130.0, 140.0, 150.0)
# heralded g2 grid, mean pair number below 0.04 under the 150 mW anchor
HBT_POWERS_MW = (10.0, 20.0, 30.0, 40.0, 50.0)
GSI_ANCHOR_POWER_MW = 10.0
GSI_ANCHOR_VALUE = 160.49

# Fock truncation
TAIL_BOUND = 1e-12
MAX_TRUNCATION = 5000

# Spectral grid
GRID_SIZE = 256
GRID_SPAN_BANDWIDTHS = 6.0
MIN_GRID_SIZE = 64

# Filters (Methods: dichroic-arm SP/LP, two 12 nm tunable bandpass, 1 nm for HOM)
BANDPASS_ORDER = 4
EDGE_ORDER = 8
WIDE_BANDPASS_M = 12e-9
NARROW_BANDPASS_M = 1e-9
DICHROIC_EDGE_M = 780e-9

# Detection
REP_RATE_HZ = 80e6
COUPLING_EFFICIENCY = 0.8
DETECTOR_QE = 0.8
DARK_RATE_HZ = 100.0
COINCIDENCE_WINDOW_S = 1e-9
N_PULSES = 10_000_000
BATCH_SIZE = 1 << 20
SEED = 20240601

# HOM
HOM_STAGE_STEP_M = 0.02e-3
HOM_POINTS = 121
HOM_PULSES_PER_POINT = 100_000_000
HOM_MEAN_PAIRS = 0.02
HOM_MU_LIMIT = 0.2

# Chip
CHIP_COUNT = 128
CHIP_SIGNAL_STD_M = 0.4e-9
HOM_GROUPS = 10
HISTOGRAM_BIN_M = 0.1e-9

# Logging
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# UI settings
PAGE_TITLE = "Photon-Pair Source Array"
PAGE_ICON = "🔬"
PAGE_LAYOUT = "wide"
SIDEBAR_STATE = "expanded"
