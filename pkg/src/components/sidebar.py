"""
Sidebar components for the photon-pair source dashboard.
"""

import streamlit as st

from src.simulation.hom import FILTER_POLICIES
from src.utils.config import DEFAULT_POWERS_MW, DELTA_N, LENGTH_M, PUMP_FWHM_M, PUMP_WAVELENGTH_M, SEED

EXPERIMENTS = {
    "Phase matching": "phasematch",
    "Perturbation scan": "perturb-scan",
    "Filtered spectra": "spectra",
    "Joint spectrum": "jsa",
    "Power scan": "power-scan",
    "Heralded g2 (HBT)": "hbt",
    "Two-source interference": "hom",
    "Chip statistics": "chip",
}


def _experiment_options(command):
    """Widgets for the options of one experiment, returned as a dict of CLI option names."""
    options = {}
    if command == "perturb-scan":
        options["eta_max"] = st.slider("Maximum perturbation η", 0.01, 0.45, 0.2, 0.01)
        options["points"] = st.number_input("Grid points", min_value=2, max_value=1001, value=101)
    elif command in ("spectra", "jsa"):
        options["filtered"] = command == "spectra" or st.checkbox("Apply detection filters", value=False)
        options["narrowband"] = st.checkbox("Add 1 nm bandpass filters", value=False)
    elif command == "power-scan":
        text = st.text_input("Pump powers (mW)", ",".join(f"{p:g}" for p in DEFAULT_POWERS_MW))
        options["powers"] = tuple(float(p) for p in text.split(",") if p.strip())
    elif command == "hbt":
        options["power_mw"] = st.number_input("Pump power (mW)", min_value=0.0, max_value=150.0, value=10.0)
        options["splitter_ratio"] = st.slider("Splitter ratio", 0.05, 0.95, 0.5, 0.05)
    elif command == "hom":
        options["eta_a"] = st.number_input("η of source A", min_value=-0.2, max_value=0.2, value=0.0, format="%.4f")
        options["eta_b"] = st.number_input("η of source B", min_value=-0.2, max_value=0.2, value=0.0, format="%.4f")
        options["policy"] = st.selectbox("Filter placement", FILTER_POLICIES)
    return options


def render_sidebar():
    """
    Render the experiment selector and its parameters.

    Returns:
        tuple: (command, overrides, options, run_button)
    """
    with st.sidebar:
        st.title("Experiment")
        label = st.selectbox("Choose an experiment", list(EXPERIMENTS))
        command = EXPERIMENTS[label]

        tab1, tab2 = st.tabs(["Parameters", "About"])
        with tab1:
            with st.expander("🔧 Waveguide and pump", expanded=True):
                delta_n = st.number_input("Birefringence Δn", min_value=0.0, value=DELTA_N, format="%.2e")
                length_mm = st.number_input("Length (mm)", min_value=0.1, value=LENGTH_M * 1e3)
                pump_nm = st.number_input("Pump wavelength (nm)", min_value=400.0, max_value=2000.0,
                                          value=PUMP_WAVELENGTH_M * 1e9)
                fwhm_nm = st.number_input("Pump bandwidth FWHM (nm)", min_value=0.05, value=PUMP_FWHM_M * 1e9)
            with st.expander("🎲 Simulation", expanded=False):
                seed = st.number_input("Seed", min_value=0, value=SEED, step=1)
                pulses = st.number_input("Pulses per run", min_value=1_000, value=1_000_000, step=100_000)
                hom_pulses = st.number_input("Pulses per delay point", min_value=1_000, value=10_000_000,
                                             step=1_000_000)
            with st.expander("⚙️ Experiment options", expanded=True):
                options = _experiment_options(command)

        with tab2:
            st.markdown("""
            ### About

            Simulates arrays of photon-pair sources written into one glass chip:

            *Experiments:*
            - Phase-matched wavelengths and their sensitivity to birefringence
            - Joint spectra, filtering and heralded purity
            - Pair statistics, coincidence rates and heralded g2
            - Two-source interference between sources of the array

            The command line writes the same tables as CSV files.
            """)

        st.divider()
        run_button = st.button("Run", use_container_width=True)
        st.caption("Results are deterministic for a fixed seed")

    overrides = {
        "RUN_SEED": int(seed),
        "WAVEGUIDE_DELTA_N": delta_n,
        "WAVEGUIDE_LENGTH_MM": length_mm,
        "WAVEGUIDE_PUMP_NM": pump_nm,
        "PUMP_FWHM_NM": fwhm_nm,
        "DETECTION_PULSES": int(pulses),
        "HOM_PULSES_PER_POINT": int(hom_pulses),
    }
    if command == "hom":
        overrides["HOM_FILTER_POLICY"] = options["policy"]
    return command, overrides, options, run_button
