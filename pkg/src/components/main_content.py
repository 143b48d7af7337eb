"""
Main content components for the photon-pair source dashboard.
"""

import json

import numpy as np
import streamlit as st

# x column plotted against the remaining numeric columns of each table
CHART_AXES = {
    "perturb_scan.csv": "eta",
    "spectrum_signal.csv": "wavelength_nm",
    "spectrum_idler.csv": "wavelength_nm",
    "schmidt.csv": "mode",
    "power_scan.csv": "power_mw",
    "hom_scan.csv": "delay_fs",
    "chip_histogram_signal.csv": "bin_low_nm",
    "chip_histogram_idler.csv": "bin_low_nm",
}


def _format(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def display_summary(summary):
    """
    Display the headline numbers of a run.

    Args:
        summary (dict): Flat or nested summary returned by an experiment
    """
    st.markdown("<div class='result-box'>", unsafe_allow_html=True)
    st.markdown("### Summary:")
    scalars = {k: v for k, v in summary.items() if isinstance(v, (int, float, bool, str))}
    columns = st.columns(min(4, max(1, len(scalars))))
    for i, (key, value) in enumerate(scalars.items()):
        columns[i % len(columns)].metric(key, _format(value))
    nested = {k: v for k, v in summary.items() if k not in scalars}
    if nested:
        with st.expander("More results", expanded=False):
            st.json(nested)
    st.markdown("</div>", unsafe_allow_html=True)


def display_tables(tables, config_hash):
    """
    Show every table of a run with a chart and a CSV download.

    Args:
        tables (dict): file name -> DataFrame
        config_hash (str): Hash embedded in the downloaded files
    """
    for name, df in tables.items():
        st.subheader(name)
        x = CHART_AXES.get(name)
        if x in df.columns and len(df) > 1:
            numeric = df.select_dtypes(include=[np.number])
            st.line_chart(numeric.set_index(x))
        st.dataframe(df, use_container_width=True)
        st.download_button(
            f"Download {name}",
            data=f"# config_hash={config_hash}\n" + df.to_csv(index=False, float_format="%.12g"),
            file_name=name,
            mime="text/csv",
        )


def display_error(message):
    st.markdown(f"<div class='error-response'>ERROR: {message}</div>", unsafe_allow_html=True)


def display_history(history):
    """
    Display previous runs in an expander.

    Args:
        history (list): List of (command, config_hash, summary) tuples
    """
    if history:
        with st.expander("Run History", expanded=False):
            for i, (command, config_hash, summary) in enumerate(history):
                st.markdown(f"*Run {i+1}:* `{command}` (config {config_hash})")
                st.code(json.dumps(summary, default=str, sort_keys=True)[:500])
                st.divider()
