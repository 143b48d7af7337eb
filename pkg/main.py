"""
Photon-Pair Source Array dashboard

Interactive front end over the same experiments the command line runs:
phase matching, spectra, pair statistics, two-source interference and
chip-level statistics. Start with `streamlit run main.py`.
"""

import argparse

import streamlit as st
from dotenv import load_dotenv

from src.cli import COMMANDS
from src.components.header import render_header
from src.components.main_content import display_error, display_history, display_summary, display_tables
from src.components.sidebar import render_sidebar
from src.data_handlers.config_loader import load_run_config
from src.utils.config import PAGE_ICON, PAGE_LAYOUT, PAGE_TITLE, SIDEBAR_STATE
from src.utils.errors import PhotonPairError
from src.utils.logger import setup_logging
from src.utils.styles import CUSTOM_CSS


class SessionSink:
    """Collects the tables and summaries an experiment would write to disk."""

    def __init__(self):
        self.tables = {}
        self.summaries = {}

    def csv(self, df, name):
        self.tables[name] = df

    def summary(self, summary, name):
        self.summaries[name] = summary

    def jsa(self, js, name):
        pass


def run_experiment(command, overrides, options):
    """
    Run one experiment in memory.

    Returns:
        tuple: (summary, tables, config_hash)
    """
    config = load_run_config(overrides=overrides)
    sink = SessionSink()
    summary = COMMANDS[command](config, argparse.Namespace(**options), sink)
    return summary, sink.tables, config.config_hash()


def main():
    """
    Main function to run the dashboard.
    """
    # Configure the page first (needs to be at the top)
    st.set_page_config(
        page_title=PAGE_TITLE,
        page_icon=PAGE_ICON,
        layout=PAGE_LAYOUT,
        initial_sidebar_state=SIDEBAR_STATE
    )
    st.markdown(CUSTOM_CSS, unsafe_allow_html=True)

    if 'history' not in st.session_state:
        st.session_state.history = []

    load_dotenv()
    setup_logging()

    render_header()
    command, overrides, options, run_button = render_sidebar()

    if run_button:
        with st.spinner(f"Running {command}..."):
            try:
                summary, tables, config_hash = run_experiment(command, overrides, options)
                st.session_state.last_run = (command, summary, tables, config_hash)
                st.session_state.history.append((command, config_hash, summary))
            except PhotonPairError as e:
                display_error(f"{type(e).__name__}: {str(e)}")
            except Exception as e:
                st.error(f"An error occurred: {str(e)}")

    if 'last_run' in st.session_state:
        command, summary, tables, config_hash = st.session_state.last_run
        st.caption(f"{command}, config {config_hash}")
        display_summary(summary)
        display_tables(tables, config_hash)
    else:
        st.info("Choose an experiment in the sidebar and press Run.")

    display_history(st.session_state.history)


if __name__ == "__main__":
    main()
