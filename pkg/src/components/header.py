"""
Header component for the photon-pair source dashboard.
"""

import streamlit as st

from src.utils.config import PAGE_ICON, PAGE_TITLE


def render_header():
    """
    Render the application header with title and subtitle.
    """
    st.markdown(f"<h1 class='main-header'>{PAGE_TITLE} {PAGE_ICON}</h1>", unsafe_allow_html=True)
    st.markdown(
        "<p class='subheader'>Phase matching, pair statistics and two-source interference "
        "of birefringent waveguide sources</p>",
        unsafe_allow_html=True,
    )
