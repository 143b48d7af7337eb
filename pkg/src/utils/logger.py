"""
Logging setup shared by the CLI and the dashboard.
"""

import logging
import sys

from src.utils.config import LOG_FORMAT


def setup_logging(verbose=False):
    """
    Configure the root logger once.

    Args:
        verbose (bool): DEBUG level when True, INFO otherwise
    """
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )
