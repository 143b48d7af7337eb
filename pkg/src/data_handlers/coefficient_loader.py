"""
Loading and saving of Sellmeier coefficient files.

The files are plain `KEY=value` text read with python-dotenv, using the keys
B1, B2, B3, C1, C2, C3, lambda_min and lambda_max (micrometers).
"""

import logging
import os
from functools import lru_cache

from dotenv import dotenv_values

from src.models.dispersion import SellmeierModel
from src.utils.config import SELLMEIER_PATH
from src.utils.errors import ConfigError, OutputError

logger = logging.getLogger(__name__)

TERM_KEYS = (("B1", "C1"), ("B2", "C2"), ("B3", "C3"))


def load_sellmeier(path):
    """
    Load a Sellmeier model from a key-value file.

    Args:
        path (str): Path to the coefficient file

    Returns:
        SellmeierModel: The parsed model

    Raises:
        OutputError: the file cannot be read
        ConfigError: a key is missing or not a number
    """
    if not os.path.exists(path):
        raise OutputError(f"Sellmeier file not found: {path}")
    values = dotenv_values(path)
    try:
        terms = tuple((float(values[b]), float(values[c])) for b, c in TERM_KEYS)
        valid_range = (float(values["lambda_min"]), float(values["lambda_max"]))
    except KeyError as e:
        raise ConfigError(f"Sellmeier file {path} is missing key {e}") from e
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Sellmeier file {path} has a non-numeric value: {e}") from e
    name = values.get("NAME") or os.path.splitext(os.path.basename(path))[0]
    logger.debug("loaded Sellmeier model %s from %s", name, path)
    return SellmeierModel(terms=terms, valid_range=valid_range, name=name)


def save_sellmeier(model, path):
    """
    Write a three-term Sellmeier model to a key-value file.

    Args:
        model (SellmeierModel): The model to save
        path (str): Destination file
    """
    if len(model.terms) != len(TERM_KEYS):
        raise ConfigError("only three-term models map onto the B1..C3 file format")
    lines = [f"NAME={model.name}"]
    for (b_key, c_key), (b, c) in zip(TERM_KEYS, model.terms):
        lines.append(f"{b_key}={b!r}")
        lines.append(f"{c_key}={c!r}")
    lines.append(f"lambda_min={model.valid_range[0]!r}")
    lines.append(f"lambda_max={model.valid_range[1]!r}")
    try:
        with open(path, "w", encoding="utf-8") as f:
            f.write("\n".join(lines) + "\n")
    except OSError as e:
        raise OutputError(f"Error saving Sellmeier file: {e}") from e


@lru_cache(maxsize=None)
def load_default_sellmeier():
    """Fused-silica model shipped in the data directory."""
    return load_sellmeier(SELLMEIER_PATH)
