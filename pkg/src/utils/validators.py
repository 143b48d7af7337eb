"""
Parameter validation utilities.

Each validator returns a tuple (is_valid, error_message) where error_message
is None when the value is valid. `require` turns a failed check into an
exception.
"""

import math

from src.utils.errors import DomainError


def validate_positive(name, value):
    """
    Check that a value is a finite number strictly greater than zero.

    Args:
        name (str): Parameter name used in the message
        value (float): The value to check

    Returns:
        tuple: (is_valid, error_message)
    """
    if value is None or not math.isfinite(value):
        return False, f"{name} must be a finite number, got {value!r}"
    if value <= 0:
        return False, f"{name} must be > 0, got {value}"
    return True, None


def validate_non_negative(name, value):
    if value is None or not math.isfinite(value):
        return False, f"{name} must be a finite number, got {value!r}"
    if value < 0:
        return False, f"{name} must be >= 0, got {value}"
    return True, None


def validate_range(name, value, low, high, include_low=True, include_high=True):
    """
    Check that low <= value <= high (bounds optionally exclusive).

    Returns:
        tuple: (is_valid, error_message)
    """
    if value is None or not math.isfinite(value):
        return False, f"{name} must be a finite number, got {value!r}"
    above = value >= low if include_low else value > low
    below = value <= high if include_high else value < high
    if not (above and below):
        left = "[" if include_low else "("
        right = "]" if include_high else ")"
        return False, f"{name} must lie in {left}{low}, {high}{right}, got {value}"
    return True, None


def validate_efficiency(name, value):
    return validate_range(name, value, 0.0, 1.0, include_low=False)


def validate_integer_at_least(name, value, minimum):
    if not isinstance(value, int) or isinstance(value, bool):
        return False, f"{name} must be an integer, got {value!r}"
    if value < minimum:
        return False, f"{name} must be >= {minimum}, got {value}"
    return True, None


def require(check, error_cls=DomainError):
    """
    Raise when a validator result is negative.

    Args:
        check (tuple): (is_valid, error_message) from a validator
        error_cls (type): Exception class to raise
    """
    is_valid, error_message = check
    if not is_valid:
        raise error_cls(error_message)
