"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateDataError, InvalidSpecError


def as_float_array(values, name: str = "values", min_length: int = 1) -> np.ndarray:
    """Coerce to a contiguous 1-d float64 array and check it is finite.

    Accepts anything numpy can turn into a 1-d array, including a
    TimeSeries (via its ``samples`` attribute).
    """
    samples = getattr(values, "samples", values)
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 1:
        raise InvalidSpecError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise DegenerateDataError(
            f"{name} must have at least {min_length} samples, got {arr.size}"
        )
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise InvalidSpecError(f"{name} contains a non-finite value at index {bad}")
    return np.ascontiguousarray(arr)


def check_positive(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise InvalidSpecError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_positive_int(value, name: str) -> int:
    if value != int(value):
        raise InvalidSpecError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value <= 0:
        raise InvalidSpecError(f"{name} must be positive, got {value}")
    return value


def check_nonnegative_int(value, name: str) -> int:
    if value != int(value):
        raise InvalidSpecError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < 0:
        raise InvalidSpecError(f"{name} must not be negative, got {value}")
    return value


def check_fraction(value, name: str, *, open_ends: bool = True) -> float:
    value = float(value)
    ok = 0.0 < value < 1.0 if open_ends else 0.0 <= value <= 1.0
    if not np.isfinite(value) or not ok:
        bounds = "(0, 1)" if open_ends else "[0, 1]"
        raise InvalidSpecError(f"{name} must lie in {bounds}, got {value!r}")
    return value


def check_nonconstant(arr: np.ndarray, name: str) -> None:
    if arr.size == 0 or np.ptp(arr) == 0.0:
        raise DegenerateDataError(f"{name} has zero variance, nothing to estimate")
