"""Small input-validation helpers used by constructors and estimators."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError


def require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def require_positive(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
    return value


def require_nonnegative(name: str, value: float) -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0.0:
        raise ConfigError(f"{name} must be >= 0, got {value!r}")
    return value


def as_float_array(name: str, values, *, ndim: int = 1) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != ndim:
        raise ConfigError(f"{name} must be a {ndim}-d array, got shape {arr.shape}")
    return arr


def require_finite_array(name: str, values, *, ndim: int = 1) -> np.ndarray:
    arr = as_float_array(name, values, ndim=ndim)
    if arr.size and not np.isfinite(arr).all():
        raise ConfigError(f"{name} contains non-finite values")
    return arr
