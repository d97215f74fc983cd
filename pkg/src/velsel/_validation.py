"""Input checks shared by the estimator front-end."""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array


def check_phase_space(X):
    """(n, 2) float array of [x_um, v_um_per_ms] rows, finite, n >= 1."""
    X = check_array(X, dtype=np.float64, ensure_min_samples=1)
    if X.shape[1] != 2:
        raise ValueError(f"expected 2 columns [x, v], got {X.shape[1]}")
    return X


def check_column(X, name="U0"):
    """Single-feature input as a flat float array."""
    X = check_array(X, dtype=np.float64, ensure_2d=False, ensure_min_samples=1)
    X = X.reshape(len(X), -1)
    if X.shape[1] != 1:
        raise ValueError(f"expected one column of {name}, got {X.shape[1]}")
    return X[:, 0]


def check_scalar(value, name, lower=None, strict=False, allow_none=False):
    if value is None and allow_none:
        return None
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise TypeError(f"{name} must be a real number, got {type(value).__name__}")
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    if lower is not None and (value <= lower if strict else value < lower):
        op = ">" if strict else ">="
        raise ValueError(f"{name} must be {op} {lower}, got {value}")
    return value
