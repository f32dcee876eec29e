"""Input validation helpers in the spirit of ``sklearn.utils.validation``."""

from numbers import Real

import numpy as np
from sklearn.utils import check_array

from .exceptions import InputError


def check_points(X, *, dimension=None, name="points"):
    """Return ``X`` as a finite float array of shape ``(m, n)``.

    1-D input is read as ``m`` points on the real line.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    try:
        X = check_array(X, dtype=np.float64, ensure_2d=True,
                        ensure_all_finite=True, copy=True)
    except ValueError as exc:
        raise InputError(f"{name}: {exc}") from None
    if dimension is not None and X.shape[1] != dimension:
        raise InputError(f"{name}: expected dimension {dimension}, got {X.shape[1]}")
    return X


def check_vector(x, dimension=None, *, name="x"):
    x = np.asarray(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(x)):
        raise InputError(f"{name} must be finite")
    if dimension is not None and x.size != dimension:
        raise InputError(f"{name}: expected dimension {dimension}, got {x.size}")
    return x


def check_weights(w, m, *, atol=1e-9):
    """Validate a probability vector of length ``m``; ``None`` means uniform."""
    if w is None:
        return np.full(m, 1.0 / m)
    w = np.asarray(w, dtype=float).reshape(-1)
    if w.size != m:
        raise InputError(f"weights: expected {m} entries, got {w.size}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InputError("weights must be finite and nonnegative")
    total = w.sum()
    if abs(total - 1.0) > atol:
        raise InputError(f"weights must sum to 1 (got {total!r})")
    return w / total


def check_positive(value, name, *, strict=True):
    if not isinstance(value, Real) or not np.isfinite(value):
        raise InputError(f"{name} must be a finite real number")
    if value < 0 or (strict and value == 0):
        raise InputError(f"{name} must be {'positive' if strict else 'nonnegative'}, got {value}")
    return float(value)


def check_open_unit(value, name):
    value = check_positive(value, name)
    if not value < 1:
        raise InputError(f"{name} must lie in (0, 1), got {value}")
    return value
