"""Input checks shared by the estimator wrappers and the experiment harness."""

import numbers

import numpy as np

from .exceptions import InvalidParameterError


def check_channel(h, n_ant=None):
    """Return ``h`` as a finite complex array of shape (n_ue, n_rrh, n_ant).

    A 2-D input is read as a single-RRH channel ``(n_ue, n_ant)``.
    """
    arr = np.asarray(h)
    if arr.ndim == 2:
        arr = arr[:, None, :]
    if arr.ndim != 3 or 0 in arr.shape:
        raise InvalidParameterError(f"channel must have shape (n_ue, n_rrh, n_ant), got {np.shape(h)}")
    if not np.issubdtype(arr.dtype, np.number):
        raise InvalidParameterError(f"channel must be numeric, got dtype {arr.dtype}")
    arr = arr.astype(complex)
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError("channel contains NaN or infinite entries")
    if n_ant is not None and arr.shape[2] != n_ant:
        raise InvalidParameterError(f"channel has {arr.shape[2]} antennas per RRH, expected {n_ant}")
    return arr


def check_random_state(seed):
    """Turn None, an int or a Generator into a numpy Generator."""
    if seed is None or isinstance(seed, (numbers.Integral, np.integer)):
        return np.random.default_rng(seed)
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    raise InvalidParameterError(f"cannot seed a Generator from {seed!r}")


def check_positive(value, name):
    """Scalar or array of strictly positive finite numbers."""
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise InvalidParameterError(f"{name} must be positive and finite, got {value!r}")
    return value
