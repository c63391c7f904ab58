"""Small input checks shared by the public functions."""
import numbers

import numpy as np

from .exceptions import ParameterError


def check_probability(p, name="probability"):
    p = float(p)
    if not 0.0 <= p <= 1.0 or np.isnan(p):
        raise ParameterError(f"{name} must lie in [0, 1], got {p}")
    return p


def check_positive_int(n, name, minimum=1):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        raise ParameterError(f"{name} must be an integer, got {n!r}")
    if n < minimum:
        raise ParameterError(f"{name} must be >= {minimum}, got {n}")
    return int(n)


def check_alpha_level(a, name="alpha"):
    a = float(a)
    if not 0.0 < a <= 1.0:
        raise ParameterError(f"{name} must lie in (0, 1], got {a}")
    return a


def check_glidepath(ratios, name="glidepath"):
    """Return a finite 1-d float array of equity ratios in [0, 1]."""
    a = np.asarray(ratios, dtype=float)
    if a.ndim != 1 or a.size == 0:
        raise ParameterError(f"{name} must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(a)):
        raise ParameterError(f"{name} contains non-finite values")
    if np.any(a < 0.0) or np.any(a > 1.0):
        raise ParameterError(f"{name} ratios must lie in [0, 1]")
    return a


def check_withdrawal_rate(w):
    w = float(w)
    if not np.isfinite(w) or w <= 0.0:
        raise ParameterError(f"withdrawal rate must be positive, got {w}")
    return w
