"""Return densities f, g, h1, h2 and their closed-form CDFs.

f is the normal density of the adjusted return.  g, h1 and h2 are f
reweighted by a squared polynomial in (r - m); their probabilities turn
the gradient and Hessian of the success probability into differences of
ordinary success probabilities.  Each CDF is a linear combination of a
normal CDF and gamma CDFs evaluated at ((r - m) / sqrt(2 v))^2.
"""
from dataclasses import dataclass
from enum import Enum
import math

import numpy as np
from scipy.special import gamma as gamma_fn

from .exceptions import DensityError, ParameterError
from .special import combined_cdf, gamma_p

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class DensityKind(Enum):
    STANDARD = "f"
    GRADIENT = "g"
    HESSIAN_H1 = "h1"
    HESSIAN_H2 = "h2"


# Row layout used by the compiled kernels: leading, then weights on
# (1 -/+ P(5/2)), (1 - P(2)), (1 -/+ P(3/2)), (1 - P(1)), Phi.
_SHAPES = (2.5, 2.0, 1.5, 1.0)
_ALTERNATES = (True, False, True, False)


@dataclass(frozen=True)
class CdfCoefficients:
    leading: float
    terms: tuple  # ((weight, shape), ...) in the order they are summed
    normal_weight: float
    sign_alternation: tuple  # one flag per entry of terms

    def as_row(self):
        row = np.zeros(6)
        row[0] = self.leading
        row[5] = self.normal_weight
        for (w, shape) in self.terms:
            row[1 + _SHAPES.index(shape)] = w
        return row


def _require_special(kind, mb):
    if kind is DensityKind.STANDARD:
        return
    if mb.v_prime <= 0.0:
        raise DensityError(
            f"{kind.name} density needs alpha above the minimum-variance ratio (alpha={mb.alpha:.10f})")
    if kind is DensityKind.HESSIAN_H1:
        if mb.theta == 0.0 or abs(mb.theta) < 1e-12 * mb.v * mb.v_double_prime:
            raise DensityError(f"h1 density does not exist for alpha={mb.alpha:.10f} (theta=0)")


def coefficients(kind, mb):
    kind = DensityKind(kind)
    _require_special(kind, mb)
    v, vp, mp = mb.v, mb.v_prime, mb.m_prime
    if kind is DensityKind.STANDARD:
        return CdfCoefficients(1.0, (), 1.0, ())
    if kind is DensityKind.GRADIENT:
        c0 = 1.0 / (mp * mp * v * v + v * vp * vp)
        terms = ((vp * vp * v / 2.0, 1.5), (-vp * mp * v * math.sqrt(2.0 * v / math.pi), 1.0))
        return CdfCoefficients(c0, terms, mp * mp * v * v, (True, False))
    if kind is DensityKind.HESSIAN_H1:
        k = mb.kh1
        c0 = 1.0 / (v + k * k)
        terms = ((v / 2.0, 1.5), (-math.sqrt(2.0 * v / math.pi) * k, 1.0))
        return CdfCoefficients(c0, terms, k * k, (True, False))
    c0 = 2.0 / (vp * vp + 2.0 * v * mp * mp)
    terms = ((3.0 * vp * vp / 8.0, 2.5),
             (-math.sqrt(2.0 * v / math.pi) * vp * mp, 2.0),
             ((2.0 * mp * mp * v - vp * vp) / 4.0, 1.5),
             (math.sqrt(v / (2.0 * math.pi)) * vp * mp, 1.0))
    return CdfCoefficients(c0, terms, vp * vp / 4.0, (True, False, True, False))


def coefficient_row(kind, mb):
    return coefficients(kind, mb).as_row()


def pdf(kind, mb, r):
    kind = DensityKind(kind)
    _require_special(kind, mb)
    r = np.asarray(r, dtype=float)
    d = r - mb.m
    v, vp, mp = mb.v, mb.v_prime, mb.m_prime
    f = np.exp(-d * d / (2.0 * v)) / math.sqrt(2.0 * math.pi * v)
    if kind is DensityKind.STANDARD:
        out = f
    elif kind is DensityKind.GRADIENT:
        out = f * (vp * d + mp * v) ** 2 / (mp * mp * v * v + v * vp * vp)
    elif kind is DensityKind.HESSIAN_H1:
        out = f * (d + mb.kh1) ** 2 / (v + mb.kh1 ** 2)
    else:
        q = d * d * vp / (2.0 * v) + mp * d - vp / 2.0
        out = f * 2.0 * q * q / (vp * vp + 2.0 * v * mp * mp)
    return out if out.ndim else float(out)


def cdf(kind, mb, r):
    kind = DensityKind(kind)
    row = coefficient_row(kind, mb)
    sd = math.sqrt(mb.v)
    r_arr = np.asarray(r, dtype=float)
    flat = np.array([combined_cdf(x, mb.m, sd, row) for x in r_arr.ravel()])
    out = flat.reshape(r_arr.shape)
    return out if out.ndim else float(out)


def _check_order(n):
    if isinstance(n, bool) or int(n) != n or n not in (1, 2, 3, 4):
        raise ParameterError(f"moment order must be 1, 2, 3 or 4, got {n}")
    return int(n)


def truncated_power_integral(n, y, mu, sigma2):
    """Integral of (x - mu)^n exp(-(x - mu)^2 / (2 sigma2)) over (-inf, y]."""
    n = _check_order(n)
    if sigma2 <= 0:
        raise ParameterError("sigma2 must be positive")
    a = (n + 1) / 2.0
    full = (2.0 * sigma2) ** a * gamma_fn(a)  # integral of |x - mu|^n over the line
    if np.isposinf(y):
        return 0.5 * full * ((-1) ** n + 1)
    if np.isneginf(y):
        return 0.0
    u = (y - mu) ** 2 / (2.0 * sigma2)
    p = gamma_p(a, u)
    if y <= mu:
        return 0.5 * full * (-1) ** n * (1.0 - p)
    return 0.5 * full * ((-1) ** n + p)


def gaussian_central_moment(n, sigma2):
    """Integral of x^n exp(-x^2 / (2 sigma2)) over the real line."""
    n = _check_order(n)
    if n % 2:
        return 0.0
    sigma = math.sqrt(sigma2)
    return _SQRT_2PI * sigma ** (n + 1) * (1.0 if n == 2 else 3.0)
