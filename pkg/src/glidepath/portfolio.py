"""Moments of the inflation/expense-adjusted portfolio return.

The adjusted return is r = (1 + real return) * (1 - E_R).  With equity
ratio alpha the portfolio is normal with mean m(alpha) and variance
v(alpha); everything downstream is written in terms of these two
functions and their derivatives.
"""
from dataclasses import dataclass
import math

import numpy as np

from .exceptions import DensityError, ParameterError

# Equity ratios are kept this far above the minimum-variance ratio so that
# v'(alpha) stays away from zero.
MVA_OFFSET = 1e-4


@dataclass(frozen=True)
class ReturnParams:
    mu_s: float
    sigma2_s: float
    mu_b: float
    sigma2_b: float
    cov_sb: float
    expense_ratio: float = 0.0

    def __post_init__(self):
        vals = (self.mu_s, self.sigma2_s, self.mu_b, self.sigma2_b, self.cov_sb, self.expense_ratio)
        if not all(np.isfinite(vals)):
            raise ParameterError("return parameters must be finite")
        if self.sigma2_s <= 0 or self.sigma2_b <= 0:
            raise ParameterError("variances must be positive")
        if self.cov_sb ** 2 > self.sigma2_s * self.sigma2_b:
            raise ParameterError("covariance exceeds the product of standard deviations")
        if not 0.0 <= self.expense_ratio < 1.0:
            raise ParameterError("expense ratio must lie in [0, 1)")
        if self.mu_s <= self.mu_b:
            raise ParameterError("stock mean must exceed bond mean")

    def with_expense_ratio(self, expense_ratio):
        return ReturnParams(self.mu_s, self.sigma2_s, self.mu_b, self.sigma2_b,
                            self.cov_sb, expense_ratio)

    def as_tuple(self):
        return (self.mu_s, self.sigma2_s, self.mu_b, self.sigma2_b, self.cov_sb, self.expense_ratio)


# Real (inflation-adjusted) return assumptions, at the precision used in the
# original control files.  Historical: 1926-2014 US stocks and bonds.
HISTORICAL = ReturnParams(0.082509, 0.0402696529, 0.021409, 0.0069605649, 0.0007344180)
# Forward-looking assumptions with lower means and higher correlation.
EVENSKY = ReturnParams(0.055, 0.042849, 0.0175, 0.004225, 0.0040365)


@dataclass(frozen=True)
class MomentBundle:
    """Moments of the adjusted return at one equity ratio.

    kh1 is the shift inside the squared term of h1, i.e. h1 is proportional
    to (r - m + kh1)^2 f(r), so kh1 = -2 v v' m' / theta.  It is nan when
    theta is zero.
    """
    alpha: float
    m: float
    m_prime: float
    v: float
    v_prime: float
    v_double_prime: float
    mva: float
    kh1: float
    theta: float

    @property
    def sd(self):
        return math.sqrt(self.v)


def mean_adjusted(params, alpha):
    k = 1.0 - params.expense_ratio
    return k * (1.0 + alpha * params.mu_s + (1.0 - alpha) * params.mu_b)


def variance_adjusted(params, alpha):
    k2 = (1.0 - params.expense_ratio) ** 2
    return k2 * (alpha * alpha * params.sigma2_s + (1.0 - alpha) ** 2 * params.sigma2_b
                 + 2.0 * alpha * (1.0 - alpha) * params.cov_sb)


def moment_derivatives(params, alpha):
    """Return (m', v', v'') at alpha."""
    k = 1.0 - params.expense_ratio
    k2 = k * k
    m_prime = k * (params.mu_s - params.mu_b)
    v_prime = 2.0 * k2 * (alpha * params.sigma2_s - (1.0 - alpha) * params.sigma2_b
                          + (1.0 - 2.0 * alpha) * params.cov_sb)
    v_double_prime = 2.0 * k2 * (params.sigma2_s + params.sigma2_b - 2.0 * params.cov_sb)
    return m_prime, v_prime, v_double_prime


def min_variance_alpha(params):
    denom = params.sigma2_s + params.sigma2_b - 2.0 * params.cov_sb
    if denom <= 0.0:
        raise ParameterError("perfectly correlated legs: minimum-variance ratio undefined")
    return (params.sigma2_b - params.cov_sb) / denom


def feasible_bounds(params):
    """Box [MVA + 1e-4, 1] that every equity ratio is clamped to."""
    return min_variance_alpha(params) + MVA_OFFSET, 1.0


def clamp_glidepath(params, ratios):
    lo, hi = feasible_bounds(params)
    return np.clip(np.asarray(ratios, dtype=float), lo, hi)


def moments(params, alpha):
    m = mean_adjusted(params, alpha)
    v = variance_adjusted(params, alpha)
    mp, vp, vpp = moment_derivatives(params, alpha)
    theta = v * vpp - 2.0 * vp * vp
    kh1 = -2.0 * vp * mp * v / theta if theta != 0.0 else math.nan
    return MomentBundle(alpha=float(alpha), m=m, m_prime=mp, v=v, v_prime=vp,
                        v_double_prime=vpp, mva=min_variance_alpha(params), kh1=kh1, theta=theta)


def gradient_constant(params, alpha):
    """K = v'/(2v) + m'^2/(2v'), the scale of every gradient element."""
    mp, vp, _ = moment_derivatives(params, alpha)
    if vp <= 0.0:
        raise DensityError(
            f"division by non-positive v' at alpha={alpha:.10f} (must exceed the minimum-variance ratio)")
    v = variance_adjusted(params, alpha)
    return vp / (2.0 * v) + mp * mp / (2.0 * vp)


def hessian_constants(mb):
    """(Q1, Q2, Q3) weighting P_h1, P_h2 and P_NR on the Hessian diagonal."""
    m, mp, v, vp, vpp, theta = mb.m, mb.m_prime, mb.v, mb.v_prime, mb.v_double_prime, mb.theta
    if theta == 0.0 or abs(theta) < 1e-12 * v * vpp:
        raise DensityError(f"Hessian diagonal does not exist for alpha={mb.alpha:.10f} (theta=0)")
    cross = 2.0 * vp * vp * mp * mp / (v * theta)
    q1 = theta / (2.0 * v * v) + cross
    q2 = (vp * vp + 2.0 * v * mp * mp) / (2.0 * v * v)
    q3 = -((vpp * v - vp * vp + 2.0 * v * mp * mp) / (2.0 * v * v) + cross)
    return q1, q2, q3
