"""Large-sample two-proportion tests for simulated success probabilities."""
from dataclasses import dataclass
import math

from scipy.stats import norm

from .exceptions import ParameterError
from .validation import check_alpha_level


@dataclass(frozen=True)
class ProportionSample:
    p_hat: float
    n: int

    def __post_init__(self):
        if not 0.0 <= self.p_hat <= 1.0:
            raise ParameterError(f"p_hat must lie in [0, 1], got {self.p_hat}")
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")


def equality_test(a, b):
    """Two-sided test of H0: p_a == p_b with the pooled variance.

    Returns (t_stat, p_value).
    """
    pooled = (a.n * a.p_hat + b.n * b.p_hat) / (a.n + b.n)
    var = pooled * (1.0 - pooled) * (1.0 / a.n + 1.0 / b.n)
    if var <= 0.0:
        return 0.0, 1.0 if a.p_hat == b.p_hat else 0.0
    t = (a.p_hat - b.p_hat) / math.sqrt(var)
    return t, float(2.0 * norm.sf(abs(t)))


def noninferiority_test(new, base, alpha):
    """One-sided test of H0: p_new >= p_base with unpooled variance.

    Returns (t_stat, p_value, reject).  The critical region is t < -Z_alpha,
    so reject iff p_value < alpha; at alpha = 0.5 that is new < base.
    Rejecting means the new sample is inferior, which stops a simulated climb.
    """
    alpha = check_alpha_level(alpha)
    var = new.p_hat * (1.0 - new.p_hat) / new.n + base.p_hat * (1.0 - base.p_hat) / base.n
    diff = new.p_hat - base.p_hat
    if var <= 0.0:
        if diff >= 0.0:
            return 0.0, 1.0, False
        return -math.inf, 0.0, True
    t = diff / math.sqrt(var)
    p = float(norm.cdf(t))
    return t, p, p < alpha
