"""Standardized-return tools for studying the shape of the success surface.

Writing each return as sqrt(v) z + m turns the ruin condition at time t
into z_t > ZF(t-1) = (RF(t-1) - m) / sqrt(v).  For one period the success
probability is 1 - Phi(ZF(0)), so its shape in alpha is the shape of ZF(0).
For two periods the difference between two glidepaths is an expectation
over z_1 of Phi(ZF_b(1)) - Phi(ZF_a(1)), approximated on a grid of
rectangles.  These checks are how the surface is shown to be not
quasi-concave.
"""
from dataclasses import dataclass
import math

import numpy as np
from scipy.special import ndtr

from .exceptions import ParameterError
from .portfolio import mean_adjusted, min_variance_alpha, moment_derivatives, variance_adjusted
from .ruin import success_probability_mc
from .validation import check_glidepath, check_positive_int, check_probability, check_withdrawal_rate


def zf0(params, alpha, withdrawal_rate):
    """Standardized withdrawal rate at t = 1: (W_R - m) / sqrt(v)."""
    return (withdrawal_rate - mean_adjusted(params, alpha)) / math.sqrt(variance_adjusted(params, alpha))


def zf0_derivative(params, alpha, withdrawal_rate):
    m, v = mean_adjusted(params, alpha), variance_adjusted(params, alpha)
    mp, vp, _ = moment_derivatives(params, alpha)
    return (m - withdrawal_rate) * vp / (2.0 * v ** 1.5) - mp / math.sqrt(v)


def zf0_second_derivative(params, alpha, withdrawal_rate):
    m, v = mean_adjusted(params, alpha), variance_adjusted(params, alpha)
    mp, vp, vpp = moment_derivatives(params, alpha)
    num = (m - withdrawal_rate) * (v * vpp - 1.5 * vp * vp) + 2.0 * mp * v * vp
    return num / (2.0 * v ** 2.5)


def critical_residual(params, alpha, withdrawal_rate):
    """[m - RF(0)] v' - 2 v m', zero at a critical point of ZF(0)."""
    m, v = mean_adjusted(params, alpha), variance_adjusted(params, alpha)
    mp, vp, _ = moment_derivatives(params, alpha)
    return (m - withdrawal_rate) * vp - 2.0 * v * mp


def critical_alpha_single_period(params, withdrawal_rate):
    """The single alpha where d ZF(0)/d alpha vanishes (closed form)."""
    wr = check_withdrawal_rate(withdrawal_rate)
    p = params
    dmu = p.mu_s - p.mu_b
    c = 1.0 + p.mu_b - wr / (1.0 - p.expense_ratio)
    cov_term = p.cov_sb - p.sigma2_b
    denom = c * (p.sigma2_s + p.sigma2_b - 2.0 * p.cov_sb) - dmu * cov_term
    num = dmu * p.sigma2_b - c * cov_term
    if abs(denom) < 1e-15 * max(abs(num), 1.0):
        raise ParameterError("critical point undefined: degenerate denominator")
    return num / denom


@dataclass(frozen=True)
class StandardizedFrontier:
    """Ruin boundaries of a two-period glidepath in standardized returns.

    Survival needs z_1 > zf0 and z_2 > zf1_of_z1(z_1).
    """
    params: object
    glidepath: tuple
    withdrawal_rate: float

    @property
    def zf0(self):
        return zf0(self.params, self.glidepath[0], self.withdrawal_rate)

    def zf1_of_z1(self, z1):
        """ZF(1) for z_1 above zf0; nan where the first withdrawal already ruins."""
        a1, a2 = self.glidepath
        r1 = math.sqrt(variance_adjusted(self.params, a1)) * np.asarray(z1, dtype=float) \
            + mean_adjusted(self.params, a1)
        rf0 = self.withdrawal_rate
        with np.errstate(divide="ignore", invalid="ignore"):
            rf1 = np.where(r1 > rf0, rf0 / (r1 - rf0), np.nan)
        return (rf1 - mean_adjusted(self.params, a2)) / math.sqrt(variance_adjusted(self.params, a2))

    def ruin_given_z1(self, z1):
        """F(z_1): 1 when ruined at t = 1, else Phi(ZF(1))."""
        z1 = np.asarray(z1, dtype=float)
        out = np.ones_like(z1)
        alive = z1 > self.zf0
        out[alive] = ndtr(self.zf1_of_z1(z1[alive]))
        return out


@dataclass(frozen=True)
class GridSpec:
    z_low: float
    z_high: float
    k: int

    def __post_init__(self):
        if not self.z_low < 0.0 < self.z_high:
            raise ParameterError("grid needs z_low < 0 < z_high")
        check_positive_int(self.k, "k")

    @property
    def width(self):
        return (self.z_high - self.z_low) / self.k

    def cells(self):
        """(midpoints, probabilities) of the k rectangles, from exact normal CDF differences."""
        edges = self.z_low + self.width * np.arange(self.k + 1)
        # difference whichever tail is smaller to keep digits
        lo_tail = ndtr(edges)
        hi_tail = ndtr(-edges)
        probs = np.where(edges[1:] <= 0.0, lo_tail[1:] - lo_tail[:-1], hi_tail[:-1] - hi_tail[1:])
        mids = self.z_low + self.width * (np.arange(self.k) + 0.5)
        return mids, probs


def _frontier(params, gp, wr):
    a = check_glidepath(gp)
    if a.size != 2:
        raise ParameterError("two-period glidepaths need exactly 2 ratios")
    lo = min_variance_alpha(params)
    if np.any(a <= lo):
        raise ParameterError("equity ratios must exceed the minimum-variance ratio")
    return StandardizedFrontier(params, (float(a[0]), float(a[1])), wr)


def two_period_difference(params, gp_a, gp_b, withdrawal_rate, grid):
    """Grid approximation of P_NR(gp_a) - P_NR(gp_b) = E[F_b(z_1) - F_a(z_1)]."""
    wr = check_withdrawal_rate(withdrawal_rate)
    fa, fb = _frontier(params, gp_a, wr), _frontier(params, gp_b, wr)
    mids, probs = grid.cells()
    diff = fb.ruin_given_z1(mids) - fa.ruin_given_z1(mids)
    return math.fsum(probs * diff)


def two_period_probability(params, gp, withdrawal_rate, grid):
    """Grid approximation of P_NR(gp) = E[1 - F(z_1)]."""
    f = _frontier(params, gp, check_withdrawal_rate(withdrawal_rate))
    mids, probs = grid.cells()
    return math.fsum(probs * (1.0 - f.ruin_given_z1(mids)))


@dataclass
class CounterexampleReport:
    method: str
    gp_1: tuple
    gp_2: tuple
    gp_c: tuple
    lam: float
    withdrawal_rate: float
    p_1: float
    p_2: float
    p_c: float
    budget: int
    diff_c2: float = None  # P(gp_c) - P(gp_2)
    diff_1c: float = None  # P(gp_1) - P(gp_c)

    @property
    def is_counterexample(self):
        return self.p_c < min(self.p_1, self.p_2)

    def standard_errors(self):
        """Binomial standard errors of the three estimates (Monte Carlo only)."""
        n = self.budget
        return tuple(math.sqrt(p * (1.0 - p) / n) for p in (self.p_1, self.p_2, self.p_c))

    def to_text(self):
        rows = [("method", self.method), ("lambda", f"{self.lam:.6f}"),
                ("withdrawal_rate", f"{self.withdrawal_rate:.6f}"), ("budget", str(self.budget))]
        for name, gp, p in (("1", self.gp_1, self.p_1), ("2", self.gp_2, self.p_2), ("c", self.gp_c, self.p_c)):
            rows.append((f"gp_{name}", " ".join(f"{x:.6f}" for x in gp)))
            rows.append((f"P_{name}", f"{p:.6f}"))
        if self.diff_c2 is not None:
            rows.append(("P_c-P_2", f"{self.diff_c2:.6f}"))
            rows.append(("P_1-P_c", f"{self.diff_1c:.6f}"))
        rows.append(("counterexample", "yes" if self.is_counterexample else "no"))
        return "\n".join(f"{k},{v}" for k, v in rows) + "\n"


def verify_counterexample(params, gp_1, gp_2, lam, withdrawal_rate, method="grid", budget=None,
                          seed=0, workers=1, z_bound=13.1730):
    """Check whether the convex combination underperforms both endpoints.

    method "grid" uses `budget` rectangles on [-z_bound, z_bound] (default
    263460); "mc" simulates `budget` trials per glidepath (default 10**7).
    """
    lam = check_probability(lam, "lambda")
    wr = check_withdrawal_rate(withdrawal_rate)
    a1, a2 = check_glidepath(gp_1), check_glidepath(gp_2)
    if a1.size != a2.size:
        raise ParameterError("glidepaths must have the same length")
    ac = lam * a1 + (1.0 - lam) * a2
    if method == "grid":
        grid = GridSpec(-z_bound, z_bound, 263_460 if budget is None else budget)
        p1, p2, pc = (two_period_probability(params, g, wr, grid) for g in (a1, a2, ac))
        d_c2 = two_period_difference(params, ac, a2, wr, grid)
        d_1c = two_period_difference(params, a1, ac, wr, grid)
        k = grid.k
    elif method == "mc":
        k = 10 ** 7 if budget is None else check_positive_int(budget, "budget")
        # one stream per glidepath so each estimate is reproducible alone
        p1, p2, pc = (success_probability_mc(params, g, wr, k, seed=[int(seed), i], workers=workers)
                      for i, g in enumerate((a1, a2, ac)))
        d_c2, d_1c = pc - p2, p1 - pc
    else:
        raise ParameterError(f"method must be 'grid' or 'mc', got {method!r}")
    return CounterexampleReport(method, tuple(a1), tuple(a2), tuple(ac), lam, wr,
                                p1, p2, pc, k, d_c2, d_1c)
