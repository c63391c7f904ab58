import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import minimize_scalar

from glidepath import HISTORICAL, EVENSKY, ParameterError, ReturnParams
from glidepath.exceptions import DensityError
from glidepath.portfolio import (clamp_glidepath, feasible_bounds, gradient_constant, hessian_constants,
                                 mean_adjusted, min_variance_alpha, moment_derivatives, moments,
                                 variance_adjusted)


def test_mean_and_variance_at_known_ratio():
    # direct evaluation of the two-asset formulas
    a = 0.45
    m = 1 + a * 0.082509 + (1 - a) * 0.021409
    v = a * a * 0.0402696529 + (1 - a) ** 2 * 0.0069605649 + 2 * a * (1 - a) * 0.0007344180
    assert mean_adjusted(HISTORICAL, a) == pytest.approx(m, rel=1e-15)
    assert variance_adjusted(HISTORICAL, a) == pytest.approx(v, rel=1e-15)


def test_expense_ratio_scales_moments():
    p = HISTORICAL.with_expense_ratio(0.01)
    assert mean_adjusted(p, 0.6) == pytest.approx(0.99 * mean_adjusted(HISTORICAL, 0.6))
    assert variance_adjusted(p, 0.6) == pytest.approx(0.99 ** 2 * variance_adjusted(HISTORICAL, 0.6))


@pytest.mark.parametrize("params", [HISTORICAL, EVENSKY])
def test_min_variance_ratio_matches_numeric_minimum(params):
    res = minimize_scalar(lambda a: variance_adjusted(params, a), bounds=(-1, 1), method="bounded",
                          options={"xatol": 1e-12})
    assert min_variance_alpha(params) == pytest.approx(res.x, abs=1e-7)


def test_min_variance_frozen():
    assert min_variance_alpha(HISTORICAL) == pytest.approx(0.13605679407172097, abs=1e-15)
    assert min_variance_alpha(EVENSKY) == pytest.approx(0.00483320940488704, abs=1e-15)


@pytest.mark.parametrize("alpha", [0.2, 0.5, 0.93])
def test_derivatives_match_finite_differences(alpha):
    h = 1e-5
    mp, vp, vpp = moment_derivatives(HISTORICAL, alpha)
    m = lambda a: mean_adjusted(HISTORICAL, a)
    v = lambda a: variance_adjusted(HISTORICAL, a)
    assert mp == pytest.approx((m(alpha + h) - m(alpha - h)) / (2 * h), rel=1e-8)
    assert vp == pytest.approx((v(alpha + h) - v(alpha - h)) / (2 * h), rel=1e-7)
    assert vpp == pytest.approx((v(alpha + h) - 2 * v(alpha) + v(alpha - h)) / h ** 2, rel=1e-4)


def test_feasible_box_and_clamp():
    lo, hi = feasible_bounds(HISTORICAL)
    assert lo == pytest.approx(min_variance_alpha(HISTORICAL) + 1e-4)
    assert hi == 1.0
    out = clamp_glidepath(HISTORICAL, [0.0, 0.5, 1.2])
    np.testing.assert_array_equal(out, [lo, 0.5, 1.0])


def test_gradient_constant_needs_ratio_above_mva():
    with pytest.raises(DensityError, match="non-positive v'"):
        gradient_constant(HISTORICAL, 0.1)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.14, 1.0), st.sampled_from([HISTORICAL, EVENSKY]), st.sampled_from([0.0, 0.01]))
def test_hessian_constants_sum_to_zero(alpha, base, er):
    mb = moments(base.with_expense_ratio(er), alpha)
    q1, q2, q3 = hessian_constants(mb)
    assert abs(q1 + q2 + q3) <= 1e-9 * max(abs(q1), abs(q2), abs(q3))


def test_theta_zero_is_rejected():
    # theta = v v'' - 2 v'^2 changes sign between MVA and 1 for the historical set
    f = lambda a: moments(HISTORICAL, a).theta
    lo, hi = 0.1361, 1.0
    grid = np.linspace(lo + 1e-3, hi, 2000)
    vals = np.array([f(a) for a in grid])
    idx = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    assert idx.size >= 1
    from scipy.optimize import brentq
    root = brentq(f, grid[idx[0]], grid[idx[0] + 1], xtol=1e-15)
    mb = moments(HISTORICAL, root)
    with pytest.raises(DensityError, match="theta"):
        hessian_constants(mb)


@pytest.mark.parametrize("bad", [
    dict(sigma2_s=-0.1), dict(cov_sb=1.0), dict(expense_ratio=1.0), dict(mu_s=0.0),
    dict(mu_b=math.nan),
])
def test_invalid_return_params(bad):
    kw = dict(mu_s=0.08, sigma2_s=0.04, mu_b=0.02, sigma2_b=0.007, cov_sb=0.0007)
    kw.update(bad)
    with pytest.raises(ParameterError):
        ReturnParams(**kw)
