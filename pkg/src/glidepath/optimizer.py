"""Gradient, Hessian and the Newton / gradient-ascent driver.

Every gradient element and Hessian entry is a linear combination of
success probabilities computed with special densities at one or two time
points, so the whole derivative machinery reduces to batched calls into
the ruin estimators.
"""
from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.linalg import qr, solve_triangular
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import BoundaryError, DensityError, ConvergenceError, ParameterError, StuckError
from .objective import FixedHorizonObjective, OptimizerConfig, RandomHorizonObjective
from .portfolio import feasible_bounds, gradient_constant, hessian_constants, moments
from .ruin import STANDARD, DensitySelector
from .stats_tests import ProportionSample, equality_test, noninferiority_test
from .validation import check_glidepath, check_withdrawal_rate

log = logging.getLogger("glidepath")

_LADDER = 5.0 ** 0.25  # step size grows by this factor per decade of max|g|


@dataclass
class GradientVector:
    elements: np.ndarray
    max_effective: float
    constants: np.ndarray
    special_probabilities: np.ndarray
    p_nr: float


@dataclass
class OptimizationResult:
    glidepath: np.ndarray
    probability: float
    diagnostics: list = field(default_factory=list)
    min_eigenvalue: float = np.nan
    max_eigenvalue: float = np.nan
    gradient: GradientVector = None
    hessian: np.ndarray = None


def make_objective(params, withdrawal_rate, config, mortality=None):
    wr = check_withdrawal_rate(withdrawal_rate)
    if mortality is None:
        return FixedHorizonObjective(params, wr, config)
    return RandomHorizonObjective(params, wr, config, mortality)


def max_effective(params, glidepath, g):
    """Largest movement the gradient can realize inside [MVA + 1e-4, 1]."""
    lo, hi = feasible_bounds(params)
    best = 0.0
    for a, gi in zip(glidepath, g):
        if a + gi > hi:
            eff = hi - a
        elif a + gi < lo:
            eff = a - lo
        else:
            eff = abs(gi)
        best = max(best, eff)
    return best


def _gradient(objective, glidepath, p_nr):
    cfg = objective.config
    a = objective.clamp(glidepath)
    k = np.array([gradient_constant(objective.params, x) for x in a])
    sels = [DensitySelector((t,)) for t in range(a.size)]
    pg = objective.probabilities(a, sels, cfg.base_sample_n)
    g = k * (pg - p_nr)
    if objective.is_simulation and cfg.alpha_zero < 1.0:
        n, npnr = cfg.base_sample_n, 4 * cfg.base_sample_n
        for t in range(a.size):
            _, pval = equality_test(ProportionSample(float(pg[t]), n), ProportionSample(p_nr, npnr))
            if pval > cfg.alpha_zero:
                g[t] = 0.0  # not distinguishable from zero
    return GradientVector(g, max_effective(objective.params, a, g), k, pg, float(p_nr))


def build_gradient(params, glidepath, withdrawal_rate, config, p_nr, mortality=None):
    """g_t = K_t (P_g,t - P_NR), with the simulation-mode zero test applied."""
    check_glidepath(glidepath)
    return _gradient(make_objective(params, withdrawal_rate, config, mortality), glidepath, p_nr)


def _hessian(objective, glidepath, p_nr, gradient):
    a = objective.clamp(glidepath)
    T = a.size
    q = []
    for t, x in enumerate(a):
        try:
            q.append(hessian_constants(moments(objective.params, x)))
        except DensityError as exc:
            raise DensityError(f"time {t}: {exc}") from exc
    pairs = [(i, j) for i in range(T) for j in range(i + 1, T)]
    sels = [DensitySelector((i, j)) for (i, j) in pairs]
    sels += [DensitySelector(h1_point=t) for t in range(T)]
    sels += [DensitySelector(h2_point=t) for t in range(T)]
    probs = objective.probabilities(a, sels, objective.config.base_sample_n)
    k, g = gradient.constants, gradient.elements
    h = np.empty((T, T))
    for idx, (i, j) in enumerate(pairs):
        h[i, j] = k[i] * k[j] * (probs[idx] - g[j] / k[j] - g[i] / k[i] - p_nr)
        h[j, i] = h[i, j]
    off = len(pairs)
    for t in range(T):
        q1, q2, q3 = q[t]
        h[t, t] = q1 * probs[off + t] + q2 * probs[off + T + t] + q3 * p_nr
    return h


def build_hessian(params, glidepath, withdrawal_rate, config, p_nr, gradient, mortality=None):
    """Symmetric Hessian from P_gg (off-diagonal) and P_h1, P_h2 (diagonal)."""
    check_glidepath(glidepath)
    return _hessian(make_objective(params, withdrawal_rate, config, mortality), glidepath, p_nr, gradient)


def _initial_step(mxgrd):
    """(index, step) from the decade of the largest gradient element."""
    for i in range(1, 11):
        if 10.0 ** -(i + 1) <= mxgrd < 10.0 ** -i:
            return i, _LADDER ** i
    # outside the ladder the step is 1; keep a usable retry index
    return (1 if mxgrd >= 0.01 else 10), 1.0


def _climb(objective, glidepath, gradient, best_p, cap=None):
    cfg = objective.config
    a = objective.clamp(glidepath)
    g = np.asarray(gradient.elements, dtype=float)
    if not np.any(g):
        return a, best_p, 0
    sim = objective.is_simulation
    n_step, n_base = 2 * cfg.base_sample_n, 4 * cfg.base_sample_n
    iindx, step = _initial_step(float(np.max(np.abs(g))))
    tryup, origindx = 0, 0
    max_p, max_n = best_p, n_base
    prev = a.copy()
    cont, improved, t = 1, False, 0
    while cont == 1 or not improved:
        if cont == 0 and not improved:
            # no progress on the first step: undo it and change the step size
            if origindx == 0:
                origindx = iindx
            a = prev.copy()
            old = step
            if iindx == 0:
                raise StuckError(
                    "No progress can be made, the procedure is stuck (step size reduced to 0). "
                    "You may be operating along the boundary where the process is not well defined, "
                    "or the estimation precision is not adequate for the epsilon level.")
            if iindx == 1 and tryup == 5:
                iindx = 0
                step = step / 2.0
            elif iindx > 1 and tryup == 5:
                iindx = origindx - 1 if iindx == origindx + 5 else iindx - 1
                step = _LADDER ** iindx
            else:
                iindx += 1
                step = _LADDER ** iindx
                tryup += 1
            log.debug("climb: no progress, step %.10f -> %.10f", old, step)
            cont = 1
        prev = a.copy()
        a = objective.clamp(a + step * g)
        new_p = objective.probability(a, n_step)
        if sim:
            _, _, reject = noninferiority_test(ProportionSample(new_p, n_step),
                                               ProportionSample(max_p, max_n), cfg.alpha_noninferiority)
            if reject:
                cont = 0
            else:
                improved = True
            if new_p > max_p:
                max_p, max_n = new_p, n_step
        else:
            if new_p > max_p:
                improved = True
                max_p = new_p
            else:
                cont = 0
        t += 1
        if cap is not None and t == cap and cont == 1:
            cont = 2
        elif cfg.max_climb_steps is not None and t >= cfg.max_climb_steps and cont == 1:
            cont = 2
    if cont != 2:
        a = prev
    if sim:
        # re-estimate to remove the upward bias of keeping the best draw
        max_p = objective.probability(a, 2 * n_step)
    return a, max_p, t


def climb(params, glidepath, withdrawal_rate, config, gradient, best_p, cap=None, mortality=None):
    """Step along the gradient until the probability stops improving.

    Returns (glidepath, probability, steps).
    """
    return _climb(make_objective(params, withdrawal_rate, config, mortality), glidepath, gradient,
                  best_p, cap)


def newton_step(glidepath, gradient, hessian, bounds=None):
    """Solve H d = -g with a column-pivoted QR and return the clamped update."""
    a = np.asarray(glidepath, dtype=float)
    g = np.asarray(getattr(gradient, "elements", gradient), dtype=float)
    h = np.asarray(hessian, dtype=float)
    if not np.any(g):
        return a.copy()
    cond = np.linalg.cond(h)
    if not np.isfinite(cond) or cond > 1e12:
        raise ParameterError(
            f"Hessian is singular or ill-conditioned (condition {cond:.3g}); use gradient ascent")
    qm, r, perm = qr(h, pivoting=True)
    z = solve_triangular(r, qm.T @ -g)
    d = np.empty_like(z)
    d[perm] = z
    out = a + d
    if bounds is not None:
        out = np.clip(out, bounds[0], bounds[1])
    return out


def check_boundary(params, glidepath, gradient, tol=1e-12):
    """Refuse Newton when a ratio sits on a bound with the gradient pushing outward."""
    lo, hi = feasible_bounds(params)
    for t, (a, g) in enumerate(zip(glidepath, gradient.elements)):
        if (a >= hi - tol and g > 0.0) or (a <= lo + tol and g < 0.0):
            raise BoundaryError(
                f"ratio {t} is pinned at the boundary ({a:.10f}) with the gradient pointing outward; "
                "Newton's method needs the reduced Hessian here and will not construct it. "
                "Use gradient ascent (method 'ga').")


def _eigen_extremes(h):
    ev = np.linalg.eigvalsh(h)
    return float(ev.min()), float(ev.max())


def _record(diag, glidepath, **kw):
    kw["glidepath"] = np.array(glidepath, dtype=float)
    diag.append(kw)
    eig = ""
    if kw.get("min_eigenvalue") is not None:
        eig = f" min_eig={kw['min_eigenvalue']:.6e} max_eig={kw['max_eigenvalue']:.6e}"
    log.info("iteration %d (%s): P=%.12f max_effective=%.3e%s", kw["iteration"], kw["stage"],
             kw["probability"], kw["max_effective"], eig)
    log.debug("glidepath: %s", " ".join(f"{x:.10f}" for x in glidepath))


def optimize(params, initial, withdrawal_rate, config=None, mortality=None):
    """Maximize the success probability starting from an initial glidepath."""
    config = OptimizerConfig() if config is None else config
    obj = make_objective(params, withdrawal_rate, config, mortality)
    a = obj.clamp(check_glidepath(initial))
    n_pnr = 4 * config.base_sample_n
    bounds = feasible_bounds(params)
    diag = []
    p = obj.probability(a, n_pnr)
    grad = _gradient(obj, a, p)
    _record(diag, a, iteration=0, stage="start", probability=p, max_effective=grad.max_effective)
    if grad.max_effective > config.epsilon:
        a, p, steps = _climb(obj, a, grad, p, cap=config.initial_climb_cap)
        grad = _gradient(obj, a, p)
        _record(diag, a, iteration=0, stage="initial climb", probability=p,
                max_effective=grad.max_effective, steps=steps)
    it = 0
    while grad.max_effective > config.epsilon:
        if it >= config.iteration_cap:
            raise ConvergenceError(
                f"no convergence after {it} iterations (max effective gradient {grad.max_effective:.3e})",
                glidepath=a, probability=p, diagnostics=diag)
        it += 1
        rec = {}
        if config.method == "nr":
            check_boundary(params, a, grad)
            h = _hessian(obj, a, p, grad)
            rec["min_eigenvalue"], rec["max_eigenvalue"] = _eigen_extremes(h)
            start_p = p
            a = newton_step(a, grad, h, bounds)
            p = obj.probability(a, n_pnr)
            if p < start_p:
                log.warning("success probability decreased during iteration %d", it)
        else:
            a, p, rec["steps"] = _climb(obj, a, grad, p, cap=None)
        grad = _gradient(obj, a, p)
        _record(diag, a, iteration=it, stage=config.method, probability=p,
                max_effective=grad.max_effective, **rec)
    h = _hessian(obj, a, p, grad)
    lo_ev, hi_ev = _eigen_extremes(h)
    _record(diag, a, iteration=it, stage="final", probability=p, max_effective=grad.max_effective,
            min_eigenvalue=lo_ev, max_eigenvalue=hi_ev)
    return OptimizationResult(a, p, diag, lo_ev, hi_ev, grad, h)


class GlidepathOptimizer(BaseEstimator):
    """Estimator-style wrapper: fit() takes a starting glidepath.

    After fitting, glidepath_ holds the optimal equity ratios,
    success_probability_ the objective there, and diagnostics_ the
    per-iteration records.  predict() evaluates the success probability of
    other glidepaths under the same settings.
    """

    def __init__(self, return_params=None, withdrawal_rate=0.04, method="nr", estimator="dp",
                 epsilon=1e-11, base_sample_n=1_000_000, alpha_noninferiority=0.05, alpha_zero=1.0,
                 dp_precision=5000, dp_rf_max=2.75, seed=0, workers=1, max_iter=None, mortality=None):
        self.return_params = return_params
        self.withdrawal_rate = withdrawal_rate
        self.method = method
        self.estimator = estimator
        self.epsilon = epsilon
        self.base_sample_n = base_sample_n
        self.alpha_noninferiority = alpha_noninferiority
        self.alpha_zero = alpha_zero
        self.dp_precision = dp_precision
        self.dp_rf_max = dp_rf_max
        self.seed = seed
        self.workers = workers
        self.max_iter = max_iter
        self.mortality = mortality

    def _config(self):
        return OptimizerConfig(method=self.method, estimator=self.estimator, epsilon=self.epsilon,
                               base_sample_n=self.base_sample_n,
                               alpha_noninferiority=self.alpha_noninferiority,
                               alpha_zero=self.alpha_zero, dp_precision=self.dp_precision,
                               dp_rf_max=self.dp_rf_max, seed=self.seed, workers=self.workers,
                               max_iter=self.max_iter)

    def _params(self):
        if self.return_params is None:
            from .portfolio import HISTORICAL
            return HISTORICAL
        return self.return_params

    def fit(self, X, y=None):
        initial = check_array(np.asarray(X, dtype=float).reshape(1, -1), ensure_2d=True).ravel()
        res = optimize(self._params(), initial, self.withdrawal_rate, self._config(), self.mortality)
        self.glidepath_ = res.glidepath
        self.success_probability_ = res.probability
        self.diagnostics_ = res.diagnostics
        self.hessian_eigenvalues_ = (res.min_eigenvalue, res.max_eigenvalue)
        self.gradient_ = res.gradient.elements
        self.n_iter_ = max(d["iteration"] for d in res.diagnostics)
        return self

    def predict(self, X):
        check_is_fitted(self, "glidepath_")
        X = check_array(X, ensure_2d=True)
        if X.shape[1] != self.glidepath_.size:
            raise ParameterError(f"expected glidepaths of length {self.glidepath_.size}")
        obj = make_objective(self._params(), self.withdrawal_rate, self._config(), self.mortality)
        n = 4 * self.base_sample_n
        return np.array([obj.probability(row, n) for row in X])

    def score(self, X=None, y=None):
        """Success probability of the fitted glidepath, or mean over X."""
        check_is_fitted(self, "glidepath_")
        if X is None:
            return self.success_probability_
        return float(np.mean(self.predict(X)))
