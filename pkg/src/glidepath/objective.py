"""Success-probability objectives shared by the optimizer.

An objective turns (glidepath, density selectors, sample size) into
probabilities with either estimator.  The optimizer only ever asks for
batches of selector probabilities, so a fixed horizon and a random
(mortality-weighted) horizon look the same to it.
"""
from dataclasses import dataclass
import math

import numpy as np

from .exceptions import ParameterError
from .portfolio import clamp_glidepath
from .ruin import (STANDARD, DensitySelector, DpGrid, success_probabilities_dp,
                   success_probability_mc)
from .validation import check_alpha_level, check_positive_int


@dataclass
class OptimizerConfig:
    """Settings for one optimization run.

    Sample sizes in simulation mode are fixed multiples of base_sample_n:
    4x for P_NR, 2x while climbing and 1x for each special probability.
    """
    method: str = "nr"  # "nr" (Newton) or "ga" (gradient ascent)
    estimator: str = "dp"  # "dp" or "sim"
    epsilon: float = 1e-11
    base_sample_n: int = 1_000_000
    alpha_noninferiority: float = 0.05
    alpha_zero: float = 1.0
    dp_precision: int = 5000
    dp_rf_max: float = 2.75
    seed: int = 0
    workers: int = 1
    max_iter: int = None
    initial_climb_cap: int = 50
    max_climb_steps: int = None

    def __post_init__(self):
        if self.method not in ("nr", "ga"):
            raise ParameterError(f"method must be 'nr' or 'ga', got {self.method!r}")
        if self.estimator not in ("dp", "sim"):
            raise ParameterError(f"estimator must be 'dp' or 'sim', got {self.estimator!r}")
        if not self.epsilon > 0:
            raise ParameterError("epsilon must be positive")
        check_alpha_level(self.alpha_noninferiority, "alpha_noninferiority")
        check_alpha_level(self.alpha_zero, "alpha_zero")
        check_positive_int(self.base_sample_n, "base_sample_n")
        check_positive_int(self.workers, "workers")

    @property
    def iteration_cap(self):
        if self.max_iter is not None:
            return self.max_iter
        return 25 if self.method == "nr" else 200

    @property
    def grid(self):
        return DpGrid(self.dp_precision, self.dp_rf_max)


class FixedHorizonObjective:
    def __init__(self, params, withdrawal_rate, config):
        self.params = params
        self.withdrawal_rate = float(withdrawal_rate)
        self.config = config
        self._calls = 0

    @property
    def is_simulation(self):
        return self.config.estimator == "sim"

    def clamp(self, glidepath):
        return clamp_glidepath(self.params, glidepath)

    def _next_seed(self):
        # every simulated probability gets its own reproducible stream
        self._calls += 1
        return [int(self.config.seed), self._calls]

    def horizon_probabilities(self, glidepath, selectors, n):
        cfg = self.config
        if cfg.estimator == "dp":
            # DP rows are split into 4 partitions per worker
            parts = 4 * cfg.workers if cfg.workers > 1 else 1
            return success_probabilities_dp(self.params, glidepath, self.withdrawal_rate, cfg.grid,
                                            selectors, workers=parts)
        return np.array([success_probability_mc(self.params, glidepath, self.withdrawal_rate, n, s,
                                                seed=self._next_seed(), workers=cfg.workers)
                         for s in selectors])

    def probabilities(self, glidepath, selectors, n=None):
        n = self.config.base_sample_n if n is None else n
        return self.horizon_probabilities(self.clamp(glidepath), list(selectors), n)

    def probability(self, glidepath, n=None):
        return float(self.probabilities(glidepath, [STANDARD], n)[0])


def restrict_selector(selector, horizon):
    """Drop special points at or beyond the horizon (their effect is zero there)."""
    pts = selector.points()
    grad = tuple(t for t in selector.gradient_points if t < horizon)
    h1 = selector.h1_point if selector.h1_point is not None and selector.h1_point < horizon else None
    h2 = selector.h2_point if selector.h2_point is not None and selector.h2_point < horizon else None
    if len(pts) == len(grad) + (h1 is not None) + (h2 is not None):
        return selector
    return DensitySelector(grad, h1, h2)


class RandomHorizonObjective(FixedHorizonObjective):
    """p_0 + sum_k p_k * P(first k ratios), k = 1..S_max.

    A selector probability is mixed the same way after removing special
    points beyond each horizon; the gradient and Hessian formulas are
    linear in these probabilities so they mix correctly (the Hessian
    diagonal weights sum to zero, so a dropped diagonal term vanishes).
    """

    def __init__(self, params, withdrawal_rate, config, mortality):
        super().__init__(params, withdrawal_rate, config)
        self.mortality = mortality

    def horizon_probabilities(self, glidepath, selectors, n):
        probs = np.asarray(self.mortality.probabilities, dtype=float)
        if glidepath.size != probs.size - 1:
            raise ParameterError(
                f"glidepath needs {probs.size - 1} ratios for this mortality table, got {glidepath.size}")
        terms = [np.full(len(selectors), probs[0])]
        for k in range(1, probs.size):
            if probs[k] == 0.0:
                continue
            sub = [restrict_selector(s, k) for s in selectors]
            terms.append(probs[k] * super().horizon_probabilities(glidepath[:k], sub, n))
        # compensated summation across horizons
        stacked = np.vstack(terms)
        return np.array([math.fsum(col) for col in stacked.T])
