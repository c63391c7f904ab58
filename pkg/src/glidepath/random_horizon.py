"""Success probability when the time of the final withdrawal is random.

With P(T_D = t) = p_t the events {T_D = t} are disjoint, so the success
probability is p_0 + sum_t p_t * P_NR(first t ratios).  Derivatives of the
sum are sums of derivatives, which the objective handles by mixing
selector probabilities horizon by horizon.
"""
from dataclasses import dataclass
import math
from pathlib import Path

import numpy as np

from .exceptions import InputFileError, ParameterError
from .objective import OptimizerConfig, RandomHorizonObjective
from .optimizer import _gradient, _hessian
from .validation import check_glidepath

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class MortalityDistribution:
    """probabilities[t] = P(final withdrawal at t), t = 0..S_max."""
    probabilities: tuple

    def __post_init__(self):
        p = tuple(float(x) for x in self.probabilities)
        object.__setattr__(self, "probabilities", p)
        if len(p) < 2:
            raise ParameterError("need probabilities for t = 0 and at least one withdrawal time")
        if any(not math.isfinite(x) or x < 0.0 for x in p):
            raise ParameterError("mortality probabilities must be finite and non-negative")
        total = math.fsum(p)
        if abs(total - 1.0) > _SUM_TOL:
            raise ParameterError(f"mortality probabilities sum to {total!r}, not 1")

    @property
    def max_horizon(self):
        return len(self.probabilities) - 1

    @classmethod
    def point_mass(cls, horizon):
        p = [0.0] * (horizon + 1)
        p[horizon] = 1.0
        return cls(tuple(p))

    @classmethod
    def normalized(cls, weights):
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or not w.sum() > 0:
            raise ParameterError("weights must be non-negative with a positive sum")
        return cls(tuple(w / w.sum()))


def _objective(params, withdrawal_rate, mortality, config):
    config = OptimizerConfig() if config is None else config
    return RandomHorizonObjective(params, withdrawal_rate, config, mortality)


def success_probability_random(params, glidepath, withdrawal_rate, mortality, config=None):
    """p_0 + sum_t p_t * P_NR(glidepath[:t]); glidepath has S_max ratios."""
    obj = _objective(params, withdrawal_rate, mortality, config)
    return obj.probability(check_glidepath(glidepath), 4 * obj.config.base_sample_n)


def gradient_random(params, glidepath, withdrawal_rate, mortality, config=None, p_nr=None):
    obj = _objective(params, withdrawal_rate, mortality, config)
    a = check_glidepath(glidepath)
    if p_nr is None:
        p_nr = obj.probability(a, 4 * obj.config.base_sample_n)
    return _gradient(obj, a, p_nr)


def hessian_random(params, glidepath, withdrawal_rate, mortality, config=None, p_nr=None,
                   gradient=None):
    obj = _objective(params, withdrawal_rate, mortality, config)
    a = check_glidepath(glidepath)
    if p_nr is None:
        p_nr = obj.probability(a, 4 * obj.config.base_sample_n)
    if gradient is None:
        gradient = _gradient(obj, a, p_nr)
    return _hessian(obj, a, p_nr, gradient)


def load_lifetable(source, renormalize=False):
    """Read one probability per line, t = 0 first.

    With renormalize=True a table whose sum is off (e.g. from rounding) is
    rescaled to sum to one instead of rejected.
    """
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputFileError(f"cannot read lifetable {path}: {exc}") from exc
    vals = []
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s:
            continue
        try:
            x = float(s)
        except ValueError:
            raise InputFileError(f"{path}:{i}: not a number: {s!r}") from None
        if not math.isfinite(x) or x < 0.0:
            raise InputFileError(f"{path}:{i}: probabilities must be finite and non-negative")
        vals.append(x)
    if renormalize:
        return MortalityDistribution.normalized(vals)
    try:
        return MortalityDistribution(tuple(vals))
    except ParameterError as exc:
        raise InputFileError(f"{path}: {exc} (use renormalize to rescale)") from exc
