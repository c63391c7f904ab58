"""The eight fixed-horizon study scenarios and the five starting glidepaths."""
from dataclasses import dataclass

import numpy as np

from .exceptions import ParameterError
from .portfolio import EVENSKY, HISTORICAL

HORIZON = 30


@dataclass(frozen=True)
class Scenario:
    number: int
    params: object  # ReturnParams with the expense ratio applied
    withdrawal_rate: float
    horizon: int = HORIZON
    method: str = "nr"
    epsilon: float = 1e-11
    dp_precision: int = 5000
    dp_rf_max: float = 2.75
    reported_probability: float = None


def _make(number, base, wr, er, p, **kw):
    return Scenario(number, base.with_expense_ratio(er), wr, reported_probability=p, **kw)


SCENARIOS = {
    1: _make(1, HISTORICAL, 0.04, 0.00, 0.9196892347),
    2: _make(2, HISTORICAL, 0.04, 0.01, 0.8382288556),
    3: _make(3, EVENSKY, 0.04, 0.00, 0.7480382844),
    4: _make(4, EVENSKY, 0.04, 0.01, 0.5998654133),
    5: _make(5, HISTORICAL, 0.05, 0.00, 0.7752227003),
    6: _make(6, HISTORICAL, 0.05, 0.01, 0.6793316432),
    7: _make(7, EVENSKY, 0.05, 0.00, 0.5279521553, method="ga"),
    8: _make(8, EVENSKY, 0.05, 0.01, 0.4322869545, method="ga", epsilon=1.3e-9,
             dp_precision=10000),
}


def scenario(number):
    try:
        return SCENARIOS[int(number)]
    except (KeyError, ValueError):
        raise ParameterError(f"scenario must be 1..8, got {number!r}") from None


_RANDOM_1 = (0.636, 0.214, 0.193, 0.637, 0.626, 0.597, 0.943, 0.877, 0.254, 0.823,
             0.903, 0.294, 0.444, 0.513, 0.529, 0.160, 0.564, 0.293, 0.698, 0.228,
             0.311, 0.776, 0.689, 0.764, 0.596, 0.793, 0.911, 0.624, 0.709, 0.205)
_RANDOM_2 = (0.813, 0.886, 0.227, 0.684, 0.328, 0.379, 0.484, 0.145, 0.763, 0.284,
             0.690, 0.476, 0.876, 0.649, 0.147, 0.643, 0.521, 0.662, 0.161, 0.864,
             0.867, 0.332, 0.281, 0.224, 0.471, 0.777, 0.922, 0.880, 0.295, 0.860)


def starting_glidepaths():
    """The five 30-year starts: rising, declining, constant and two random ones."""
    t = np.arange(HORIZON)
    return {
        "rising": np.round(0.305 + 0.01 * t, 3),
        "declining": np.round(0.595 - 0.01 * t, 3),
        "constant": np.full(HORIZON, 0.45),
        "random1": np.array(_RANDOM_1),
        "random2": np.array(_RANDOM_2),
    }
