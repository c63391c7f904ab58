"""Reading and writing the plain-text run files.

control.txt
    line 1: mu_s sigma2_s mu_b sigma2_b cov_sb E_R
    line 2: T_D W_R epsilon
    line 3: nr|ga dp P_R RF_max   or   nr|ga sim N alpha1 alpha2
gp.txt
    one equity ratio per line, T_D lines
output.txt
    success probability header and a 5-column, column-major block of ratios
"""
from dataclasses import dataclass
import csv
import math
from pathlib import Path

from .exceptions import InputFileError, ParameterError
from .objective import OptimizerConfig
from .portfolio import ReturnParams

CONTROL_FILE = "control.txt"
GLIDEPATH_FILE = "gp.txt"
OUTPUT_FILE = "output.txt"


@dataclass
class ControlFile:
    params: ReturnParams
    horizon: int
    withdrawal_rate: float
    epsilon: float
    method: str
    estimator: str
    sample_n: int = None
    alpha1: float = None
    alpha2: float = None
    precision: int = None
    rf_max: float = None

    def config(self, seed=0, workers=1, **extra):
        kw = dict(method=self.method, estimator=self.estimator, epsilon=self.epsilon,
                  seed=seed, workers=workers)
        if self.estimator == "dp":
            kw.update(dp_precision=self.precision, dp_rf_max=self.rf_max)
        else:
            kw.update(base_sample_n=self.sample_n, alpha_noninferiority=self.alpha1,
                      alpha_zero=self.alpha2)
        kw.update(extra)
        return OptimizerConfig(**kw)

    def to_text(self):
        p = self.params
        lines = [
            f"{p.mu_s} {p.sigma2_s} {p.mu_b} {p.sigma2_b} {p.cov_sb} {p.expense_ratio}",
            f"{self.horizon} {self.withdrawal_rate} {self.epsilon!r}",
        ]
        if self.estimator == "dp":
            lines.append(f"{self.method} dp {self.precision} {self.rf_max}")
        else:
            lines.append(f"{self.method} sim {self.sample_n} {self.alpha1} {self.alpha2}")
        return "\n".join(lines) + "\n"


def _numbers(path, lineno, tokens, count):
    if len(tokens) != count:
        raise InputFileError(f"{path}: line {lineno} needs {count} values, got {len(tokens)}")
    try:
        return [float(x) for x in tokens]
    except ValueError:
        raise InputFileError(f"{path}: line {lineno} has a non-numeric value") from None


def _integer(path, lineno, x, name):
    if not (math.isfinite(x) and x == int(x) and x >= 1):
        raise InputFileError(f"{path}: line {lineno}: {name} must be a positive integer, got {x}")
    return int(x)


def parse_control(text, path=CONTROL_FILE):
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if len(lines) < 3:
        raise InputFileError(f"{path}: expected 3 lines, got {len(lines)}")
    l1 = _numbers(path, 1, lines[0], 6)
    l2 = _numbers(path, 2, lines[1], 3)
    try:
        params = ReturnParams(*l1)
    except ParameterError as exc:
        raise InputFileError(f"{path}: line 1: {exc}") from exc
    horizon = _integer(path, 2, l2[0], "T_D")
    head = lines[2][:2]
    if len(head) < 2:
        raise InputFileError(f"{path}: line 3 needs a method and an estimator")
    method, estimator = (x.lower() for x in head)
    if method not in ("nr", "ga"):
        raise InputFileError(f"{path}: line 3: method must be 'nr' or 'ga', got {head[0]!r}")
    cf = ControlFile(params, horizon, l2[1], l2[2], method, estimator)
    if estimator == "dp":
        prec, rf_max = _numbers(path, 3, lines[2][2:], 2)
        cf.precision = _integer(path, 3, prec, "P_R")
        cf.rf_max = rf_max
    elif estimator == "sim":
        n, a1, a2 = _numbers(path, 3, lines[2][2:], 3)
        cf.sample_n = _integer(path, 3, n, "N")
        cf.alpha1, cf.alpha2 = a1, a2
    else:
        raise InputFileError(f"{path}: line 3: estimator must be 'dp' or 'sim', got {head[1]!r}")
    if cf.withdrawal_rate <= 0 or cf.epsilon <= 0:
        raise InputFileError(f"{path}: line 2: W_R and epsilon must be positive")
    return cf


def read_control(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError:
        raise InputFileError(f"Could not read file: {path}") from None
    return parse_control(text, path)


def read_glidepath(path, horizon):
    """First `horizon` whitespace-separated values of the file."""
    path = Path(path)
    try:
        tokens = path.read_text().split()
    except OSError:
        raise InputFileError(f"Could not read file: {path}") from None
    if len(tokens) < horizon:
        raise InputFileError(f"File: {path} needs {horizon} initial asset allocations, but has fewer.")
    try:
        return [float(x) for x in tokens[:horizon]]
    except ValueError:
        raise InputFileError(f"{path}: non-numeric equity ratio") from None


def write_glidepath(path, ratios):
    Path(path).write_text("".join(f"{x:.10f}\n" for x in ratios))


def format_output(probability, ratios, label="GP"):
    """Header line plus ratios in 5 columns, index r + nrows * c on row r."""
    n = len(ratios)
    nrows = -(-n // 5)
    out = ["", f"--> Success probability for this Glide-Path = {probability:.12f}"]
    for r in range(nrows):
        cells = [f"{label}[{i:02d}]={ratios[i]:+.10f}" for i in (r + nrows * c for c in range(5)) if i < n]
        out.append("  ".join(cells))
    return "\n".join(out) + "\n"


def write_output(path, probability, ratios):
    Path(path).write_text(format_output(probability, ratios))


def read_output(path):
    """Parse an output file back into (probability, ratios)."""
    prob, found = None, {}
    for line in Path(path).read_text().splitlines():
        if line.startswith("-->"):
            prob = float(line.split("=")[1])
            continue
        for cell in line.split():
            key, val = cell.split("=")
            found[int(key[key.index("[") + 1:key.index("]")])] = float(val)
    return prob, [found[i] for i in range(len(found))]


def export_csv(path, ratios, diagnostics=()):
    """Write (t, alpha_t) rows, then one row per optimizer record."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "alpha"])
        for t, a in enumerate(ratios, 1):
            w.writerow([t, f"{a:.10f}"])
        if diagnostics:
            keys = ["iteration", "stage", "probability", "max_effective", "min_eigenvalue",
                    "max_eigenvalue", "steps"]
            w.writerow([])
            w.writerow(keys)
            for rec in diagnostics:
                w.writerow(["" if rec.get(k) is None else rec.get(k) for k in keys])
