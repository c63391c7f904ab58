"""Probability of avoiding ruin for a static glidepath.

Two estimators are provided: backward-induction dynamic programming over
a discretized ruin factor, and Monte Carlo simulation.  Both accept a
DensitySelector that swaps the return density at chosen time points for
one of the special densities g, h1, h2; the gradient and Hessian are
linear combinations of the resulting probabilities.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from ._dpkernel import step_rows
from .densities import DensityKind, coefficient_row, pdf
from .exceptions import ConsistencyError, EnvelopeError, GridError, ParameterError
from .portfolio import clamp_glidepath, moments
from .validation import check_glidepath, check_positive_int, check_withdrawal_rate


@dataclass(frozen=True)
class RuinState:
    rf: float
    ruined: bool = False


def ruin_factor_step(rf, adjusted_return):
    """Advance the ruin factor by one period: RF / (r - RF), or ruin if r <= RF."""
    if adjusted_return > rf:
        return RuinState(rf / (adjusted_return - rf))
    return RuinState(math.nan, True)


@dataclass(frozen=True)
class DensitySelector:
    """Which time points (0-based) use g, h1 or h2 instead of f."""
    gradient_points: tuple = ()
    h1_point: int = None
    h2_point: int = None

    def __post_init__(self):
        gp = tuple(int(t) for t in self.gradient_points)
        object.__setattr__(self, "gradient_points", gp)
        if len(gp) > 2:
            raise ParameterError("at most two gradient points")
        if len(gp) == 2 and gp[0] == gp[1]:
            raise ParameterError("gradient points must be distinct")
        if self.h1_point is not None and self.h2_point is not None:
            raise ParameterError("only one Hessian special density may be used at a time")
        if any(t < 0 for t in self.points()):
            raise ParameterError("time indices must be non-negative")

    def points(self):
        pts = dict.fromkeys(self.gradient_points, DensityKind.GRADIENT)
        if self.h1_point is not None:
            pts[int(self.h1_point)] = DensityKind.HESSIAN_H1
        if self.h2_point is not None:
            pts[int(self.h2_point)] = DensityKind.HESSIAN_H2
        return pts

    def kind_at(self, t):
        return self.points().get(t, DensityKind.STANDARD)

    def validate(self, horizon):
        pts = self.points()
        if len(pts) != len(self.gradient_points) + (self.h1_point is not None) + (self.h2_point is not None):
            raise ParameterError("a time point cannot carry two special densities")
        if any(t >= horizon for t in pts):
            raise ParameterError(f"selector index beyond the horizon ({horizon})")


STANDARD = DensitySelector()


@dataclass(frozen=True)
class DpGrid:
    precision: int = 1000
    rf_max: float = 2.75
    bucket_count: int = field(init=False)

    def __post_init__(self):
        check_positive_int(self.precision, "precision", minimum=100)
        if not self.rf_max > 0:
            raise ParameterError("rf_max must be positive")
        object.__setattr__(self, "bucket_count", int(round(self.precision * self.rf_max)))

    def initial_bucket(self, withdrawal_rate):
        return int(withdrawal_rate * self.precision + 0.5)


def _kind_key(selector, horizon):
    return tuple(sorted((t, k.value) for t, k in selector.points().items()))


def _suffix(key, y):
    return tuple(item for item in key if item[0] >= y)


def _run_rows(b_lo, b_hi, prec, m, sd, coef, chain_kind, vb1, dv, cum, pool, parts):
    # rows are independent, so the split never changes the result
    out = np.empty((b_hi - b_lo, chain_kind.shape[0]))
    if pool is None or b_hi - b_lo < 2 * parts:
        step_rows(b_lo, b_hi, prec, m, sd, coef, chain_kind, vb1, dv, cum, out)
        return out
    edges = np.linspace(b_lo, b_hi, parts + 1).astype(int)

    def task(i):
        lo, hi = int(edges[i]), int(edges[i + 1])
        step_rows(lo, hi, prec, m, sd, coef, chain_kind, vb1, dv, cum, out[lo - b_lo:hi - b_lo])

    list(pool.map(task, range(parts)))
    return out


def _prepare_parents(parents, states):
    """Pad parent tables to a common width; return vb1, dv, cum per parent."""
    tables = [states[p] for p in parents]
    if all(t is None for t in tables):
        n = len(parents)
        return np.zeros(n), np.zeros((0, n)), np.zeros((1, n))
    width = max(len(t) for t in tables)
    vb = np.ones((width, len(tables)))
    for i, t in enumerate(tables):
        vb[:len(t), i] = t
    dv = np.diff(vb, axis=0)
    cum = np.zeros((width, len(tables)))
    np.cumsum(dv, axis=0, out=cum[1:])
    return vb[0].copy(), dv, cum


class _StepContext:
    def __init__(self, mb, kinds):
        self.m = mb.m
        self.sd = math.sqrt(mb.v)
        self.kinds = sorted(set(kinds), key=lambda k: k.value)
        self.index = {k: i for i, k in enumerate(self.kinds)}
        self.coef = np.array([coefficient_row(k, mb) for k in self.kinds])


def _advance(ctx, prec, chains, parents, states, grid, pool, parts, y):
    """One backward step for every chain; returns {key: truncated table}."""
    pidx = {p: i for i, p in enumerate(parents)}
    vb1_p, dv_p, cum_p = _prepare_parents(parents, states)
    cols = np.array([pidx[pk] for (_, pk, _) in chains], dtype=np.int64)
    chain_kind = np.array([ctx.index[k] for (_, _, k) in chains], dtype=np.int64)
    vb1 = np.ascontiguousarray(vb1_p[cols])
    dv = np.ascontiguousarray(dv_p[:, cols])
    cum = np.ascontiguousarray(cum_p[:, cols])
    nb = grid.bucket_count
    block = max(64, 16 * parts)
    done = {}
    pieces = []
    b = 1
    active = list(range(len(chains)))
    while active:
        if b > nb:
            raise GridError(
                f"ruin probability at the largest ruin factor is below 1 at t={y}: increase rf_max")
        hi = min(nb + 1, b + block)
        sub = np.array(active, dtype=np.int64)
        out = _run_rows(b, hi, float(prec), ctx.m, ctx.sd, ctx.coef, chain_kind[sub],
                        vb1[sub], np.ascontiguousarray(dv[:, sub]), np.ascontiguousarray(cum[:, sub]),
                        pool, parts)
        pieces.append((b, sub, out))
        still = []
        for j, c in enumerate(sub):
            hit = np.flatnonzero(out[:, j] >= 1.0)
            if hit.size:
                done[int(c)] = b + int(hit[0])  # frontier bucket
            else:
                still.append(int(c))
        active = still
        b = hi
    result = {}
    for c, (key, _, _) in enumerate(chains):
        front = done[c]
        table = np.empty(front)
        for (b0, sub, out) in pieces:
            pos = np.flatnonzero(sub == c)
            if pos.size == 0 or b0 > front:
                continue
            stop = min(front, b0 + out.shape[0] - 1)
            table[b0 - 1:stop] = out[:stop - b0 + 1, pos[0]]
        if table[-1] > 1.0 + 2e-16:
            raise ConsistencyError(f"ruin probability exceeds one at t={y}")
        table[-1] = 1.0
        if front > 1 and np.min(np.diff(table)) < -1e-15:
            raise ConsistencyError(f"ruin probabilities are not monotone in the ruin factor at t={y}")
        result[key] = table
    return result


def _backward(mbs, keys, kind_of, grid, pool, parts):
    """Tables for every distinct selector suffix after the backward pass to t=1."""
    states = {(): None}
    for y in range(len(mbs) - 1, 0, -1):
        plan = {}
        for key, pts in zip(keys, kind_of):
            new = _suffix(key, y)
            if new not in plan:
                plan[new] = (_suffix(key, y + 1), pts.get(y, DensityKind.STANDARD))
        chains = [(k, pk, kind) for k, (pk, kind) in plan.items()]
        parents = list(dict.fromkeys(pk for (_, pk, _) in chains))
        ctx = _StepContext(mbs[y], [kind for (_, _, kind) in chains])
        states = _advance(ctx, grid.precision, chains, parents, states, grid, pool, parts, y)
    return states


def success_probabilities_dp(params, glidepath, withdrawal_rate, grid, selectors, workers=1):
    """Success probabilities for several density selectors in one backward pass.

    Selectors that agree on all time points after t share their tables up
    to t, so a full Hessian costs little more than a handful of plain DPs.
    """
    a = clamp_glidepath(params, check_glidepath(glidepath))
    wr = check_withdrawal_rate(withdrawal_rate)
    horizon = a.size
    selectors = [STANDARD if s is None else s for s in selectors]
    for s in selectors:
        s.validate(horizon)
    if wr >= grid.rf_max:
        raise GridError("rf_max must exceed the withdrawal rate")
    b0 = grid.initial_bucket(wr)
    if b0 < 1:
        raise GridError("withdrawal rate rounds to bucket 0: increase the precision")
    prec = grid.precision
    keys = [_kind_key(s, horizon) for s in selectors]
    kind_of = [s.points() for s in selectors]
    mbs = [moments(params, x) for x in a]
    parts = check_positive_int(workers, "workers")
    pool = ThreadPoolExecutor(max_workers=parts) if parts > 1 else None
    try:
        states = _backward(mbs, keys, kind_of, grid, pool, parts)
    finally:
        if pool is not None:
            pool.shutdown()
    # time 0: only the starting bucket is needed
    plan = {}
    for key, pts in zip(keys, kind_of):
        if key not in plan:
            plan[key] = (_suffix(key, 1), pts.get(0, DensityKind.STANDARD))
    chains = [(k, pk, kind) for k, (pk, kind) in plan.items()]
    parents = list(dict.fromkeys(pk for (_, pk, _) in chains))
    ctx = _StepContext(mbs[0], [kind for (_, _, kind) in chains])
    vb1_p, dv_p, cum_p = _prepare_parents(parents, states)
    cols = np.array([parents.index(pk) for (_, pk, _) in chains], dtype=np.int64)
    chain_kind = np.array([ctx.index[k] for (_, _, k) in chains], dtype=np.int64)
    out = np.empty((1, len(chains)))
    step_rows(b0, b0 + 1, float(prec), ctx.m, ctx.sd, ctx.coef, chain_kind,
              np.ascontiguousarray(vb1_p[cols]), np.ascontiguousarray(dv_p[:, cols]),
              np.ascontiguousarray(cum_p[:, cols]), out)
    final = {k: 1.0 - out[0, i] for i, (k, _, _) in enumerate(chains)}
    return np.array([final[k] for k in keys])


def success_probability_dp(params, glidepath, withdrawal_rate, grid=None, selector=None, workers=1):
    grid = DpGrid() if grid is None else grid
    return float(success_probabilities_dp(params, glidepath, withdrawal_rate, grid, [selector], workers)[0])


# Monte Carlo -----------------------------------------------------------------

def rejection_bounds(kind, mb, npoints=100_000):
    """Box (x_low, x_high, y_high) enclosing a special density for rejection sampling."""
    kind = DensityKind(kind)
    if kind is DensityKind.STANDARD:
        raise ParameterError("the standard density is sampled directly")
    sd = math.sqrt(mb.v)
    x = np.linspace(mb.m - 12.0 * sd, mb.m + 12.0 * sd, npoints)
    y = pdf(kind, mb, x)
    step = x[1] - x[0]
    keep = np.flatnonzero(y > 1e-12)
    lo = x[keep[0]] - 3.0 * step
    hi = x[keep[-1]] + 3.0 * step
    return float(lo), float(hi), float(1.05 * y.max())


def _draw_special(rng, kind, mb, box, size):
    lo, hi, top = box
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        batch = max(1024, int(need * (top * (hi - lo)) * 1.1))
        x = rng.uniform(lo, hi, batch)
        u = rng.uniform(0.0, top, batch)
        dens = pdf(kind, mb, x)
        if np.any(dens > top):
            raise EnvelopeError(
                f"{kind.name} density exceeds the rejection box at alpha={mb.alpha:.10f}")
        acc = x[u < dens][:need]
        out[filled:filled + acc.size] = acc
        filled += acc.size
    return out


def _simulate_chunk(rng, size, wr, mbs, kinds, boxes):
    rf = np.full(size, wr)
    for t, mb in enumerate(mbs):
        kind = kinds.get(t, DensityKind.STANDARD)
        if kind is DensityKind.STANDARD:
            r = rng.normal(mb.m, math.sqrt(mb.v), rf.size)
        else:
            r = _draw_special(rng, kind, mb, boxes[t], rf.size)
        ok = r > rf
        rf = rf[ok]
        rf = rf / (r[ok] - rf)
        if rf.size == 0:
            break
    return rf.size


def success_probability_mc(params, glidepath, withdrawal_rate, n, selector=None, seed=0,
                           workers=1, chunk=1_000_000):
    """Fraction of n simulated trajectories that never hit ruin.

    Trials are split across workers; worker i draws from a generator
    spawned from SeedSequence(seed), so the estimate is a pure function of
    (inputs, seed, workers).
    """
    a = clamp_glidepath(params, check_glidepath(glidepath))
    wr = check_withdrawal_rate(withdrawal_rate)
    n = check_positive_int(n, "n")
    workers = check_positive_int(workers, "workers")
    selector = STANDARD if selector is None else selector
    selector.validate(a.size)
    mbs = [moments(params, x) for x in a]
    kinds = selector.points()
    boxes = {t: rejection_bounds(k, mbs[t]) for t, k in kinds.items()}
    seqs = np.random.SeedSequence(seed).spawn(workers)
    shares = [n // workers + (1 if i < n % workers else 0) for i in range(workers)]

    def task(i):
        rng = np.random.default_rng(seqs[i])
        left, alive = shares[i], 0
        while left > 0:
            k = min(chunk, left)
            alive += _simulate_chunk(rng, k, wr, mbs, kinds, boxes)
            left -= k
        return alive

    if workers == 1:
        alive = task(0)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            alive = sum(pool.map(task, range(workers)))
    return alive / n
