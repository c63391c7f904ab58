"""Compiled inner loop of the ruin-factor dynamic program.

One call advances a batch of value tables ("chains") by one time step over
a contiguous range of buckets.  All chains in the batch share the return
moments of that step; they differ only in which density (f, g, h1, h2) is
used and in the next-period table they read from.

Bucket b holds ruin factor rf = b / prec.  The return x_j = rf * (1 + prec / (j + 0.5))
moves the ruin factor from bucket j + 1 to bucket j, so with V the
next-period ruin table and F the CDF of the return, the conditional
next-period ruin probability given survival is

    e = V(1) + sum_j M_j * (V(j + 1) - V(j)),   M_j = (F(x_j) - F(rf)) / (1 - F(rf)).

This is the telescoped sum of CDF differences times bucket values.  Once
the ruin probability 1 - (1 - F(rf)) (1 - e) passes 0.5 it is formed from
the survival sum S = sum_j (1 - F(x_j)) (V(j + 1) - V(j)) instead, which
equals (1 - F(rf)) (1 - e) without the cancellation.  Leading columns with
F(x_j) == 1 contribute only to e (through a prefix sum); trailing columns
with M_j < 1e-18 are dropped from e and contribute (1 - F(rf)) dV to S.
"""
import math

import numpy as np
from numba import njit

from .special import basis, combine

_TAIL = 1e-18
_SQRT2 = math.sqrt(2.0)


@njit(cache=True, nogil=True)
def _cdfs(x, m, sd, coef, val, tail):
    z = (x - m) / sd
    if coef.shape[0] == 1 and coef[0, 1] == 0.0 and coef[0, 2] == 0.0 and coef[0, 3] == 0.0 \
            and coef[0, 4] == 0.0:
        # normal only: skip the gamma tails
        ec = 0.5 * math.erfc(abs(z) / _SQRT2)
        if z < 0.0:
            val[0], tail[0] = ec, 1.0 - ec
        else:
            val[0], tail[0] = 1.0 - ec, ec
        return
    phi, phic, q1, q15, q2, q25 = basis(z)
    above = x > m
    for k in range(coef.shape[0]):
        val[k], tail[k] = combine(phi, phic, q1, q15, q2, q25, above, coef[k])


@njit(cache=True, nogil=True)
def step_rows(b_lo, b_hi, prec, m, sd, coef, chain_kind, vb1, dv, cum, out):
    """Fill out[b - b_lo, c] with the ruin probability of bucket b for chain c.

    coef: (K, 6) CDF coefficient rows; chain_kind: (C,) row index per chain;
    vb1: (C,) next-period value of bucket 1; dv: (ncol, C) next-period
    differences V(j + 1) - V(j); cum: (ncol + 1, C) prefix sums of dv.
    """
    nk = coef.shape[0]
    nc = chain_kind.shape[0]
    ncol = dv.shape[0]
    cv = np.empty(nk)
    cvc = np.empty(nk)
    lv = np.empty(nk)
    lt = np.empty(nk)
    mj = np.empty(nk)
    acc = np.empty(nc)
    sur = np.empty(nc)
    for b in range(b_lo, b_hi):
        rf = b / prec
        _cdfs(rf, m, sd, coef, cv, cvc)
        for c in range(nc):
            acc[c] = 0.0
            sur[c] = 0.0
        if ncol > 0:
            # first column where some CDF drops below one
            lo = 1
            hi = ncol + 1
            while lo < hi:
                mid = (lo + hi) // 2
                _cdfs(rf * (1.0 + prec / (mid + 0.5)), m, sd, coef, lv, lt)
                sat = True
                for k in range(nk):
                    if lv[k] < 1.0:
                        sat = False
                        break
                if sat:
                    lo = mid + 1
                else:
                    hi = mid
            j0 = lo
            for c in range(nc):
                acc[c] = cum[j0 - 1, c]
            j = j0
            while j <= ncol:
                _cdfs(rf * (1.0 + prec / (j + 0.5)), m, sd, coef, lv, lt)
                big = 0.0
                for k in range(nk):
                    if cvc[k] > 0.0:
                        mj[k] = (cvc[k] - lt[k]) / cvc[k]
                    else:
                        mj[k] = 0.0
                    if mj[k] > big:
                        big = mj[k]
                if big < _TAIL:
                    break
                for c in range(nc):
                    d = dv[j - 1, c]
                    acc[c] += mj[chain_kind[c]] * d
                    sur[c] += lt[chain_kind[c]] * d
                j += 1
            # dropped tail columns: 1 - F(x_j) equals 1 - F(rf) to within 1e-18
            for c in range(nc):
                sur[c] += cvc[chain_kind[c]] * (cum[ncol, c] - cum[j - 1, c])
        for c in range(nc):
            k = chain_kind[c]
            if cvc[k] <= 0.0:
                out[b - b_lo, c] = 1.0
                continue
            e = vb1[c] + acc[c]
            p = cv[k] + e - cv[k] * e
            if p > 0.5:
                if ncol > 0:
                    p = 1.0 - sur[c]
                else:
                    p = 1.0 - cvc[k] * (1.0 - e)
            out[b - b_lo, c] = p
