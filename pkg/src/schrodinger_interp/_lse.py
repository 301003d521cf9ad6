"""Compiled row-wise log-sum-exp for dense log-kernels."""

import math

import numpy as np
from numba import njit

# Terms more than this far below the row max are skipped: with up to 1e5 terms
# their total is below 1e5 * e**-50 ~ 2e-17 relative, under half an ulp.
CUTOFF = 50.0


@njit(cache=True)
def lse_rows(L, lv, out):
    """``out[j] = M_j + log(sum_k exp(L[j, k] + lv[k] - M_j))`` with ``M_j`` the row max.

    ``lv`` may hold ``-inf`` (exact zeros); at least one entry must be finite.
    """
    n, m = L.shape
    m4 = m - m % 4
    for j in range(n):
        # four independent running maxima break the loop-carried dependency
        a0 = a1 = a2 = a3 = -np.inf
        for k in range(0, m4, 4):
            b0 = L[j, k] + lv[k]
            b1 = L[j, k + 1] + lv[k + 1]
            b2 = L[j, k + 2] + lv[k + 2]
            b3 = L[j, k + 3] + lv[k + 3]
            a0 = b0 if b0 > a0 else a0
            a1 = b1 if b1 > a1 else a1
            a2 = b2 if b2 > a2 else a2
            a3 = b3 if b3 > a3 else a3
        for k in range(m4, m):
            b0 = L[j, k] + lv[k]
            a0 = b0 if b0 > a0 else a0
        mx = max(max(a0, a1), max(a2, a3))
        s = 0.0
        for k in range(m):
            a = L[j, k] + lv[k] - mx
            if a > -CUTOFF:
                s += math.exp(a)
        out[j] = mx + math.log(s)
