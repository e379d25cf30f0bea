"""Vectorised golden-section search."""

from __future__ import annotations

import math

import numpy as np

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_min(f, lo, hi, tol: float = 1e-10, max_iter: int = 200):
    """Minimise ``f`` on each bracket ``[lo_i, hi_i]`` independently.

    ``f`` maps an array of abscissae (same shape as ``lo``) to values. Returns
    ``(x, fx)`` including the bracket ends as candidates, so the result is
    never worse than either end.
    """
    lo = np.array(lo, dtype=float, ndmin=1)
    hi = np.array(hi, dtype=float, ndmin=1)
    a, b = lo.copy(), hi.copy()
    c = b - _INV_PHI * (b - a)
    e = a + _INV_PHI * (b - a)
    fc, fe = f(c), f(e)
    for _ in range(max_iter):
        if not np.any(b - a > tol):
            break
        left = fc <= fe
        # shrink toward the better interior point
        b = np.where(left, e, b)
        a = np.where(left, a, c)
        new_e = np.where(left, c, a + _INV_PHI * (b - a))
        new_c = np.where(left, b - _INV_PHI * (b - a), e)
        fe_keep = np.where(left, fc, fe)
        fc_keep = np.where(left, fc, fe)
        probe = np.where(left, new_c, new_e)
        fp = f(probe)
        c, e = new_c, new_e
        fc = np.where(left, fp, fc_keep)
        fe = np.where(left, fe_keep, fp)
    xs = np.stack([c, e, lo, hi])
    fs = np.stack([fc, fe, f(lo), f(hi)])
    fs = np.where(np.isnan(fs), np.inf, fs)
    k = np.argmin(fs, axis=0)
    idx = np.arange(lo.size)
    return xs[k, idx], fs[k, idx]
