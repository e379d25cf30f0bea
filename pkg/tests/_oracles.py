"""Independent reference computations shared by the tests.

These deliberately avoid the package's solvers: closed forms are derived by
hand for the uniform prior, and everything else is dense grid search.
"""

import math

import numpy as np


def uniform_report(a, b, pi_r):
    """Optimal report on a message [a, b] of a uniform prior, by case analysis
    of the piecewise-linear payoff."""
    if b <= -pi_r:
        return 0.0
    risky = (b + pi_r) / 2
    if b - a <= 2 * pi_r:
        return max(a + pi_r, risky)
    return b - pi_r if b >= 3 * pi_r else risky


def grid_payoff_max(d, a, b, pi_r, n=100_001):
    """Best r * A(r) over an even grid on [max(0, a - pi_r), b + pi_r]."""
    lo, hi = d.effective_support(1e-12)
    fa = a if math.isfinite(a) else lo
    fb = b if math.isfinite(b) else hi
    rs = np.linspace(max(0.0, fa - pi_r), fb + pi_r, n)
    total = d.cdf(b) - d.cdf(a)
    acc = np.clip(
        (d.cdf(np.minimum(rs + pi_r, b)) - d.cdf(np.maximum(rs - pi_r, a))) / total, 0.0, 1.0
    )
    acc = np.where(np.minimum(rs + pi_r, b) > np.maximum(rs - pi_r, a), acc, 0.0)
    pay = rs * acc
    k = int(np.argmax(pay))
    return float(rs[k]), float(pay[k])


def uniform_partition_loss(cutoffs, reports, pi_r):
    """Probability-weighted clipped loss of an interval strategy on
    U[cutoffs[0], cutoffs[-1]], integrating the piecewise quadratic exactly."""
    lo, hi = cutoffs[0], cutoffs[-1]
    total = 0.0
    for a, b, r in zip(cutoffs[:-1], cutoffs[1:], reports):
        acc_lo, acc_hi = max(a, r - pi_r), min(b, r + pi_r)
        acc = 0.0
        if acc_hi > acc_lo:
            acc = ((r - acc_lo) ** 3 - (r - acc_hi) ** 3) / 3
        rejected = (b - a) - max(acc_hi - acc_lo, 0.0)
        total += acc + rejected * pi_r**2
    return total / (hi - lo)
