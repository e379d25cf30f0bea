"""Brute-force references for the reporting and partition problems.

Nothing here uses the structure the solvers rely on: reports are found by
grid search over ``r``, and partition cells are scored with the manager's
grid-searched best response and the clipped loss, so messages may gamble or
be rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .distributions import DEFAULT_TAIL_MASS, Distribution
from .errors import SolverError, ValidationError


@dataclass(frozen=True)
class OracleConfig:
    report_grid_points: int = 100_000
    partition_grid_points: int = 200
    max_intervals: int = 8
    quadrature_tol: float = 1e-10
    # per-cell report search: coarse grid, then two zooms of ZOOM_POINTS
    cell_report_points: int = 2000
    budget: float = 2e8

    def __post_init__(self):
        for name in ("report_grid_points", "partition_grid_points", "max_intervals", "cell_report_points"):
            if int(getattr(self, name)) < 2:
                raise ValidationError(f"{name} must be at least 2", code=name)
        if not self.quadrature_tol > 0:
            raise ValidationError("quadrature_tol must be positive", code="quadrature_tol")


ZOOM_POINTS = 101


def _payoff(d: Distribution, a, b, pi_r, r, total):
    lo = np.maximum(r - pi_r, a)
    hi = np.minimum(r + pi_r, b)
    acc = np.where(hi > lo, np.asarray(d.cdf(hi)) - np.asarray(d.cdf(lo)), 0.0)
    return r * np.clip(acc / total, 0.0, 1.0)


def _finite_message(d: Distribution, a: float, b: float):
    lo, hi = d.effective_support(DEFAULT_TAIL_MASS)
    return (a if math.isfinite(a) else lo), (b if math.isfinite(b) else hi)


def oracle_report(d: Distribution, a: float, b: float, pi_r: float, cfg: OracleConfig = OracleConfig()) -> tuple[float, float]:
    """Grid argmax of r * A(r) on [max(0, a - pi_r), b + pi_r], zoomed twice."""
    if not a < b:
        raise ValidationError("oracle needs a < b", code="message")
    if b <= -pi_r:
        return 0.0, 0.0
    fa, fb = _finite_message(d, a, b)
    total = float(d.mass(a, b))
    lo, hi = max(0.0, fa - pi_r), fb + pi_r
    rs = np.linspace(lo, hi, int(cfg.report_grid_points))
    for _ in range(3):
        pay = _payoff(d, a, b, pi_r, rs, total)
        k = int(np.argmax(pay))
        step = rs[1] - rs[0]
        best_r, best_p = float(rs[k]), float(pay[k])
        rs = np.linspace(max(lo, best_r - step), min(hi, best_r + step), ZOOM_POINTS)
    return best_r, best_p


def _cell_best_responses(d: Distribution, a: float, bs: np.ndarray, pi_r: float, n: int) -> np.ndarray:
    """Grid-searched best response for the messages [a, b_j], vectorised over j."""
    total = np.asarray(d.mass(a, bs), dtype=float)
    lo = np.full_like(bs, max(0.0, a - pi_r))
    hi = bs + pi_r
    pts = n
    best = np.zeros_like(bs)
    for _ in range(3):
        rs = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, pts)[None, :]
        pay = _payoff(d, a, bs[:, None], pi_r, rs, total[:, None])
        k = np.argmax(pay, axis=1)
        best = rs[np.arange(bs.size), k]
        step = (hi - lo) / (pts - 1)
        lo, hi = np.maximum(lo, best - step), np.minimum(hi, best + step)
        pts = ZOOM_POINTS
    return np.where(bs <= -pi_r, 0.0, best)


def _cell_losses(d: Distribution, a: float, bs: np.ndarray, pi_r: float, r: np.ndarray) -> np.ndarray:
    """Unnormalised clipped loss of the messages [a, b_j] with reports r_j."""
    lo = np.maximum(a, r - pi_r)
    hi = np.minimum(bs, r + pi_r)
    ok = hi > lo
    acc_loss = np.where(ok, np.asarray(d.interval_sq_loss(lo, hi, r), dtype=float), 0.0)
    acc_mass = np.where(ok, np.asarray(d.mass(lo, hi), dtype=float), 0.0)
    total = np.asarray(d.mass(a, bs), dtype=float)
    return acc_loss + np.maximum(total - acc_mass, 0.0) * pi_r**2


def oracle_partition(d: Distribution, pi_r: float, cfg: OracleConfig = OracleConfig(),
                     tail_mass: float = DEFAULT_TAIL_MASS) -> tuple[list[float], float]:
    """Best partition with at most ``max_intervals`` cells whose cutoffs lie on
    a uniform grid over the effective support.

    The search is the exact min-plus recursion over grid tuples, so it returns
    the same optimum as enumerating every tuple.
    """
    if not pi_r > 0:
        raise ValidationError(f"pi_r must be positive, got {pi_r}", code="pi_r")
    P, K = int(cfg.partition_grid_points), int(cfg.max_intervals)
    work = P * (P - 1) / 2 * (cfg.cell_report_points + 2 * ZOOM_POINTS)
    if work > cfg.budget:
        raise SolverError(f"oracle needs {work:.3g} evaluations, budget {cfg.budget:.3g}", code="oracle-budget")
    lo, hi = d.effective_support(tail_mass)
    xs = np.linspace(lo, hi, P)
    cost = np.full((P, P), np.inf)
    for i in range(P - 1):
        bs = xs[i + 1:]
        r = _cell_best_responses(d, xs[i], bs, pi_r, int(cfg.cell_report_points))
        cost[i, i + 1:] = _cell_losses(d, xs[i], bs, pi_r, r)
    best = np.full(P, np.inf)
    best[0] = 0.0
    back = []
    results = []
    for _ in range(K):
        cand = best[:, None] + cost
        arg = np.argmin(cand, axis=0)
        best = cand[arg, np.arange(P)]
        back.append(arg)
        results.append(best[-1])
    k_best = int(np.argmin(results))
    loss = float(results[k_best])
    cuts = [P - 1]
    for k in range(k_best, -1, -1):
        cuts.append(int(back[k][cuts[-1]]))
    cuts = cuts[::-1]
    if cuts[0] != 0:
        raise SolverError("oracle backtracking failed", code="oracle-budget")
    return [float(xs[c]) for c in cuts], loss


def quad_expectation(d: Distribution, fn, lo: float, hi: float, cfg: OracleConfig = OracleConfig()) -> float:
    """E[fn(X) | lo <= X <= hi] by adaptive quadrature."""
    lo_f, hi_f = max(lo, d.support[0]), min(hi, d.support[1])
    num, _ = integrate.quad(lambda x: fn(x) * d.pdf(x), lo_f, hi_f, epsabs=cfg.quadrature_tol,
                            epsrel=cfg.quadrature_tol, limit=500)
    den = float(d.mass(lo_f, hi_f))
    return num / den
