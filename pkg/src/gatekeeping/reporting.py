"""The manager's reporting problem against a veto-wielding auditor.

Given a message ``[a, b]`` the manager picks ``r >= 0`` to maximise
``r * A(r)``, where ``A(r)`` is the probability, under the prior truncated to
``[a, b]``, that ``|r - X| <= pi_r``. The maximiser is one of a few candidates:
the safe option ``a + pi_r``, the interior fixed point ``r1`` of ``h1``, the
kink ``b - pi_r`` and the risky fixed point ``r2`` of ``h2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import optimize

from .distributions import Distribution, Family
from .errors import SolverError, ValidationError

XTOL = 1e-12
MAXITER = 200
# r2 within this distance of the safe option counts as a tie, resolved to Safe
TIE_TOL = 1e-9


class Branch(str, Enum):
    ZERO = "zero"
    SAFE = "safe"
    RISKY_SHORT = "risky_short"
    INTERIOR_LONG = "interior_long"
    KINK_LONG = "kink_long"
    RISKY_LONG = "risky_long"


@dataclass(frozen=True)
class ReportSolution:
    r_star: float
    acceptance_prob: float
    branch: Branch
    safe_option: float
    r1: float | None = None
    r2: float | None = None
    payoff: float = 0.0
    multiple_maximizers: bool = False
    candidates: dict = field(default_factory=dict, compare=False)

    @property
    def risky_candidates(self) -> tuple[float | None, float | None]:
        return (self.r1, self.r2)

    def to_dict(self) -> dict:
        return {
            "r_star": self.r_star,
            "acceptance_prob": self.acceptance_prob,
            "branch": self.branch.value,
            "safe_option": self.safe_option,
            "r1": self.r1,
            "r2": self.r2,
            "payoff": self.payoff,
            "multiple_maximizers": self.multiple_maximizers,
        }


def _check_message(d: Distribution, a: float, b: float, pi_r: float) -> None:
    if not pi_r > 0:
        raise ValidationError(f"pi_r must be positive, got {pi_r}", code="pi_r")
    lo, hi = d.support
    if not a < b:
        raise ValidationError(f"message needs a < b, got [{a}, {b}]", code="message")
    if a < lo or b > hi:
        raise ValidationError(f"message [{a}, {b}] leaves the support [{lo}, {hi}]", code="message")
    if not d.mass(a, b) > 0:
        raise ValidationError(f"message [{a}, {b}] has zero probability", code="message")


def acceptance_prob(d: Distribution, a: float, b: float, pi_r: float, r):
    """P(|r - X| <= pi_r | a <= X <= b); vectorised over ``r``."""
    r = np.asarray(r, dtype=float)
    total = d.mass(a, b)
    acc = d.mass(np.maximum(r - pi_r, a), np.minimum(r + pi_r, b))
    val = np.clip(np.asarray(acc) / total, 0.0, 1.0)
    return float(val) if val.ndim == 0 else val


def manager_payoff(d: Distribution, a: float, b: float, pi_r: float, r):
    """r * A(r) under the normalisation that a rejected report is worth zero."""
    return np.asarray(r) * acceptance_prob(d, a, b, pi_r, r)


def _h2_gap(d: Distribution, b: float, pi_r: float, r: float) -> float:
    # sign of r - h2(r), written without the division so that f = 0 is harmless
    x = min(r - pi_r, b)
    return r * d.pdf(x) - d.mass(x, b)


def solve_fixed_point_h2(d: Distribution, a: float, b: float, pi_r: float) -> float:
    """Risky option: maximiser of r * (F(b) - F(r - pi_r)) over r >= 0.

    Where the density is positive this is the fixed point of
    h2(r) = (F(b) - F(r - pi_r)) / f(r - pi_r); on the uniform family the
    maximiser may sit on the kink where r - pi_r meets the support.
    """
    if not b > -pi_r:
        raise ValidationError("risky option needs b > -pi_r", code="message")
    lo = 0.0
    g_lo = _h2_gap(d, b, pi_r, lo)
    if math.isfinite(b):
        hi = b + pi_r
        g_hi = _h2_gap(d, b, pi_r, hi)
    else:
        # unbounded message: walk right until r * f(r - pi_r) overtakes the tail
        step = max(d.scale, pi_r)
        hi = max(d.median + pi_r, step)
        g_hi = _h2_gap(d, b, pi_r, hi)
        for _ in range(200):
            if g_hi > 0:
                break
            lo, g_lo = hi, g_hi
            hi += step
            step *= 2.0
            g_hi = _h2_gap(d, b, pi_r, hi)
    if g_lo == 0:
        return lo
    if g_hi == 0:
        return hi
    if not (g_lo < 0 < g_hi):
        raise SolverError(
            f"h2 bracket [{lo}, {hi}] has gaps {g_lo:.3g}, {g_hi:.3g}",
            code="fixed-point-bracket",
        )
    return optimize.brentq(lambda r: _h2_gap(d, b, pi_r, r), lo, hi, xtol=XTOL, maxiter=MAXITER)


def _density_gap_root(d: Distribution, pi_r: float) -> float | None:
    """Unique root r_hat of f(r - pi_r) = f(r + pi_r); None when f is flat."""
    if d.family is Family.UNIFORM:
        return None
    if d.family in (Family.NORMAL, Family.LOGISTIC):
        return d.median
    if d.family is Family.EXPONENTIAL:
        # f(r - pi_r) = 0 < f(r + pi_r) left of loc + pi_r, positive gap right of it
        return d.support[0] + pi_r
    raise SolverError(f"no density-gap rule for {d.family}", code="fixed-point-bracket")


def _h1_gap(d: Distribution, pi_r: float, r: float) -> float:
    # sign of r - h1(r) on r > r_hat, where f(r - pi_r) > f(r + pi_r)
    return r * (d.pdf(r - pi_r) - d.pdf(r + pi_r)) - d.mass(r - pi_r, r + pi_r)


def solve_fixed_point_h1(d: Distribution, b: float, pi_r: float) -> float:
    """Interior option r1: fixed point of
    h1(r) = (F(r + pi_r) - F(r - pi_r)) / (f(r - pi_r) - f(r + pi_r)) right of
    r_hat; +inf when the density is flat (uniform).

    ``b`` only matters through the caller's case split and is accepted for
    symmetry with :func:`solve_fixed_point_h2`.
    """
    r_hat = _density_gap_root(d, pi_r)
    if r_hat is None:
        return math.inf
    lo = r_hat + 1e-9 * max(1.0, abs(r_hat))
    if _h1_gap(d, pi_r, lo) >= 0:
        # h1 already below r just right of r_hat (weakly log-concave tails)
        return r_hat
    step = max(d.scale, pi_r)
    hi = lo + step
    for _ in range(200):
        if _h1_gap(d, pi_r, hi) > 0:
            break
        lo, hi = hi, hi + step
        step *= 2.0
    else:
        raise SolverError("could not bracket the h1 fixed point", code="fixed-point-bracket")
    return optimize.brentq(lambda r: _h1_gap(d, pi_r, r), lo, hi, xtol=XTOL, maxiter=MAXITER)


def _pick(d, a, b, pi_r, formula_r, formula_branch, candidates):
    """Guard the closed-form case selection with a direct payoff comparison.

    Returns the winning (r, branch) and whether a distinct candidate ties.
    """
    scored = []
    for r, br in candidates:
        if r is None or not math.isfinite(r):
            continue
        r = max(r, 0.0)
        scored.append((float(manager_payoff(d, a, b, pi_r, r)), r, br))
    best_pay = float(manager_payoff(d, a, b, pi_r, formula_r))
    r_star, branch = formula_r, formula_branch
    for pay, r, br in scored:
        if pay > best_pay * (1 + 1e-12) + 1e-15:
            best_pay, r_star, branch = pay, r, br
    ties = [r for pay, r, _ in scored if abs(pay - best_pay) <= 1e-12 * max(1.0, abs(best_pay))]
    multiple = any(abs(r - r_star) > 1e-6 * max(1.0, abs(r_star)) for r in ties)
    if multiple:
        # several global maximisers: report the smallest
        r_small = min(ties)
        for pay, r, br in scored:
            if r == r_small:
                r_star, branch = r, br
    return r_star, branch, multiple


def solve_report(d: Distribution, a: float, b: float, pi_r: float) -> ReportSolution:
    """Optimal report for the message [a, b] (infinite ends allowed)."""
    _check_message(d, a, b, pi_r)
    safe = a + pi_r
    if b <= -pi_r:
        return ReportSolution(0.0, 0.0, Branch.ZERO, safe, payoff=0.0)

    r2 = solve_fixed_point_h2(d, a, b, pi_r)
    if b - a <= 2 * pi_r:
        if r2 <= safe + TIE_TOL * max(1.0, abs(safe)):
            formula = (max(safe, 0.0), Branch.SAFE)
        else:
            formula = (r2, Branch.RISKY_SHORT)
        r1 = None
        cands = [(safe, Branch.SAFE), (r2, Branch.RISKY_SHORT)]
    else:
        r1 = solve_fixed_point_h1(d, b, pi_r)
        kink = b - pi_r
        if r1 < safe:
            formula = (max(safe, 0.0), Branch.SAFE)
        elif r1 <= kink:
            formula = (r1, Branch.INTERIOR_LONG)
        elif r2 <= kink:
            formula = (kink, Branch.KINK_LONG)
        else:
            formula = (r2, Branch.RISKY_LONG)
        cands = [
            (safe, Branch.SAFE),
            (min(max(r1, safe), kink) if math.isfinite(r1) else None, Branch.INTERIOR_LONG),
            (kink, Branch.KINK_LONG),
            (r2 if r2 > kink else None, Branch.RISKY_LONG),
        ]
    r_star, branch, multiple = _pick(d, a, b, pi_r, formula[0], formula[1], cands)
    acc = float(acceptance_prob(d, a, b, pi_r, r_star))
    if branch is Branch.SAFE and b - a <= 2 * pi_r:
        acc = 1.0
    return ReportSolution(
        r_star=float(r_star),
        acceptance_prob=acc,
        branch=branch,
        safe_option=safe,
        r1=r1,
        r2=r2,
        payoff=float(r_star) * acc,
        multiple_maximizers=multiple,
    )


def expected_auditor_loss(d: Distribution, a: float, b: float, pi_r: float, r: float) -> float:
    """E[min((r - X)^2, pi_r^2) | a <= X <= b]: accepted reports cost the
    squared gap, rejected ones the outside option."""
    total = d.mass(a, b)
    lo = max(a, r - pi_r)
    hi = min(b, r + pi_r)
    acc_loss = float(d.interval_sq_loss(lo, hi, r)) if hi > lo else 0.0
    acc_mass = float(d.mass(lo, hi)) if hi > lo else 0.0
    return (acc_loss + (total - acc_mass) * pi_r**2) / total
