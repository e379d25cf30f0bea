"""Precise communication: the auditor reveals X or stays silent.

Revealed types face the report ``X + pi_r`` and cost ``pi_r^2``. Silence on a
connected set ``ND = [a, b]`` induces the best response ``r0`` to the
truncated prior, costing ``min((r0 - X)^2, pi_r^2)``. Silence is an equilibrium
only when every revealing type is happier revealing: ``|X - r0| >= pi_r``
outside ``ND``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._search import golden_min
from .distributions import DEFAULT_TAIL_MASS, Distribution, Family
from .errors import GatekeepingError, ValidationError
from .reporting import expected_auditor_loss, solve_report

CONSTRAINT_TOL = 1e-8
BINDING_TOL = 1e-6
JOINT_GRID = 64
TIE_TOL = 1e-9


@dataclass(frozen=True)
class SilenceOutcome:
    nd_lo: float
    nd_hi: float
    r0: float
    expected_loss: float
    constraint_binding: bool
    silence_prob: float
    acceptance_prob: float
    # E[loss | X in ND]; the objective is expected_loss
    conditional_loss: float = math.nan

    def to_dict(self) -> dict:
        return {
            "nd_lo": self.nd_lo,
            "nd_hi": self.nd_hi,
            "r0": self.r0,
            "expected_loss": self.expected_loss,
            "conditional_loss": self.conditional_loss,
            "constraint_binding": self.constraint_binding,
            "silence_prob": self.silence_prob,
            "acceptance_prob": self.acceptance_prob,
        }


def _check(d: Distribution, pi_r: float) -> None:
    if not pi_r > 0:
        raise ValidationError(f"pi_r must be positive, got {pi_r}", code="pi_r")
    lo, hi = d.support
    if not hi - lo > 2 * pi_r:
        raise ValidationError("support must be longer than 2 pi_r", code="support")


def silence_loss(d: Distribution, a: float, b: float, pi_r: float) -> tuple[float, float]:
    """(expected loss, r0) for the silence set [a, b], ignoring the
    equilibrium constraint."""
    r0 = solve_report(d, a, b, pi_r).r_star
    m = float(d.mass(a, b))
    loss = m * expected_auditor_loss(d, a, b, pi_r, r0) + (1.0 - m) * pi_r**2
    return loss, r0


def is_equilibrium_silence(d: Distribution, a: float, b: float, r0: float, pi_r: float, tol: float = CONSTRAINT_TOL) -> bool:
    """Every revealed type sits at least pi_r away from r0."""
    lo, hi = d.support
    low_ok = a <= lo or a <= r0 - pi_r + tol
    high_ok = b >= hi or b >= r0 + pi_r - tol
    return low_ok and high_ok


def _outcome(d: Distribution, a: float, b: float, pi_r: float) -> SilenceOutcome:
    sol = solve_report(d, a, b, pi_r)
    r0 = sol.r_star
    m = float(d.mass(a, b))
    cond = expected_auditor_loss(d, a, b, pi_r, r0)
    loss = m * cond + (1.0 - m) * pi_r**2
    binding = math.isfinite(b) and b < d.support[1] and abs(r0 + pi_r - b) <= BINDING_TOL
    return SilenceOutcome(
        nd_lo=float(a),
        nd_hi=float(b),
        r0=float(r0),
        expected_loss=float(loss),
        constraint_binding=bool(binding),
        silence_prob=m,
        acceptance_prob=sol.acceptance_prob,
        conditional_loss=float(cond),
    )


def no_communication_outcome(d: Distribution, pi_r: float) -> SilenceOutcome:
    """Silence everywhere."""
    _check(d, pi_r)
    lo, hi = d.support
    return _outcome(d, lo, hi, pi_r)


def solve_silence_set(d: Distribution, pi_r: float, tail_mass: float = DEFAULT_TAIL_MASS) -> SilenceOutcome:
    """Auditor-optimal connected silence set."""
    _check(d, pi_r)
    s_lo, s_hi = d.support
    lo_eff, hi_eff = d.effective_support(tail_mass)

    def end_a(a):
        return s_lo if a <= lo_eff else a

    def end_b(b):
        return s_hi if b >= hi_eff else b

    def loss_at(a, b):
        a, b = end_a(a), end_b(b)
        if not b > a or not d.mass(a, b) > 0:
            return math.inf
        try:
            loss, r0 = silence_loss(d, a, b, pi_r)
        except GatekeepingError:
            return math.inf
        return loss if is_equilibrium_silence(d, a, b, r0, pi_r) else math.inf

    if d.family is Family.UNIFORM:
        # the lower end can sit at the support bottom without loss
        bs = np.linspace(lo_eff, hi_eff, 1025)[1:]
        vals = np.array([loss_at(lo_eff, b) for b in bs])
        best = np.min(vals)
        k = int(np.max(np.nonzero(vals <= best + TIE_TOL)[0]))
        return _outcome(d, end_a(lo_eff), end_b(bs[k]), pi_r)

    grid = np.linspace(lo_eff, hi_eff, JOINT_GRID)
    best = (math.inf, lo_eff, hi_eff)
    for i, a in enumerate(grid[:-1]):
        for b in grid[i + 1:]:
            v = loss_at(a, b)
            # prefer the larger set on ties
            if v < best[0] - TIE_TOL or (abs(v - best[0]) <= TIE_TOL and b - a > best[2] - best[1]):
                best = (v, a, b)
    v, a, b = best
    step = grid[1] - grid[0]
    for _ in range(8):
        b_new, vb = golden_min(
            lambda x: np.array([loss_at(a, xi) for xi in x]),
            [max(b - step, a + 1e-9)], [min(b + step, hi_eff)], tol=1e-11,
        )
        if vb[0] < v:
            v, b = float(vb[0]), float(b_new[0])
        a_new, va = golden_min(
            lambda x: np.array([loss_at(xi, b) for xi in x]),
            [max(a - step, lo_eff)], [min(a + step, b - 1e-9)], tol=1e-11,
        )
        if va[0] < v - 1e-15:
            v, a = float(va[0]), float(a_new[0])
        else:
            break
        step /= 2
    return _outcome(d, end_a(a), end_b(b), pi_r)


def constraint_violation(outcome: SilenceOutcome, d: Distribution, pi_r: float, n: int = 1000,
                         tail_mass: float = DEFAULT_TAIL_MASS) -> float:
    """Largest shortfall pi_r - |X - r0| over an ``n``-point grid of revealed
    types; at most 0 when the constraint holds."""
    lo, hi = d.effective_support(tail_mass)
    xs = np.linspace(lo, hi, n)
    out = (xs < outcome.nd_lo) | (xs > outcome.nd_hi)
    if not np.any(out):
        return -math.inf
    return float(np.max(pi_r - np.abs(xs[out] - outcome.r0)))
