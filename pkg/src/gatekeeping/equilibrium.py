"""Equilibrium checks for interval strategies.

Off-path messages are met with wishful beliefs: the manager treats a message
``D`` as if ``X = sup D`` and reports ``sup D + pi_r``. A deviation therefore
never earns the auditor more than ``-pi_r^2``, which is the content of the
no-profitable-deviation check below.

A self-signaling set is an interval whose types would all strictly gain by
announcing it, if the manager believed the announcement. Strategies with
on-path rejections admit one built from the rejected types of a message.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constraints import gamma_inverse
from .distributions import DEFAULT_TAIL_MASS, Distribution
from .errors import GatekeepingError
from .reporting import solve_report
from .vague_partition import Partition

GAIN_TOL = 1e-8
POSITIVE_MASS = 1e-6
N_TYPES = 1000
N_ENDPOINTS = 64
N_WITNESS = 201


@dataclass(frozen=True)
class DeviationReport:
    is_equilibrium: bool
    max_gain: float
    worst_x: float | None
    worst_message: tuple[float, float] | None
    checks_performed: int
    onpath_rejection_mass: float

    @property
    def worst_violation(self):
        if self.max_gain <= GAIN_TOL:
            return None
        return (self.worst_x, self.worst_message, self.max_gain)

    def to_dict(self) -> dict:
        return {
            "is_equilibrium": self.is_equilibrium,
            "max_gain": self.max_gain,
            "worst_x": self.worst_x,
            "worst_message": list(self.worst_message) if self.worst_message else None,
            "checks_performed": self.checks_performed,
            "onpath_rejection_mass": self.onpath_rejection_mass,
        }


@dataclass(frozen=True)
class SelfSignalingResult:
    found: bool
    set_lo: float | None = None
    set_hi: float | None = None
    witness: str | None = None
    message: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "set_lo": self.set_lo,
            "set_hi": self.set_hi,
            "witness": self.witness,
            "message": list(self.message) if self.message else None,
        }


def _clipped_loss(r, x, pi_r):
    gap = np.abs(np.asarray(r) - np.asarray(x))
    return np.where(gap <= pi_r, gap**2, pi_r**2)


def _span(p: Partition, d: Distribution, tail_mass: float):
    lo, hi = p.cutoffs[0], p.cutoffs[-1]
    e_lo, e_hi = d.effective_support(tail_mass)
    return max(lo, e_lo), min(hi, e_hi)


def onpath_loss(p: Partition, x, pi_r: float):
    """Auditor's loss at types ``x`` under the strategy's own reports."""
    x = np.asarray(x, dtype=float)
    idx = np.clip(np.searchsorted(np.asarray(p.cutoffs), x, side="right") - 1, 0, p.n_intervals - 1)
    r = np.asarray(p.reports)[idx]
    return _clipped_loss(r, x, pi_r)


def verify_partition_equilibrium(
    p: Partition,
    d: Distribution,
    pi_r: float,
    n_types: int = N_TYPES,
    n_endpoints: int = N_ENDPOINTS,
    tail_mass: float = DEFAULT_TAIL_MASS,
) -> DeviationReport:
    """Compare on-path losses with every off-path interval message (endpoints
    on a grid) under wishful beliefs, at ``n_types`` sampled types."""
    lo, hi = _span(p, d, tail_mass)
    xs = np.linspace(lo, hi, n_types)
    ends = np.linspace(lo, hi, n_endpoints)
    i, j = np.triu_indices(n_endpoints, k=1)
    m_lo, m_hi = ends[i], ends[j]
    cuts = np.asarray(p.cutoffs)
    onpath = np.isclose(m_lo[:, None], cuts[None, :-1], atol=1e-12) & np.isclose(m_hi[:, None], cuts[None, 1:], atol=1e-12)
    keep = ~onpath.any(axis=1)
    m_lo, m_hi = m_lo[keep], m_hi[keep]
    r_dev = np.maximum(m_hi + pi_r, 0.0)
    base = onpath_loss(p, xs, pi_r)
    contains = (xs[:, None] >= m_lo[None, :]) & (xs[:, None] <= m_hi[None, :])
    dev = _clipped_loss(r_dev[None, :], xs[:, None], pi_r)
    gain = np.where(contains, base[:, None] - dev, -np.inf)
    checks = int(contains.sum())
    rej = float(sum(m * (1.0 - a) for m, a in zip(p.masses, p.acceptance)))
    if checks == 0:
        return DeviationReport(True, -math.inf, None, None, 0, rej)
    flat = int(np.argmax(gain))
    t, k = np.unravel_index(flat, gain.shape)
    g = float(gain[t, k])
    return DeviationReport(
        is_equilibrium=g <= GAIN_TOL,
        max_gain=g,
        worst_x=float(xs[t]),
        worst_message=(float(m_lo[k]), float(m_hi[k])),
        checks_performed=checks,
        onpath_rejection_mass=rej,
    )


def _candidate(d, pi_r, lo_s, sup_set):
    if lo_s <= -pi_r:
        # the safe report at -pi_r is 0, which only -pi_r itself accepts
        lo_s = -pi_r + 0.5 * (sup_set + pi_r)
    hi_s = min(sup_set, gamma_inverse(d, lo_s, pi_r))
    return lo_s, hi_s


def _self_signals(p: Partition, d: Distribution, pi_r: float, lo_s: float, hi_s: float) -> bool:
    if not hi_s > lo_s or not d.mass(lo_s, hi_s) > POSITIVE_MASS:
        return False
    try:
        sol = solve_report(d, lo_s, hi_s, pi_r)
    except GatekeepingError:
        return False
    xs = np.linspace(lo_s, hi_s, N_WITNESS + 2)[1:-1]
    dev = _clipped_loss(sol.r_star, xs, pi_r)
    return bool(np.all(dev < onpath_loss(p, xs, pi_r)))


def find_self_signaling_set(p: Partition, d: Distribution, pi_r: float) -> SelfSignalingResult:
    """Look for an interval of on-path-rejected types that would all be
    accepted, at a better report, if they could announce it credibly."""
    for (a, b), r in zip(p.intervals, p.reports):
        # D+: rejected because the report overshoots
        plus = (max(a, -pi_r), min(b, r - pi_r))
        # D-: rejected because the report undershoots
        minus = (max(a, r + pi_r, -pi_r), b)
        for tag, (lo, hi) in (("D+", plus), ("D-", minus)):
            if not hi > lo or not d.mass(lo, hi) > POSITIVE_MASS:
                continue
            lo_s, hi_s = _candidate(d, pi_r, lo, hi)
            if _self_signals(p, d, pi_r, lo_s, hi_s):
                return SelfSignalingResult(True, float(lo_s), float(hi_s), tag, (float(a), float(b)))
    return SelfSignalingResult(False)
