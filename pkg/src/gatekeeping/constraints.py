"""Acceptance constraints on always-accepted messages.

A message ``[a, b]`` is accepted with probability one exactly when the
manager prefers the safe report ``a + pi_r`` (no gambling, ``a >= gamma_g(b)``)
and the safe report is acceptable to every type in the message
(``b - a <= 2 pi_r``). Together: ``a >= gamma(b) = max(gamma_g(b), b - 2 pi_r)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .distributions import Distribution
from .errors import SolverError, ValidationError
from .reporting import MAXITER, XTOL

_BISECT_STEPS = 64


def _gap(d: Distribution, a, b, pi_r):
    # (a + pi_r) f(a) - (F(b) - F(a)); negative iff the manager gambles on [a, b]
    return (a + pi_r) * d.ext_pdf(a) - d.ext_mass(a, b)


def _check_pi(pi_r: float) -> None:
    if not pi_r > 0:
        raise ValidationError(f"pi_r must be positive, got {pi_r}", code="pi_r")


def gamma_g(d: Distribution, b: float, pi_r: float) -> float:
    """No-gambling boundary: the root a in (-pi_r, b) of
    a + pi_r = (F(b) - F(a)) / f(a).

    Below a finite lower support end the density formula is continued
    analytically, so uniform priors give (b - pi_r) / 2 for every b.
    """
    _check_pi(pi_r)
    if not b > -pi_r:
        raise ValidationError(f"no-gambling boundary needs b > -pi_r, got b={b}", code="b")
    lo, hi = -pi_r, min(b, d.support[1])
    if _gap(d, lo, b, pi_r) >= 0:
        return lo
    return optimize.brentq(lambda a: _gap(d, a, b, pi_r), lo, hi, xtol=XTOL, maxiter=MAXITER)


def gamma_g_vec(d: Distribution, b, pi_r: float) -> np.ndarray:
    """Vectorised :func:`gamma_g` by bisection; entries with b <= -pi_r get -pi_r."""
    b = np.asarray(b, dtype=float)
    lo = np.full_like(b, -pi_r)
    hi = np.maximum(np.minimum(b, d.support[1]), lo)
    with np.errstate(all="ignore"):
        for _ in range(_BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            neg = _gap(d, mid, b, pi_r) < 0
            lo = np.where(neg, mid, lo)
            hi = np.where(neg, hi, mid)
    return 0.5 * (lo + hi)


def gamma(d: Distribution, b: float, pi_r: float) -> float:
    """Acceptance constraint max(gamma_g(b), b - 2 pi_r)."""
    return max(gamma_g(d, b, pi_r), b - 2.0 * pi_r)


def gamma_vec(d: Distribution, b, pi_r: float) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    return np.maximum(gamma_g_vec(d, b, pi_r), b - 2.0 * pi_r)


def b_hat(d: Distribution, pi_r: float) -> float:
    """Root of gamma_g(b) - (b - 2 pi_r), which decreases in b.

    Returns the upper support end when the no-gambling constraint binds
    everywhere.
    """
    _check_pi(pi_r)
    top = d.support[1]

    def h(b):
        return gamma_g(d, b, pi_r) - (b - 2.0 * pi_r)

    lo = -pi_r + 1e-9 * max(1.0, pi_r)
    if math.isfinite(top):
        if h(top) > 0:
            return top
        hi = top
    else:
        step = max(d.scale, pi_r)
        hi = max(d.median, lo + step)
        for _ in range(200):
            if h(hi) <= 0:
                break
            lo, hi = hi, hi + step
            step *= 2.0
        else:
            raise SolverError("could not bracket the relevance threshold", code="fixed-point-bracket")
    if h(hi) == 0:
        return hi
    return optimize.brentq(h, lo, hi, xtol=XTOL, maxiter=MAXITER)


def gamma_inverse(d: Distribution, a: float, pi_r: float) -> float:
    """Largest b with gamma(b) <= a, capped at the upper support end."""
    _check_pi(pi_r)
    top = d.support[1]
    lo = max(a, -pi_r)
    hi = min(lo + 2.0 * pi_r, top)
    if gamma(d, hi, pi_r) <= a:
        return hi
    return optimize.brentq(lambda b: gamma(d, b, pi_r) - a, lo + 1e-15 * max(1.0, abs(lo)), hi, xtol=XTOL, maxiter=MAXITER)


@dataclass(frozen=True)
class ConstraintProfile:
    """Constraint functions for one (distribution, pi_r) pair."""

    dist: Distribution
    pi_r: float
    b_hat: float

    def gamma_g(self, b):
        return _scalar_or_vec(gamma_g, gamma_g_vec, self.dist, b, self.pi_r)

    def gamma(self, b):
        return _scalar_or_vec(gamma, gamma_vec, self.dist, b, self.pi_r)

    def gamma_inverse(self, a: float) -> float:
        return gamma_inverse(self.dist, a, self.pi_r)

    def to_dict(self, b: float | None = None) -> dict:
        out = {"pi_r": self.pi_r, "b_hat": self.b_hat}
        if b is not None:
            out.update(b=b, gamma_g=float(self.gamma_g(b)), gamma=float(self.gamma(b)))
        return out


def _scalar_or_vec(scalar_fn, vec_fn, d, b, pi_r):
    if np.ndim(b) == 0:
        return scalar_fn(d, float(b), pi_r)
    return vec_fn(d, b, pi_r)


def constraint_profile(d: Distribution, pi_r: float) -> ConstraintProfile:
    return ConstraintProfile(d, pi_r, b_hat(d, pi_r))
