"""Log-concave distribution families and probability primitives.

Every solver in the package talks to the prior of the auditor's preferred
report through the :class:`Distribution` interface defined here: density,
cdf/survival function, quantiles, and moments of the distribution truncated to
an interval. All methods accept scalars or numpy arrays and broadcast.

Truncated moments use closed forms for wide intervals and a 16-point
Gauss-Legendre rule on intervals narrower than ``NARROW_FRACTION`` times the
family scale, where the closed forms lose digits to cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, ClassVar, Mapping

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special

from .errors import SolverError, ValidationError

DEFAULT_TAIL_MASS = 1e-8
MIN_INTERVAL_MASS = 1e-12
NARROW_FRACTION = 0.1

_GL_NODES, _GL_WEIGHTS = leggauss(16)
_SQRT2PI = math.sqrt(2.0 * math.pi)


class Family(str, Enum):
    UNIFORM = "uniform"
    NORMAL = "normal"
    EXPONENTIAL = "exponential"
    LOGISTIC = "logistic"


def _f(x):
    return np.asarray(x, dtype=float)


def _out(arr):
    arr = np.asarray(arr, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


class Distribution:
    """Common interface; concrete families are frozen dataclasses below."""

    family: ClassVar[Family]

    # -- family-specific hooks -------------------------------------------------
    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def scale(self) -> float:
        raise NotImplementedError

    @property
    def params(self) -> dict[str, float]:
        raise NotImplementedError

    def _pdf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _cdf(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _sf(self, x: np.ndarray) -> np.ndarray:
        return 1.0 - self._cdf(x)

    def _ppf(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _isf(self, p: np.ndarray) -> np.ndarray:
        return self._ppf(1.0 - p)

    def _wide_moments(self, lo, hi):
        """Closed-form (mass, mean, variance) on [lo, hi] within the support."""
        raise NotImplementedError

    # analytic continuation of the density formula past a finite lower end;
    # only the no-gambling boundary uses it
    def ext_pdf(self, x):
        return self.pdf(x)

    def ext_mass(self, lo, hi):
        return self.mass(lo, hi)

    @property
    def median(self) -> float:
        return float(self._ppf(np.asarray(0.5)))

    @property
    def mean(self) -> float:
        lo, hi = self.support
        return float(self._wide_moments(_f(lo), _f(hi))[1])

    @property
    def var(self) -> float:
        lo, hi = self.support
        return float(self._wide_moments(_f(lo), _f(hi))[2])

    # -- public vectorised API -------------------------------------------------
    def _clip(self, x):
        lo, hi = self.support
        return np.clip(_f(x), lo, hi)

    def pdf(self, x):
        x = _f(x)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        with np.errstate(over="ignore", invalid="ignore"):
            val = np.where(inside, self._pdf(np.where(inside, x, self.median)), 0.0)
        return _out(val)

    def logpdf(self, x):
        with np.errstate(divide="ignore"):
            return _out(np.log(self.pdf(x)))

    def cdf(self, x):
        return _out(self._cdf(self._clip(x)))

    def sf(self, x):
        return _out(self._sf(self._clip(x)))

    def ppf(self, p):
        p = _f(p)
        if np.any((p < 0) | (p > 1)):
            raise ValidationError("probability outside [0, 1]", code="p")
        return _out(self._ppf(p))

    def isf(self, p):
        p = _f(p)
        if np.any((p < 0) | (p > 1)):
            raise ValidationError("probability outside [0, 1]", code="p")
        return _out(self._isf(p))

    def mass(self, lo, hi):
        """P(lo <= X <= hi); zero when hi <= lo. Uses the survival function in
        the right half to avoid differencing numbers close to one."""
        lo, hi = np.broadcast_arrays(self._clip(lo), self._clip(hi))
        right = lo >= self.median
        left_form = self._cdf(hi) - self._cdf(lo)
        right_form = self._sf(lo) - self._sf(hi)
        m = np.where(right, right_form, left_form)
        return _out(np.where(hi > lo, np.maximum(m, 0.0), 0.0))

    def effective_support(self, tail_mass: float = DEFAULT_TAIL_MASS) -> tuple[float, float]:
        """Support with infinite ends replaced by the ``tail_mass`` quantiles."""
        lo, hi = self.support
        if not math.isfinite(lo):
            lo = float(self._ppf(np.asarray(tail_mass)))
        if not math.isfinite(hi):
            hi = float(self._isf(np.asarray(tail_mass)))
        return lo, hi

    def interval_moments(self, lo, hi):
        """(mass, mean, variance) of X restricted to [lo, hi], vectorised.

        Mean and variance are conditional on the interval; where the mass is
        zero they are NaN.
        """
        lo, hi = np.broadcast_arrays(self._clip(lo), self._clip(hi))
        lo = lo.astype(float, copy=True)
        hi = hi.astype(float, copy=True)
        width = hi - lo
        narrow = np.isfinite(width) & (width < NARROW_FRACTION * self.scale)
        with np.errstate(all="ignore"):
            m_w, mu_w, v_w = self._wide_moments(np.where(narrow, -np.inf, lo), np.where(narrow, np.inf, hi))
            m_n, mu_n, v_n = _gauss_legendre_moments(self, np.where(narrow, lo, 0.0), np.where(narrow, hi, 0.0))
        mass = np.where(narrow, m_n, m_w)
        mean = np.where(narrow, mu_n, mu_w)
        var = np.maximum(np.where(narrow, v_n, v_w), 0.0)
        empty = ~(mass > 0)
        mean = np.where(empty, np.nan, mean)
        var = np.where(empty, np.nan, var)
        mass = np.where(empty, 0.0, mass)
        return _out(mass), _out(mean), _out(var)

    def interval_sq_loss(self, lo, hi, r):
        """Unnormalised integral of (r - x)^2 f(x) over [lo, hi]."""
        mass, mean, var = self.interval_moments(lo, hi)
        mass = _f(mass)
        with np.errstate(invalid="ignore"):
            val = mass * ((_f(r) - _f(mean)) ** 2 + _f(var))
        return _out(np.where(mass > 0, val, 0.0))

    def spec(self) -> dict[str, Any]:
        return {"family": self.family.value, "params": dict(self.params)}


def _gauss_legendre_moments(d: Distribution, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[..., None] + half[..., None] * _GL_NODES
    w = half[..., None] * _GL_WEIGHTS * d._pdf(x)
    mass = w.sum(axis=-1)
    mean = (w * x).sum(axis=-1) / mass
    var = (w * (x - mean[..., None]) ** 2).sum(axis=-1) / mass
    return mass, mean, var


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Uniform(Distribution):
    lower: float
    upper: float
    family: ClassVar[Family] = Family.UNIFORM

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)) or not self.lower < self.upper:
            raise ValidationError(f"uniform requires finite lower < upper, got {self.lower}, {self.upper}", code="params")

    @property
    def support(self):
        return (self.lower, self.upper)

    @property
    def scale(self):
        return self.upper - self.lower

    @property
    def params(self):
        return {"lower": self.lower, "upper": self.upper}

    def _pdf(self, x):
        return np.full_like(_f(x), 1.0 / (self.upper - self.lower))

    def _cdf(self, x):
        return (x - self.lower) / (self.upper - self.lower)

    def _sf(self, x):
        return (self.upper - x) / (self.upper - self.lower)

    def _ppf(self, p):
        return np.clip(self.lower + p * (self.upper - self.lower), self.lower, self.upper)

    def _isf(self, p):
        return np.clip(self.upper - p * (self.upper - self.lower), self.lower, self.upper)

    @property
    def median(self):
        return 0.5 * (self.lower + self.upper)

    def ext_pdf(self, x):
        return _out(np.full_like(_f(x), 1.0 / (self.upper - self.lower)))

    def ext_mass(self, lo, hi):
        return _out((_f(hi) - _f(lo)) / (self.upper - self.lower))

    def _wide_moments(self, lo, hi):
        return (hi - lo) / (self.upper - self.lower), 0.5 * (lo + hi), (hi - lo) ** 2 / 12.0

    def interval_moments(self, lo, hi):
        lo, hi = np.broadcast_arrays(self._clip(lo), self._clip(hi))
        mass, mean, var = self._wide_moments(lo, hi)
        empty = ~(hi > lo)
        return (
            _out(np.where(empty, 0.0, mass)),
            _out(np.where(empty, np.nan, mean)),
            _out(np.where(empty, np.nan, var)),
        )


@dataclass(frozen=True)
class Normal(Distribution):
    mu: float
    sigma: float
    family: ClassVar[Family] = Family.NORMAL

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma)) or not self.sigma > 0:
            raise ValidationError(f"normal requires sigma > 0, got {self.sigma}", code="params")

    @property
    def support(self):
        return (-math.inf, math.inf)

    @property
    def scale(self):
        return self.sigma

    @property
    def params(self):
        return {"mean": self.mu, "std": self.sigma}

    @property
    def median(self):
        return self.mu

    def _z(self, x):
        return (x - self.mu) / self.sigma

    def _pdf(self, x):
        z = self._z(x)
        return np.exp(-0.5 * z * z) / (self.sigma * _SQRT2PI)

    def _cdf(self, x):
        return special.ndtr(self._z(x))

    def _sf(self, x):
        return special.ndtr(-self._z(x))

    def _ppf(self, p):
        return self.mu + self.sigma * special.ndtri(p)

    def _isf(self, p):
        return self.mu - self.sigma * special.ndtri(p)

    def _wide_moments(self, lo, hi):
        a = self._z(lo)
        b = self._z(hi)
        mass = self.mass(lo, hi)
        mass = np.asarray(mass, dtype=float)
        a_fin = np.where(np.isfinite(a), a, 0.0)
        b_fin = np.where(np.isfinite(b), b, 0.0)
        phi_a = np.where(np.isfinite(a), np.exp(-0.5 * a_fin**2) / _SQRT2PI, 0.0)
        phi_b = np.where(np.isfinite(b), np.exp(-0.5 * b_fin**2) / _SQRT2PI, 0.0)
        aphi_a = a_fin * phi_a
        bphi_b = b_fin * phi_b
        shift = (phi_a - phi_b) / mass
        mean = self.mu + self.sigma * shift
        var = self.sigma**2 * (1.0 + (aphi_a - bphi_b) / mass - shift**2)
        return mass, mean, var


def _softplus(z):
    return np.logaddexp(0.0, z)


def _logistic_lower_partials(z):
    """Partial moments int_{-inf}^{z} t^k f(t) dt, k = 0, 1, 2, of the standard
    logistic, valid for z <= 0 (z = -inf allowed)."""
    z = np.minimum(z, 0.0)
    finite = np.isfinite(z)
    zz = np.where(finite, z, 0.0)
    s = special.expit(zz)
    sp = _softplus(zz)
    # scipy's spence(x) is Li2(1 - x), so Li2(-e^z) = spence(1 + e^z)
    li2 = special.spence(1.0 + np.exp(zz))
    p0 = s
    p1 = zz * s - sp
    p2 = zz * zz * s - 2.0 * zz * sp - 2.0 * li2
    return (
        np.where(finite, p0, 0.0),
        np.where(finite, p1, 0.0),
        np.where(finite, p2, 0.0),
    )


_LOG2 = math.log(2.0)
_PI2_6 = math.pi**2 / 6.0


@dataclass(frozen=True)
class Logistic(Distribution):
    loc: float
    s: float
    family: ClassVar[Family] = Family.LOGISTIC

    def __post_init__(self):
        if not (math.isfinite(self.loc) and math.isfinite(self.s)) or not self.s > 0:
            raise ValidationError(f"logistic requires scale > 0, got {self.s}", code="params")

    @property
    def support(self):
        return (-math.inf, math.inf)

    @property
    def scale(self):
        return self.s

    @property
    def params(self):
        return {"loc": self.loc, "scale": self.s}

    @property
    def median(self):
        return self.loc

    def _z(self, x):
        return (x - self.loc) / self.s

    def _pdf(self, x):
        z = -np.abs(self._z(x))
        e = np.exp(z)
        return e / (self.s * (1.0 + e) ** 2)

    def _cdf(self, x):
        return special.expit(self._z(x))

    def _sf(self, x):
        return special.expit(-self._z(x))

    def _ppf(self, p):
        return self.loc + self.s * special.logit(p)

    def _isf(self, p):
        return self.loc - self.s * special.logit(p)

    def _wide_moments(self, lo, hi):
        a = self._z(lo)
        b = self._z(hi)
        # lower-half contribution over [a, min(b, 0)], upper half by symmetry
        la = np.minimum(a, 0.0)
        lb = np.minimum(b, 0.0)
        pa = _logistic_lower_partials(la)
        pb = _logistic_lower_partials(lb)
        low = [pb[k] - pa[k] for k in range(3)]
        ua = np.maximum(a, 0.0)
        ub = np.maximum(b, 0.0)
        # int_{u}^{inf} t^k f = (-1)^k P_k(-u)
        qa = _logistic_lower_partials(-ua)
        qb = _logistic_lower_partials(-ub)
        sign = (1.0, -1.0, 1.0)
        up = [sign[k] * (qa[k] - qb[k]) for k in range(3)]
        m0 = low[0] + up[0]
        m1 = low[1] + up[1]
        m2 = low[2] + up[2]
        mean_z = m1 / m0
        var_z = m2 / m0 - mean_z**2
        return m0, self.loc + self.s * mean_z, self.s**2 * var_z


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float
    loc: float = 0.0
    family: ClassVar[Family] = Family.EXPONENTIAL

    def __post_init__(self):
        if not (math.isfinite(self.rate) and math.isfinite(self.loc)) or not self.rate > 0:
            raise ValidationError(f"exponential requires rate > 0, got {self.rate}", code="params")

    @property
    def support(self):
        return (self.loc, math.inf)

    @property
    def scale(self):
        return 1.0 / self.rate

    @property
    def params(self):
        return {"rate": self.rate, "loc": self.loc}

    @property
    def median(self):
        return self.loc + _LOG2 / self.rate

    def _pdf(self, x):
        return self.rate * np.exp(-self.rate * (x - self.loc))

    def _cdf(self, x):
        return -np.expm1(-self.rate * (x - self.loc))

    def _sf(self, x):
        return np.exp(-self.rate * (x - self.loc))

    def _ppf(self, p):
        with np.errstate(divide="ignore"):
            return self.loc - np.log1p(-p) / self.rate

    def _isf(self, p):
        with np.errstate(divide="ignore"):
            return self.loc - np.log(p) / self.rate

    def ext_pdf(self, x):
        return _out(self.rate * np.exp(-self.rate * (_f(x) - self.loc)))

    def ext_mass(self, lo, hi):
        lo = _f(lo)
        hi = _f(hi)
        return _out(np.exp(-self.rate * (lo - self.loc)) * -np.expm1(-self.rate * (hi - lo)))

    def _wide_moments(self, lo, hi):
        lam = self.rate
        width = hi - lo
        mass = np.asarray(self.mass(lo, hi), dtype=float)
        x = lam * width
        finite = np.isfinite(x)
        xf = np.where(finite, x, 1.0)
        em1 = np.expm1(xf)
        mean_off = np.where(finite, 1.0 / lam - np.where(finite, width, 0.0) / em1, 1.0 / lam)
        # var = 1/lam^2 - w^2 e^{x} / (e^{x} - 1)^2, written to avoid overflow
        tail = np.where(finite, (np.where(finite, width, 0.0) ** 2) * np.exp(-xf) / (-np.expm1(-xf)) ** 2, 0.0)
        var = 1.0 / lam**2 - tail
        return mass, lo + mean_off, var


_FAMILIES: dict[str, tuple[type[Distribution], dict[str, tuple[str, ...]]]] = {
    "uniform": (Uniform, {"lower": ("lower", "low", "a"), "upper": ("upper", "high", "b")}),
    "normal": (Normal, {"mu": ("mean", "mu"), "sigma": ("std", "sigma", "sd")}),
    "logistic": (Logistic, {"loc": ("loc", "mean", "mu"), "s": ("scale", "s")}),
    "exponential": (Exponential, {"rate": ("rate", "lambda"), "loc": ("loc",)}),
}


def from_spec(spec: Mapping[str, Any]) -> Distribution:
    """Build a distribution from ``{"family": ..., "params": {...}}``."""
    if not isinstance(spec, Mapping):
        raise ValidationError("distribution spec must be an object", code="dist")
    family = str(spec.get("family", "")).lower()
    if family not in _FAMILIES:
        raise ValidationError(f"unknown family {spec.get('family')!r}", code="dist.family")
    cls, aliases = _FAMILIES[family]
    raw = dict(spec.get("params", {}))
    kwargs = {}
    for field, names in aliases.items():
        for name in names:
            if name in raw:
                try:
                    kwargs[field] = float(raw.pop(name))
                except (TypeError, ValueError):
                    raise ValidationError(f"parameter {name!r} is not a number", code=f"dist.params.{name}") from None
                break
    if raw:
        raise ValidationError(f"unknown parameters for {family}: {sorted(raw)}", code="dist.params")
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValidationError(f"missing parameters for {family}: {exc}", code="dist.params") from None


# ---------------------------------------------------------------------------
# Truncation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncatedView:
    """X conditioned on lo <= X <= hi."""

    base: Distribution
    lo: float
    hi: float

    def __post_init__(self):
        s_lo, s_hi = self.base.support
        if not (self.lo < self.hi):
            raise ValidationError(f"truncation needs lo < hi, got [{self.lo}, {self.hi}]", code="interval")
        if self.lo < s_lo or self.hi > s_hi:
            raise ValidationError(
                f"[{self.lo}, {self.hi}] is not inside the support [{s_lo}, {s_hi}]", code="interval"
            )

    @property
    def mass(self) -> float:
        return float(self.base.mass(self.lo, self.hi))

    def cdf(self, x):
        m = self.mass
        val = (_f(self.base.cdf(x)) - self.base.cdf(self.lo)) / m
        return _out(np.clip(val, 0.0, 1.0))


def truncated_moments(view: TruncatedView) -> tuple[float, float]:
    """Mean and variance of X given X in [view.lo, view.hi]."""
    mass, mean, var = view.base.interval_moments(view.lo, view.hi)
    if not mass >= MIN_INTERVAL_MASS:
        raise SolverError(
            f"interval [{view.lo}, {view.hi}] carries mass {mass:.3g}", code="empty-interval"
        )
    return float(mean), float(var)


def expected_sq_loss(view: TruncatedView, r: float) -> float:
    """E[(r - X)^2 | X in [lo, hi]] via the bias-variance split."""
    mean, var = truncated_moments(view)
    return (r - mean) ** 2 + var
