"""Auditor-optimal vague communication.

The auditor partitions the support into interval messages. Messages that are
accepted for sure carry the safe report ``a + pi_r`` and cost
``E[(a + pi_r - X)^2 | a <= X <= b]``; feasibility is ``a >= gamma(b)``. Types
below ``-pi_r`` are rejected whatever they say and share one head message.

Writing ``W(b) = P(X <= b) L(b)`` for the optimal unnormalised loss on the
support below ``b``, the Bellman equation reads

    W(b) = min_{gamma(b) <= a < b}  J(a, b) + W(a),   J(a, b) = int_a^b (a + pi_r - x)^2 dF

and is solved by value iteration on a uniform grid, with the inner minimum
refined off-grid by golden-section search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._search import golden_min
from .constraints import gamma, gamma_inverse, gamma_vec
from .distributions import DEFAULT_TAIL_MASS, Distribution, Family, Uniform
from .errors import SolverError, ValidationError
from .reporting import expected_auditor_loss, solve_report

MIN_GRID = 256
VALUE_TOL = 1e-9
POLICY_STABLE_ITERS = 3
MAX_ITER = 100_000
GOLDEN_TOL = 1e-10
# chain cutoffs this close to -pi_r merge into the rejected head
HEAD_MERGE_TOL = 1e-9


@dataclass(frozen=True)
class Partition:
    cutoffs: tuple[float, ...]
    reports: tuple[float, ...]
    losses: tuple[float, ...]
    masses: tuple[float, ...]
    acceptance: tuple[float, ...]
    zero_acceptance_head: bool
    total_loss: float
    pi_r: float
    method: str = "strategy"
    tail_mass: float = 0.0
    value_function: "ValueFunction | None" = field(default=None, repr=False, compare=False)

    @property
    def n_intervals(self) -> int:
        return len(self.cutoffs) - 1

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return list(zip(self.cutoffs[:-1], self.cutoffs[1:]))

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "pi_r": self.pi_r,
            "n_intervals": self.n_intervals,
            "cutoffs": list(self.cutoffs),
            "reports": list(self.reports),
            "losses": list(self.losses),
            "masses": list(self.masses),
            "acceptance": list(self.acceptance),
            "zero_acceptance_head": self.zero_acceptance_head,
            "total_loss": self.total_loss,
            "tail_mass": self.tail_mass,
        }
        if self.value_function is not None:
            vf = self.value_function
            out["dp"] = {
                "grid_size": len(vf.grid) - 1,
                "iterations": vf.iterations,
                "contraction_estimate": vf.contraction_estimate,
                "final_residual": vf.residuals[-1] if vf.residuals else 0.0,
                "policy_ties": vf.ties,
            }
        return out


@dataclass(frozen=True)
class ValueFunction:
    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    policy: np.ndarray = field(repr=False)
    contraction_estimate: float = math.nan
    residuals: tuple[float, ...] = ()
    iterations: int = 0
    ties: int = 0
    tail_mass: float = DEFAULT_TAIL_MASS


def ideal_uniform_length(pi_r: float) -> float:
    if not pi_r > 0:
        raise ValidationError(f"pi_r must be positive, got {pi_r}", code="pi_r")
    return 1.5 * pi_r


def uniform_interval_loss(delta: float, pi_r: float) -> float:
    """Conditional loss of a uniform interval of length ``delta`` with the safe report."""
    return pi_r**2 - pi_r * delta + delta**2 / 3.0


# ---------------------------------------------------------------------------
# Strategy evaluation
# ---------------------------------------------------------------------------


def evaluate_strategy(
    d: Distribution,
    cutoffs,
    pi_r: float,
    reports=None,
    method: str = "strategy",
    tail_mass: float = 0.0,
    value_function: ValueFunction | None = None,
) -> Partition:
    """Score an interval strategy: best-response (or given) reports, acceptance
    probabilities, conditional clipped losses and the probability-weighted total.

    A first interval lying at or below ``-pi_r`` (or ending within
    ``HEAD_MERGE_TOL`` of it) is flagged as the zero-acceptance head.
    """
    if not pi_r > 0:
        raise ValidationError(f"pi_r must be positive, got {pi_r}", code="pi_r")
    cuts = [float(c) for c in cutoffs]
    if len(cuts) < 2 or any(not hi > lo for lo, hi in zip(cuts[:-1], cuts[1:])):
        raise ValidationError("cutoffs must be strictly increasing with at least two entries", code="cutoffs")
    if reports is not None and len(reports) != len(cuts) - 1:
        raise ValidationError("need one report per interval", code="reports")
    s_lo, s_hi = d.support
    if cuts[0] < s_lo or cuts[-1] > s_hi:
        raise ValidationError("cutoffs leave the support", code="cutoffs")
    rs, losses, masses, accs = [], [], [], []
    for i, (a, b) in enumerate(zip(cuts[:-1], cuts[1:])):
        if reports is None:
            r = solve_report(d, a, b, pi_r).r_star
        else:
            r = float(reports[i])
        m = float(d.mass(a, b))
        if m > 0:
            acc = float(d.mass(max(a, r - pi_r), min(b, r + pi_r)) / m) if r + pi_r > a and r - pi_r < b else 0.0
            loss = expected_auditor_loss(d, a, b, pi_r, r)
        else:
            acc, loss = 0.0, pi_r**2
        rs.append(r)
        masses.append(m)
        accs.append(min(acc, 1.0))
        losses.append(loss)
    head = cuts[1] <= -pi_r + HEAD_MERGE_TOL
    total = float(sum(m * l for m, l in zip(masses, losses)))
    return Partition(
        cutoffs=tuple(cuts),
        reports=tuple(rs),
        losses=tuple(losses),
        masses=tuple(masses),
        acceptance=tuple(accs),
        zero_acceptance_head=head,
        total_loss=total,
        pi_r=pi_r,
        method=method,
        tail_mass=tail_mass,
        value_function=value_function,
    )


# ---------------------------------------------------------------------------
# Uniform closed form
# ---------------------------------------------------------------------------


def solve_uniform_closed_form(lower: float, upper: float, pi_r: float) -> Partition:
    """Equal-length partition with the interval count closest to 1.5 pi_r;
    ties go to the larger count."""
    if not pi_r > 0:
        raise ValidationError(f"pi_r must be positive, got {pi_r}", code="pi_r")
    d = Uniform(lower, upper)
    width = upper - lower
    if lower < pi_r or not width > 2 * pi_r:
        raise SolverError(
            f"closed form needs lower >= pi_r and width > 2 pi_r (lower={lower}, width={width}, pi_r={pi_r})",
            code="uniform-closed-form-inapplicable",
        )
    n_min = math.ceil(width / (2 * pi_r) - 1e-12)
    ideal = ideal_uniform_length(pi_r)
    guesses = {n_min, max(n_min, math.floor(width / ideal)), max(n_min, math.ceil(width / ideal))}
    best_n, best_gap = None, math.inf
    for n in sorted(guesses):
        gap = abs(width / n - ideal)
        if gap < best_gap - 1e-12 or (abs(gap - best_gap) <= 1e-12 and n > best_n):
            best_n, best_gap = n, gap
    delta = width / best_n
    cuts = [lower + i * delta for i in range(best_n)] + [upper]
    reports = [c + pi_r for c in cuts[:-1]]
    return evaluate_strategy(d, cuts, pi_r, reports=reports, method="closed-form")


# ---------------------------------------------------------------------------
# Dynamic programming
# ---------------------------------------------------------------------------


class _Bellman:
    """Precomputed data for one (distribution, pi_r, grid) triple."""

    def __init__(self, d: Distribution, pi_r: float, grid_size: int, tail_mass: float):
        self.d, self.pi_r, self.tail_mass = d, pi_r, tail_mass
        lo_eff, hi_eff = d.effective_support(tail_mass)
        self.lo_eff, self.hi_eff = lo_eff, hi_eff
        self.head = lo_eff < -pi_r
        self.x0 = -pi_r if self.head else lo_eff
        if not hi_eff > self.x0:
            raise ValidationError("support carries no acceptable types", code="support")
        self.grid = np.linspace(self.x0, hi_eff, grid_size + 1)
        self.h = (hi_eff - self.x0) / grid_size
        g = self.grid
        # cumulative partial moments from lo_eff, shifted for conditioning
        self.shift = 0.5 * (self.x0 + hi_eff)
        self.S = self._partials(g)
        self.Fe = self.S[0]
        self.fe_x0 = float(self.Fe[0])
        self.a_lo = np.maximum(gamma_vec(d, g, pi_r), self.x0)
        self.a_lo[0] = self.x0
        # candidate grid indices j in [jmin_k, k - 1]
        k = np.arange(g.size)
        self.jmin = np.minimum(np.ceil((self.a_lo - self.x0) / self.h - 1e-9).astype(int), k)
        band = int(max(1, np.max(k - self.jmin)))
        offs = np.arange(band)
        self.J_idx = k[:, None] - 1 - offs[None, :]
        self.valid = self.J_idx >= self.jmin[:, None]
        self.J_idx = np.where(self.valid, self.J_idx, 0)
        c = g[self.J_idx] + pi_r - self.shift
        S0, S1, S2 = self.S
        dS0 = S0[:, None] - S0[self.J_idx]
        dS1 = S1[:, None] - S1[self.J_idx]
        dS2 = S2[:, None] - S2[self.J_idx]
        J = np.maximum(c * c * dS0 - 2 * c * dS1 + dS2, 0.0)
        self.J = np.where(self.valid, J, np.inf)
        self.Fe_a = S0[self.J_idx]

    def _partials(self, x):
        m, mu, var = self.d.interval_moments(self.lo_eff, np.asarray(x, dtype=float))
        m = np.asarray(m, dtype=float)
        mu = np.nan_to_num(np.asarray(mu, dtype=float) - self.shift)
        var = np.nan_to_num(np.asarray(var, dtype=float))
        return np.stack([m, m * mu, m * (var + mu * mu)])

    def J_exact(self, a, b):
        return np.asarray(self.d.interval_sq_loss(a, b, np.asarray(a) + self.pi_r), dtype=float)

    def interp(self, L, a):
        return np.interp(a, self.grid, L)

    def fe(self, x):
        return np.asarray(self.d.mass(self.lo_eff, x), dtype=float)

    def initial(self) -> np.ndarray:
        a = self.a_lo
        g = self.grid
        Fe_b = np.maximum(self.Fe, 1e-300)
        L0 = (self.J_exact(a, g) + self.fe(a) * self.pi_r**2) / Fe_b
        L0[0] = self.pi_r**2
        return L0

    def inner(self, L, b, a_lo, J=None, J_idx=None, valid=None, Fe_b=None, refine=True):
        """Minimise over a in [a_lo, b - h] (or a = a_lo when that is above
        b - h) for each b; returns (value, argmin, ties)."""
        pi2 = self.pi_r**2
        if Fe_b is None:
            Fe_b = self.fe(b)
        # grid candidates
        W_a = self.Fe_a_for(J_idx) * L[J_idx]
        with np.errstate(invalid="ignore"):
            V = np.where(valid, (J + W_a), np.inf)
        # largest a on ties: offsets run from a = b - h downward, argmin takes the first
        m_best = np.argmin(V, axis=1)
        rows = np.arange(V.shape[0])
        v_grid = V[rows, m_best]
        with np.errstate(invalid="ignore"):
            close = np.abs(V - v_grid[:, None]) <= 1e-12 * np.maximum(np.abs(v_grid[:, None]), 1e-300)
        ties = np.sum(close, axis=1) > 1
        j_best = J_idx[rows, m_best]
        a_grid = self.grid[j_best]
        # exact constraint point
        v_edge = self.J_exact(a_lo, b) + self.fe(a_lo) * self.interp(L, a_lo)
        use_edge = (v_edge < v_grid) | ~np.isfinite(v_grid)
        a_best = np.where(use_edge, a_lo, a_grid)
        v_best = np.where(use_edge, v_edge, v_grid)
        if not refine:
            with np.errstate(divide="ignore", invalid="ignore"):
                val = np.where(Fe_b > 0, v_best / Fe_b, pi2)
            return val, a_best, ties & ~use_edge
        # golden refinement on the neighbouring grid bracket; a within one cell
        # of b would be an (almost) empty message that only echoes W(b)
        br_lo = np.maximum(a_best - self.h, a_lo)
        br_hi = np.minimum(a_best + self.h, b - self.h)
        br_hi = np.maximum(br_hi, br_lo)

        def obj(a):
            return self.J_exact(a, b) + self.fe(a) * self.interp(L, a)

        a_ref, v_ref = golden_min(obj, br_lo, br_hi, tol=GOLDEN_TOL)
        better = v_ref < v_best * (1 - 1e-14) - 1e-300
        a_best = np.where(better, a_ref, a_best)
        v_best = np.where(better, v_ref, v_best)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(Fe_b > 0, v_best / Fe_b, pi2)
        return val, a_best, ties & ~better & ~use_edge

    def Fe_a_for(self, J_idx):
        return self.Fe[J_idx]

    def step(self, L, refine=True):
        val, pol, ties = self.inner(
            L, self.grid, self.a_lo, J=self.J, J_idx=self.J_idx, valid=self.valid, Fe_b=self.Fe, refine=refine
        )
        val[0] = self.pi_r**2
        pol[0] = self.x0
        return val, pol, ties

    def candidates_for(self, b: float):
        """Grid candidate arrays for a single off-grid b."""
        a_lo = max(float(gamma(self.d, b, self.pi_r)), self.x0)
        j_lo = int(math.ceil((a_lo - self.x0) / self.h - 1e-9))
        j_hi = int(math.ceil((b - self.x0) / self.h - 1e-9)) - 1
        idx = np.arange(j_hi, j_lo - 1, -1) if j_hi >= j_lo else np.zeros(1, dtype=int)
        valid = (idx >= j_lo) & (self.grid[idx] <= b - self.h * (1 - 1e-9))
        Sb = self._partials(np.array([b]))
        c = self.grid[idx] + self.pi_r - self.shift
        S0, S1, S2 = self.S
        J = c * c * (Sb[0] - S0[idx]) - 2 * c * (Sb[1] - S1[idx]) + (Sb[2] - S2[idx])
        J = np.where(valid, np.maximum(J, 0.0), np.inf)
        return a_lo, J[None, :], idx[None, :], valid[None, :], Sb[0]

    def policy_at(self, L, b: float) -> float:
        a_lo, J, idx, valid, Fe_b = self.candidates_for(b)
        _, a, _ = self.inner(L, np.array([b]), np.array([a_lo]), J=J, J_idx=idx, valid=valid, Fe_b=Fe_b)
        return float(a[0])


def _value_function(op: _Bellman, L, policy, residuals=(), iterations=0, ties=0, beta=None) -> ValueFunction:
    return ValueFunction(
        grid=op.grid,
        values=L,
        policy=policy,
        contraction_estimate=_contraction_estimate(residuals) if beta is None else beta,
        residuals=tuple(residuals),
        iterations=iterations,
        ties=ties,
        tail_mass=op.tail_mass,
    )


_NOISE_FLOOR = 1e-13


def _contraction_estimate(residuals) -> float:
    r = [x for x in residuals if x > _NOISE_FLOOR]
    ratios = [b / a for a, b in zip(r[:-1], r[1:])]
    return max(ratios) if ratios else 0.0


_OPS: dict = {}


def _operator(d: Distribution, pi_r: float, grid_size: int, tail_mass: float) -> _Bellman:
    key = (d, float(pi_r), int(grid_size), float(tail_mass))
    op = _OPS.get(key)
    if op is None:
        if len(_OPS) > 8:
            _OPS.clear()
        op = _OPS[key] = _Bellman(d, pi_r, grid_size, tail_mass)
    return op


def bellman_step(L: ValueFunction, d: Distribution, pi_r: float) -> tuple[ValueFunction, float]:
    """Apply the Bellman operator once; returns the new value function and the
    sup-norm change."""
    op = _operator(d, pi_r, len(L.grid) - 1, L.tail_mass)
    if not np.allclose(op.grid, L.grid, rtol=0, atol=1e-12):
        raise ValidationError("value function grid does not match the distribution", code="grid")
    vals, pol, ties = op.step(np.asarray(L.values, dtype=float))
    change = float(np.max(np.abs(vals - L.values)))
    return _value_function(op, vals, pol, ties=int(ties.sum())), change


def initial_value_function(d: Distribution, pi_r: float, grid_size: int, tail_mass: float = DEFAULT_TAIL_MASS) -> ValueFunction:
    op = _operator(d, pi_r, grid_size, tail_mass)
    return _value_function(op, op.initial(), op.a_lo.copy())


def _value_iteration(op: _Bellman, max_iter: int = MAX_ITER):
    """Grid-only sweeps to convergence, then sweeps with off-grid refinement
    started from there. Both phases apply a contraction, so the observed ratio
    is the worst consecutive-residual ratio within either phase."""
    L = op.initial()
    policy = op.a_lo.copy()
    residuals = []
    betas = []
    it = 0
    for refine in (False, True):
        phase = []
        stable = 0
        while it < max_iter:
            it += 1
            new_L, new_pol, ties = op.step(L, refine=refine)
            res = float(np.max(np.abs(new_L - L)))
            phase.append(res)
            same = np.array_equal(new_pol, policy)
            stable = stable + 1 if same else 0
            L, policy = new_L, new_pol
            if res <= VALUE_TOL and stable >= POLICY_STABLE_ITERS:
                break
        residuals.extend(phase)
        betas.append(_contraction_estimate(phase))
        if it >= max_iter and not (phase and phase[-1] <= VALUE_TOL and stable >= POLICY_STABLE_ITERS):
            break
    else:
        return _value_function(op, L, policy, residuals, it, int(ties.sum()), beta=max(betas))
    raise SolverError(
        f"value iteration did not converge in {max_iter} iterations (residual {residuals[-1]:.3g})",
        code="dp-no-convergence",
        residuals=residuals[-10:],
        iterations=max_iter,
    )


def _extract(op: _Bellman, vf: ValueFunction) -> list[float]:
    cuts = [op.hi_eff]
    b = op.hi_eff
    a = float(vf.policy[-1])
    limit = 10 * len(op.grid) + 200
    while True:
        if a <= op.x0 + 1e-12 * max(1.0, abs(op.x0)):
            cuts.append(op.x0)
            break
        if op.head and a - op.x0 <= HEAD_MERGE_TOL:
            # the rest of the chain carries no mass: close it at -pi_r
            cuts.append(op.x0)
            break
        cuts.append(a)
        b = a
        a = op.policy_at(vf.values, b)
        if not a < b or len(cuts) > limit:
            raise SolverError("cutoff extraction failed to make progress", code="dp-extraction", b=b)
    if op.head:
        cuts.append(op.lo_eff)
    return cuts[::-1]


def _message_cost(d: Distribution, cuts, pi_r: float, first: int) -> float:
    return float(sum(d.interval_sq_loss(a, b, a + pi_r) for a, b in zip(cuts[first:-1], cuts[first + 1:])))


def _feasible(d: Distribution, cuts, pi_r: float, first: int) -> bool:
    return all(gamma(d, b, pi_r) <= a + 1e-12 * max(1.0, abs(a)) for a, b in zip(cuts[first:-1], cuts[first + 1:]))


def _polish(d: Distribution, cuts: list[float], pi_r: float, first: int, sweeps: int = 20) -> list[float]:
    """Coordinate descent on the interior cutoffs above index ``first``,
    keeping every message feasible; only improving moves are kept."""
    cuts = list(cuts)

    def J(a, b):
        return float(d.interval_sq_loss(a, b, a + pi_r))

    for _ in range(sweeps):
        gain = 0.0
        for i in range(first + 1, len(cuts) - 1):
            lo_nb, hi_nb = cuts[i - 1], cuts[i + 1]
            lo = max(lo_nb, gamma(d, hi_nb, pi_r))
            hi = min(hi_nb, gamma_inverse(d, lo_nb, pi_r))
            if not hi > lo:
                continue
            cur = J(lo_nb, cuts[i]) + J(cuts[i], hi_nb)

            def obj(x):
                return np.array([J(lo_nb, xi) + J(xi, hi_nb) if lo_nb < xi < hi_nb else np.inf for xi in x])

            x, v = golden_min(obj, [lo], [hi], tol=1e-11)
            if v[0] < cur - 1e-15:
                gain += cur - v[0]
                cuts[i] = float(x[0])
        if gain <= 1e-14:
            break
    return cuts


def _drop_cutoff(d: Distribution, cuts: list[float], i: int, pi_r: float, first: int):
    """Remove ``cuts[i]`` and pull the cutoffs above it down until every
    message is feasible again; None when the top message cannot be repaired."""
    new = cuts[:i] + cuts[i + 1:]
    for j in range(i, len(new) - 1):
        cap = gamma_inverse(d, new[j - 1], pi_r)
        if new[j] <= cap:
            break
        new[j] = cap
    if any(not b > a for a, b in zip(new[:-1], new[1:])) or not _feasible(d, new, pi_r, first):
        return None
    return new


def _refine_cutoffs(d: Distribution, cuts: list[float], pi_r: float, first: int, sliver: float) -> list[float]:
    """Polish, then try merging messages shorter than ``sliver``:
    interpolation of the value function can leave one next to a kink of the
    exact value function."""
    cuts = _polish(d, cuts, pi_r, first)
    best = _message_cost(d, cuts, pi_r, first)
    improved = True
    while improved and len(cuts) - first > 2:
        improved = False
        for i in range(first + 1, len(cuts) - 1):
            if min(cuts[i] - cuts[i - 1], cuts[i + 1] - cuts[i]) > sliver:
                continue
            cand = _drop_cutoff(d, cuts, i, pi_r, first)
            if cand is None:
                continue
            cand = _polish(d, cand, pi_r, first)
            cost = _message_cost(d, cand, pi_r, first)
            # fewer messages win exact ties (zero-mass slivers in the tails)
            if cost <= best + 1e-14 * max(1.0, best):
                cuts, best, improved = cand, min(cost, best), True
                break
    return cuts


def solve_partition_dp(
    d: Distribution,
    pi_r: float,
    grid_size: int = 4096,
    tail_mass: float = DEFAULT_TAIL_MASS,
    polish: bool = True,
    max_iter: int = MAX_ITER,
) -> Partition:
    """Optimal vague partition by value iteration on a uniform grid of
    ``grid_size`` cells over the effective support."""
    if not pi_r > 0:
        raise ValidationError(f"pi_r must be positive, got {pi_r}", code="pi_r")
    if int(grid_size) < MIN_GRID:
        raise ValidationError(f"grid_size must be at least {MIN_GRID}, got {grid_size}", code="grid")
    lo_eff, hi_eff = d.effective_support(tail_mass)
    tail = tail_mass if (not math.isfinite(d.support[0]) or not math.isfinite(d.support[1])) else 0.0
    if hi_eff <= -pi_r:
        return evaluate_strategy(d, [lo_eff, hi_eff], pi_r, method="dp", tail_mass=tail)
    op = _operator(d, pi_r, int(grid_size), tail_mass)
    vf = _value_iteration(op, max_iter)
    cuts = _extract(op, vf)
    if polish:
        first = 1 if op.head else 0
        # leave the forced chain of shrinking messages just above -pi_r alone
        if op.head:
            while first + 2 < len(cuts) and cuts[first + 1] - op.x0 < op.h:
                first += 1
        cuts = _refine_cutoffs(d, cuts, pi_r, first, sliver=2 * op.h)
    return evaluate_strategy(d, cuts, pi_r, method="dp", tail_mass=tail, value_function=vf)


def solve_partition(d: Distribution, pi_r: float, method: str = "auto", grid_size: int = 4096,
                    tail_mass: float = DEFAULT_TAIL_MASS) -> Partition:
    """Closed form when it applies (uniform prior with lower end >= pi_r),
    dynamic programming otherwise."""
    if method not in ("auto", "dp", "closed-form"):
        raise ValidationError(f"unknown method {method!r}", code="method")
    if method == "closed-form" or (
        method == "auto" and d.family is Family.UNIFORM and d.support[0] >= pi_r and d.support[1] - d.support[0] > 2 * pi_r
    ):
        if d.family is not Family.UNIFORM:
            raise SolverError("closed form applies to uniform priors only", code="uniform-closed-form-inapplicable")
        return solve_uniform_closed_form(d.support[0], d.support[1], pi_r)
    return solve_partition_dp(d, pi_r, grid_size, tail_mass)
