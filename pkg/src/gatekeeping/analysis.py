"""Information content of partitions and comparative-statics sweeps."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import Distribution, Family, Normal
from .errors import GatekeepingError, ValidationError
from .vague_partition import Partition, solve_partition

DEFAULT_DP_GRID = 1024
CSV_HEADER = ("param", "n_intervals", "info", "loss", "cutoffs")


@dataclass(frozen=True)
class SweepRow:
    parameter_name: str
    parameter_value: float
    n_intervals: int | None
    info_amount: float | None
    total_loss: float | None
    cutoffs: tuple[float, ...] = ()
    method: str = ""
    error: str | None = field(default=None)

    def csv_fields(self) -> list[str]:
        def num(v):
            return "" if v is None else repr(float(v))

        return [
            repr(float(self.parameter_value)),
            "" if self.n_intervals is None else str(self.n_intervals),
            num(self.info_amount),
            num(self.total_loss),
            ";".join(repr(float(c)) for c in self.cutoffs),
        ]


def info_amount(p: Partition, d: Distribution) -> float:
    """Share of the prior variance over the partition's span removed by
    learning the message."""
    lo, hi = p.cutoffs[0], p.cutoffs[-1]
    m_all, _, v_all = d.interval_moments(lo, hi)
    if not v_all > 0:
        raise ValidationError("partition span has zero variance", code="partition")
    cuts = np.asarray(p.cutoffs)
    m, _, v = d.interval_moments(cuts[:-1], cuts[1:])
    m = np.atleast_1d(np.asarray(m, dtype=float))
    v = np.nan_to_num(np.atleast_1d(np.asarray(v, dtype=float)))
    within = float(np.sum(m * v)) / float(m_all)
    return float(np.clip(1.0 - within / float(v_all), 0.0, 1.0))


def _row(name: str, value: float, d: Distribution, pi_r: float, method: str, grid_size: int) -> SweepRow:
    try:
        p = solve_partition(d, pi_r, method=method, grid_size=grid_size)
        return SweepRow(name, value, p.n_intervals, info_amount(p, d), p.total_loss, p.cutoffs, p.method)
    except GatekeepingError as exc:
        return SweepRow(name, value, None, None, None, (), method, error=f"{exc.code}: {exc}")


def sweep_independence(d: Distribution, pi_r_grid, method: str = "auto", grid_size: int = DEFAULT_DP_GRID) -> list[SweepRow]:
    """One row per pi_r, in grid order."""
    vals = [float(x) for x in pi_r_grid]
    if any(not x > 0 for x in vals):
        raise ValidationError("pi_r grid values must be positive", code="grid")
    return [_row("pi_r", x, d, x, method, grid_size) for x in vals]


def sweep_complexity(mu: float, sigma0: float, theta_grid, pi_r: float, grid_size: int = DEFAULT_DP_GRID) -> list[SweepRow]:
    """One row per theta, with X ~ Normal(mu, sigma0^2 (1 + theta))."""
    if not sigma0 > 0:
        raise ValidationError(f"sigma0 must be positive, got {sigma0}", code="sigma0")
    if not pi_r > 0:
        raise ValidationError(f"pi_r must be positive, got {pi_r}", code="pi_r")
    vals = [float(x) for x in theta_grid]
    if any(not x >= 0 for x in vals):
        raise ValidationError("theta grid values must be nonnegative", code="grid")
    rows = []
    for theta in vals:
        d = Normal(mu, sigma0 * math.sqrt(1.0 + theta))
        rows.append(_row("theta", theta, d, pi_r, "dp", grid_size))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def default_pi_grid(lo: float = 0.05, hi: float = 1.95, n: int = 64) -> list[float]:
    return list(np.linspace(lo, hi, n))
