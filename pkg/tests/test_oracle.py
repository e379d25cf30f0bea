import math

import numpy as np
import pytest
from scipy import integrate

from gatekeeping.distributions import Normal, Uniform
from gatekeeping.errors import SolverError, ValidationError
from gatekeeping.oracle import OracleConfig, oracle_partition, oracle_report, quad_expectation
from gatekeeping.reporting import solve_report
from gatekeeping.vague_partition import evaluate_strategy, solve_partition_dp


def test_config_validation():
    with pytest.raises(ValidationError):
        OracleConfig(partition_grid_points=1)
    with pytest.raises(ValidationError):
        OracleConfig(quadrature_tol=0.0)


def test_report_examples():
    r, pay = oracle_report(Uniform(1, 9), 1, 9, 1.0)
    assert r == pytest.approx(8, abs=1e-4) and pay == pytest.approx(2, abs=1e-4)
    assert oracle_report(Normal(0, 1), -5, -2, 1.0) == (0.0, 0.0)
    r, _ = oracle_report(Normal(1, 1), -math.inf, math.inf, 1.0)
    assert r == pytest.approx(1.78, abs=0.01)


@pytest.mark.parametrize("a,b", [(1, 9), (2, 5), (1, 2), (3.3, 4.1)])
def test_report_never_beats_solver(a, b):
    d = Uniform(1, 9)
    _, pay = oracle_report(d, a, b, 1.0)
    assert pay <= solve_report(d, a, b, 1.0).payoff * (1 + 1e-6)


def test_partition_uniform_examples():
    _, loss = oracle_partition(Uniform(1, 9), 1.0)
    assert loss == pytest.approx(19 / 75, abs=3e-3)
    _, loss = oracle_partition(Uniform(0, 6), 1.0)
    assert loss == pytest.approx(22 / 81, abs=3e-3)


def test_partition_short_support_single_interval():
    cuts, loss = oracle_partition(Uniform(2, 3.4), 1.0, OracleConfig(partition_grid_points=60))
    assert len(cuts) == 2
    assert loss == pytest.approx(1 - 1.4 + 1.4**2 / 3, abs=1e-6)


def test_partition_loss_is_consistent_with_evaluation():
    d = Uniform(0, 6)
    cuts, loss = oracle_partition(d, 1.0, OracleConfig(partition_grid_points=61))
    assert evaluate_strategy(d, cuts, 1.0).total_loss == pytest.approx(loss, abs=1e-7)


def test_brute_force_agrees_with_enumeration():
    """The min-plus recursion equals literal enumeration on a tiny grid."""
    from itertools import combinations

    d, pi_r = Uniform(0, 4), 0.9
    cfg = OracleConfig(partition_grid_points=9, max_intervals=4)
    _, loss = oracle_partition(d, pi_r, cfg)
    xs = np.linspace(0, 4, 9)
    best = math.inf
    for k in range(0, 4):
        for inner in combinations(range(1, 8), k):
            cuts = [xs[0]] + [xs[i] for i in inner] + [xs[-1]]
            reports = [oracle_report(d, a, b, pi_r)[0] for a, b in zip(cuts[:-1], cuts[1:])]
            best = min(best, evaluate_strategy(d, cuts, pi_r, reports=reports).total_loss)
    assert loss == pytest.approx(best, abs=1e-6)


def test_dp_within_slack_of_oracle_on_normal():
    d = Normal(1, 1)
    _, loss = oracle_partition(d, 1.0)
    dp = solve_partition_dp(d, 1.0, 1024)
    assert dp.total_loss <= loss + 1e-3


def test_budget():
    with pytest.raises(SolverError) as err:
        oracle_partition(Uniform(0, 6), 1.0, OracleConfig(partition_grid_points=2000))
    assert err.value.code == "oracle-budget"


def test_quadrature_expectation():
    d = Normal(1, 1)
    assert quad_expectation(d, lambda x: x, 0.0, 2.0) == pytest.approx(1.0, abs=1e-10)
    m, mu, v = d.interval_moments(0.0, 3.0)
    assert quad_expectation(d, lambda x: (x - mu) ** 2, 0.0, 3.0) == pytest.approx(v, rel=1e-9)


def test_dp_never_beaten_beyond_slack():
    rng = np.random.default_rng(3)
    for k in range(4):
        if k % 2:
            d, pi_r = Normal(rng.uniform(0, 3), rng.uniform(0.5, 1.2)), rng.uniform(0.6, 1.4)
        else:
            lo = rng.uniform(-1, 2)
            d, pi_r = Uniform(lo, lo + rng.uniform(3, 6)), rng.uniform(0.7, 1.4)
        _, loss = oracle_partition(d, pi_r, OracleConfig(partition_grid_points=120))
        assert loss >= solve_partition_dp(d, pi_r, 512).total_loss - 3e-3
