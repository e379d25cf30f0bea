import numpy as np
import pytest

from gatekeeping.distributions import Normal, Uniform
from gatekeeping.equilibrium import find_self_signaling_set, onpath_loss, verify_partition_equilibrium
from gatekeeping.vague_partition import evaluate_strategy, solve_partition, solve_uniform_closed_form

U19 = Uniform(1, 9)


def test_optimal_uniform_partition_is_equilibrium():
    p = solve_uniform_closed_form(1, 9, 1)
    rep = verify_partition_equilibrium(p, U19, 1.0)
    assert rep.is_equilibrium and rep.max_gain <= 1e-8
    assert rep.worst_violation is None
    assert rep.checks_performed > 1000


def test_three_interval_strategy_is_equilibrium():
    p = evaluate_strategy(U19, [1, 2, 5, 9], 1.0)
    assert verify_partition_equilibrium(p, U19, 1.0).is_equilibrium


def test_bad_uniform_partition_still_reports():
    d = Uniform(0, 6)
    p = evaluate_strategy(d, [0, 1.5, 3, 4.5, 6], 1.0)
    rep = verify_partition_equilibrium(p, d, 1.0)
    # the first message gambles, so some types are rejected on path
    assert rep.onpath_rejection_mass > 0
    out = rep.to_dict()
    assert set(out) >= {"is_equilibrium", "max_gain", "checks_performed", "onpath_rejection_mass"}


def test_no_communication_has_self_signaling_set():
    p = evaluate_strategy(U19, [1, 9], 1.0)
    res = find_self_signaling_set(p, U19, 1.0)
    assert res.found and res.witness == "D+"
    # every type in the set strictly prefers announcing it
    xs = np.linspace(res.set_lo, res.set_hi, 203)[1:-1]
    from gatekeeping.reporting import solve_report

    r = solve_report(U19, res.set_lo, res.set_hi, 1.0).r_star
    dev = np.where(np.abs(r - xs) <= 1, (r - xs) ** 2, 1.0)
    assert np.all(dev < onpath_loss(p, xs, 1.0))


def test_optimal_partitions_have_none():
    assert not find_self_signaling_set(solve_uniform_closed_form(1, 9, 1), U19, 1.0).found
    d = Uniform(0, 6)
    assert not find_self_signaling_set(solve_partition(d, 1.0, grid_size=1024), d, 1.0).found


def test_midpoint_reports_have_none():
    # |midpoint - X| <= pi_r on intervals no longer than 2 pi_r: nobody rejected
    cuts = [1, 2.5, 4, 6, 7.5, 9]
    mids = [(a + b) / 2 for a, b in zip(cuts[:-1], cuts[1:])]
    p = evaluate_strategy(U19, cuts, 1.0, reports=mids)
    assert not find_self_signaling_set(p, U19, 1.0).found


def test_completeness_pair_on_a_family_of_strategies():
    """Strategies that lose acceptance admit a self-signaling set; optimal
    ones do not."""
    d = Uniform(1, 9)
    for cuts in ([1, 9], [1, 5, 9], [1, 2, 5, 9], [1, 3, 9], [1, 4.5, 9]):
        p = evaluate_strategy(d, cuts, 1.0)
        rejected = sum(m * (1 - a) for m, a in zip(p.masses, p.acceptance))
        assert (rejected > 1e-6) == find_self_signaling_set(p, d, 1.0).found
    n = Normal(1, 1)
    p = evaluate_strategy(n, [n.effective_support()[0], n.effective_support()[1]], 1.0)
    assert find_self_signaling_set(p, n, 1.0).found
