import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from gatekeeping.distributions import Logistic, Normal, Uniform
from gatekeeping.errors import ValidationError
from gatekeeping.precise_silence import (
    constraint_violation,
    is_equilibrium_silence,
    no_communication_outcome,
    silence_loss,
    solve_silence_set,
)
from gatekeeping.reporting import solve_report
from gatekeeping.vague_partition import solve_partition


def _quad_loss(d, a, b, r0, pi_r):
    """Expected loss by quadrature: clipped loss inside the silence set,
    pi_r^2 for revealed types."""
    def inside(x):
        return min((r0 - x) ** 2, pi_r**2) * d.pdf(x)

    lo, hi = max(a, d.effective_support(1e-14)[0]), min(b, d.effective_support(1e-14)[1])
    pts = [p for p in (r0 - pi_r, r0 + pi_r) if lo < p < hi]
    val = integrate.quad(inside, lo, hi, points=pts or None, epsabs=1e-13, epsrel=1e-12, limit=400)[0]
    return val + (1 - d.mass(a, b)) * pi_r**2


def test_uniform_no_communication():
    out = no_communication_outcome(Uniform(1, 9), 1.0)
    assert out.r0 == 8.0
    assert out.expected_loss == pytest.approx(5 / 6, abs=1e-12)


def test_uniform_optimum_is_full_support():
    out = solve_silence_set(Uniform(1, 9), 1.0)
    assert (out.nd_lo, out.nd_hi) == (1.0, 9.0)
    assert out.expected_loss == pytest.approx(5 / 6, abs=1e-9)


def test_normal_no_communication():
    d = Normal(1, 1)
    out = no_communication_outcome(d, 1.0)
    assert out.r0 == pytest.approx(1.78, abs=0.01)
    assert out.expected_loss == pytest.approx(0.62, abs=0.01)
    assert out.expected_loss == pytest.approx(_quad_loss(d, -math.inf, math.inf, out.r0, 1.0), abs=1e-9)


@pytest.fixture(scope="module")
def normal_optimum():
    return solve_silence_set(Normal(1, 1), 1.0)


def test_normal_optimum_location(normal_optimum):
    out = normal_optimum
    assert out.nd_hi == pytest.approx(2.61, abs=0.01)
    assert out.r0 == pytest.approx(1.61, abs=0.01)
    assert out.constraint_binding
    assert out.r0 + 1.0 == pytest.approx(out.nd_hi, abs=1e-6)


def test_normal_optimum_loss_by_quadrature(normal_optimum):
    out, d = normal_optimum, Normal(1, 1)
    assert out.expected_loss == pytest.approx(_quad_loss(d, out.nd_lo, out.nd_hi, out.r0, 1.0), abs=1e-8)
    assert out.expected_loss < no_communication_outcome(d, 1.0).expected_loss


def test_outcome_invariants(normal_optimum):
    d = Normal(1, 1)
    out = normal_optimum
    assert constraint_violation(out, d, 1.0) <= 1e-8
    assert out.r0 == solve_report(d, out.nd_lo, out.nd_hi, 1.0).r_star
    # vague language weakly dominates
    assert solve_partition(d, 1.0, grid_size=512).total_loss <= out.expected_loss
    assert solve_partition(Uniform(1, 9), 1.0).total_loss <= 5 / 6


def test_loss_never_exceeds_outside_option():
    for d in (Normal(0, 2), Logistic(1, 0.5), Uniform(-2, 5)):
        out = no_communication_outcome(d, 1.0)
        assert out.expected_loss <= 1.0 + 1e-12


def test_equilibrium_check():
    d = Uniform(1, 9)
    assert is_equilibrium_silence(d, 1, 9, 8, 1.0)
    # silence on [1, 5] with r0 = 4.5 reveals X = 5.2, which sits within pi_r of r0
    assert not is_equilibrium_silence(d, 1, 5, 4.5, 1.0)


def test_support_too_short():
    with pytest.raises(ValidationError):
        no_communication_outcome(Uniform(0, 1.5), 1.0)


@settings(max_examples=50)
@given(lo=st.floats(-2, 3), w=st.floats(2.2, 10), pi_r=st.floats(0.3, 1.0),
       s1=st.floats(0, 1), s2=st.floats(0, 1))
def test_uniform_indifference(lo, w, pi_r, s1, s2):
    d = Uniform(lo, lo + w)
    ref = no_communication_outcome(d, pi_r).expected_loss
    # any equilibrium silence interval at least 2 pi_r long costs the same
    length = 2 * pi_r + s1 * (w - 2 * pi_r)
    a = lo + s2 * (w - length)
    b = a + length
    loss, r0 = silence_loss(d, a, b, pi_r)
    if is_equilibrium_silence(d, a, b, r0, pi_r):
        assert loss == pytest.approx(ref, abs=1e-6)
