"""Step-size schedules, weighting sequence, and iterate sampling."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from brsgd.errors import ConstraintError
from brsgd.schedules import (
    Schedule,
    alpha,
    sample_iterate_index,
    validate_schedule,
    weighting_sequence,
)

import oracles


# ---------------------------------------------------------------------------
# alpha
# ---------------------------------------------------------------------------


def test_power_law_value():
    # c (k+1)^{-p} at c=1, p=0.5, k=3 is exactly 0.5
    sched = Schedule(form="power-law", c=1.0, p=0.5)
    assert alpha(sched, 3) == 0.5


def test_alpha_minus_one_equals_alpha_zero():
    for sched in (
        Schedule(form="power-law", c=0.7, p=0.6),
        Schedule(form="constant", c=0.3),
        Schedule(form="custom", values=(0.5, 0.25, 0.125)),
    ):
        assert alpha(sched, -1) == alpha(sched, 0)


def test_constant_schedule():
    sched = Schedule(form="constant", c=0.25)
    assert [alpha(sched, k) for k in range(4)] == [0.25] * 4


def test_custom_table_and_horizon():
    sched = Schedule(form="custom", values=(0.5, 0.4, 0.3))
    assert alpha(sched, 2) == 0.3
    with pytest.raises(ConstraintError):
        alpha(sched, 3)


def test_alpha_below_minus_one_rejected():
    with pytest.raises(ConstraintError):
        alpha(Schedule(form="constant", c=1.0), -2)


def test_schedule_construction_rejects_bad_params():
    with pytest.raises(Exception):
        Schedule(form="power-law", c=-1.0, p=0.6)
    with pytest.raises(Exception):
        Schedule(form="nope", c=1.0)
    with pytest.raises(Exception):
        Schedule(form="custom", values=())
    with pytest.raises(Exception):
        Schedule(form="custom", values=(0.5, -0.1))


# ---------------------------------------------------------------------------
# validate_schedule
# ---------------------------------------------------------------------------


def test_validate_corollary_style_schedule_passes():
    l_smooth, b_prime, sin_a = 2.0, 1.0, 0.0
    c = (1.0 - sin_a) / (l_smooth * b_prime)
    report = validate_schedule(
        Schedule(form="power-law", c=c, p=0.6), l_smooth, b_prime, sin_a
    )
    assert report.non_increasing
    assert report.alpha0_ok
    assert report.square_summable is True
    assert report.step_over_k_vanishes is True
    assert report.ok


def test_validate_p_equal_one_fails_vanishing_condition():
    # k * alpha_{k-1} = c stays bounded, so 1/(k alpha_{k-1}) does not vanish
    report = validate_schedule(Schedule(form="power-law", c=0.1, p=1.0), 1.0, 1.0, 0.0)
    assert report.step_over_k_vanishes is False
    assert not report.ok


def test_validate_boundary_p_half_warns():
    report = validate_schedule(Schedule(form="power-law", c=0.1, p=0.5), 1.0, 1.0, 0.0)
    assert report.square_summable is False
    assert any("1/2" in w or "boundary" in w for w in report.warnings)


def test_validate_alpha0_cap():
    # alpha_0 must not exceed (1 - sin a)/(L B')
    report = validate_schedule(Schedule(form="constant", c=0.6), 2.0, 1.0, 0.0)
    assert not report.alpha0_ok
    ok = validate_schedule(Schedule(form="constant", c=0.5), 2.0, 1.0, 0.0)
    assert ok.alpha0_ok


def test_validate_constant_not_square_summable():
    report = validate_schedule(Schedule(form="constant", c=0.1), 1.0, 1.0, 0.0)
    assert report.square_summable is False
    assert report.step_over_k_vanishes is True


def test_validate_custom_table_warns_about_tail():
    report = validate_schedule(
        Schedule(form="custom", values=(0.5, 0.4, 0.3)), 1.0, 1.0, 0.0
    )
    assert report.non_increasing
    assert report.square_summable is None
    assert any("tail" in w for w in report.warnings)


def test_validate_rejects_bad_constants():
    with pytest.raises(ConstraintError):
        validate_schedule(Schedule(form="constant", c=0.1), -1.0, 1.0, 0.0)
    with pytest.raises(ConstraintError):
        validate_schedule(Schedule(form="constant", c=0.1), 1.0, 1.0, 1.5)


# ---------------------------------------------------------------------------
# weighting_sequence
# ---------------------------------------------------------------------------


def test_weighting_frozen_constant_case():
    # constant alpha with L A' alpha^2 = 0.1: W_0 = 1/1.1, W_1 = 1/1.21
    sched = Schedule(form="constant", c=1.0)
    ws = weighting_sequence(sched, l_smooth=0.1, a_prime=1.0, iterations=2)
    assert ws.value(-1) == 1.0
    assert_allclose(ws.value(0), 1.0 / 1.1, rtol=1e-12)
    assert_allclose(ws.value(1), 1.0 / 1.21, rtol=1e-12)


@pytest.mark.parametrize(
    "sched,l_smooth,a_prime",
    [
        (Schedule(form="power-law", c=0.5, p=0.6), 2.0, 3.0),
        (Schedule(form="power-law", c=1.0, p=0.75), 0.3, 0.0),
        (Schedule(form="constant", c=0.2), 5.0, 1.0),
        (Schedule(form="custom", values=(0.9, 0.5, 0.5, 0.1)), 1.7, 0.4),
    ],
)
def test_weighting_matches_direct_recurrence_and_closed_form(sched, l_smooth, a_prime):
    horizon = 4 if sched.form == "custom" else 30
    ws = weighting_sequence(sched, l_smooth, a_prime, horizon)
    alphas = [alpha(sched, k) for k in range(horizon)]
    direct = oracles.weighting_direct(alphas, l_smooth, a_prime)
    for k in range(-1, horizon):
        assert_allclose(ws.value(k), direct[k + 1], rtol=1e-10)
        if k >= 0:
            closed = oracles.weighting_closed(alphas, l_smooth, a_prime, k)
            assert_allclose(ws.value(k), closed, rtol=1e-10)


@given(
    p=st.floats(min_value=0.0, max_value=1.5),
    c=st.floats(min_value=1e-3, max_value=10.0),
    la=st.floats(min_value=0.0, max_value=10.0),
    horizon=st.integers(min_value=1, max_value=60),
)
@settings(max_examples=150, deadline=None)
def test_weighting_positive_nonincreasing_and_averaging_bound(p, c, la, horizon):
    sched = Schedule(form="power-law", c=c, p=p)
    ws = weighting_sequence(sched, l_smooth=la, a_prime=1.0, iterations=horizon)
    vals = ws.values
    assert np.all(vals > 0)
    assert np.all(np.diff(vals) <= 1e-15 * vals[:-1])
    # sum_{k<K} W_k >= K W_{K-1} for every prefix K
    weights = vals[1:]
    sums = np.cumsum(weights)
    ks = np.arange(1, horizon + 1)
    assert np.all(sums >= ks * weights - 1e-12 * sums)


def test_weighting_log_space_survives_underflow():
    # Direct products underflow to 0 here; log values must stay finite/ordered.
    sched = Schedule(form="constant", c=1.0)
    ws = weighting_sequence(sched, l_smooth=10.0, a_prime=10.0, iterations=2000)
    assert np.all(np.isfinite(ws.log_values))
    assert np.all(np.diff(ws.log_values) <= 0)
    assert ws.values[-1] == 0.0  # graceful underflow of the linear-scale view


def test_weighting_rejects_increasing_schedule():
    with pytest.raises(ConstraintError):
        weighting_sequence(
            Schedule(form="custom", values=(0.1, 0.5)), 1.0, 1.0, iterations=2
        )
    with pytest.raises(ConstraintError):
        weighting_sequence(
            Schedule(form="power-law", c=1.0, p=-0.5), 1.0, 1.0, iterations=4
        )


def test_weighting_requires_positive_horizon():
    with pytest.raises(ConstraintError):
        weighting_sequence(Schedule(form="constant", c=1.0), 1.0, 0.0, iterations=0)


# ---------------------------------------------------------------------------
# sample_iterate_index
# ---------------------------------------------------------------------------


def test_sampler_single_iteration_always_zero():
    sched = Schedule(form="constant", c=0.5)
    ws = weighting_sequence(sched, 1.0, 0.0, iterations=1)
    rng = np.random.default_rng(0)
    assert all(sample_iterate_index(ws, 1, rng) == 0 for _ in range(10))


def test_sampler_range_and_determinism():
    sched = Schedule(form="power-law", c=1.0, p=0.6)
    ws = weighting_sequence(sched, 2.0, 1.5, iterations=50)
    draws1 = [sample_iterate_index(ws, 50, np.random.default_rng(7)) for _ in range(1)]
    draws2 = [sample_iterate_index(ws, 50, np.random.default_rng(7)) for _ in range(1)]
    assert draws1 == draws2
    rng = np.random.default_rng(3)
    draws = [sample_iterate_index(ws, 50, rng) for _ in range(500)]
    assert min(draws) >= 0 and max(draws) <= 49


def test_sampler_matches_weight_distribution():
    sched = Schedule(form="power-law", c=1.0, p=0.7)
    horizon = 6
    ws = weighting_sequence(sched, 3.0, 2.0, iterations=horizon)
    weights = ws.values[1:]
    expected = weights / weights.sum()
    rng = np.random.default_rng(11)
    n = 60_000
    counts = np.bincount(
        [sample_iterate_index(ws, horizon, rng) for _ in range(n)], minlength=horizon
    )
    assert_allclose(counts / n, expected, atol=0.01)


def test_sampler_respects_shorter_horizon():
    sched = Schedule(form="constant", c=1.0)
    ws = weighting_sequence(sched, 1.0, 0.0, iterations=10)
    rng = np.random.default_rng(5)
    draws = [sample_iterate_index(ws, 3, rng) for _ in range(200)]
    assert max(draws) <= 2
    with pytest.raises(ConstraintError):
        sample_iterate_index(ws, 11, rng)
    with pytest.raises(ConstraintError):
        sample_iterate_index(ws, 0, rng)
