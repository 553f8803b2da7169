import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffpad.schedule import (
    NoiseSchedule,
    default_schedule,
    estimate_x0,
    eta,
    forward_sample,
    gamma,
    gamma_riemann,
    make_linear_schedule,
)


def test_single_step_schedule():
    s = make_linear_schedule(1, 0.5, 0.5)
    np.testing.assert_array_equal(s.betas, [0.5])
    np.testing.assert_array_equal(s.alpha_bars, [0.5])


def test_two_step_hand_product():
    s = make_linear_schedule(2, 0.1, 0.3)
    np.testing.assert_allclose(s.alpha_bars, [0.9, 0.9 * 0.7], rtol=1e-15)


def test_alpha_bar_running_product():
    s = default_schedule()
    prod = 1.0
    for t in range(1, s.T + 1):
        prod *= 1.0 - s.betas[t - 1]
        assert abs(s.alpha_bar(t) - prod) <= 1e-12 * prod


def test_default_schedule_invariants():
    s = default_schedule()
    assert s.T == 1000
    assert np.all((s.betas > 0) & (s.betas < 1))
    assert np.all(np.diff(s.alpha_bars) < 0)
    assert 0 < s.alpha_bars[-1] < s.alpha_bars[0] < 1
    assert s.alpha_bar(0) == 1.0


@pytest.mark.parametrize(
    "args",
    [(0, 1e-4, 0.02), (10, 0.0, 0.02), (10, 0.02, 0.01), (10, 1e-4, 1.0), (10, math.nan, 0.1), (10, 1e-4, math.inf)],
)
def test_linear_schedule_rejects_bad_bounds(args):
    with pytest.raises(ValueError):
        make_linear_schedule(*args)


def test_schedule_is_immutable():
    s = default_schedule()
    with pytest.raises(ValueError):
        s.betas[0] = 0.5


def test_step_range():
    s = make_linear_schedule(5, 0.1, 0.2)
    with pytest.raises(ValueError):
        s.alpha_bar(6)
    with pytest.raises(ValueError):
        forward_sample(np.zeros(2), 0, np.zeros(2), s)


def test_forward_sample_noiseless_limit():
    s = NoiseSchedule([0.0, 0.0])
    x0 = np.array([1.0, -2.0, 3.0])
    np.testing.assert_array_equal(forward_sample(x0, 2, np.ones(3) * 7, s), x0)


def test_forward_sample_examples():
    s = NoiseSchedule([0.75])  # alpha_bar = 0.25
    np.testing.assert_allclose(forward_sample(np.array([8.0]), 1, np.zeros(1), s), [4.0])
    np.testing.assert_allclose(
        forward_sample(np.array([100.0]), 1, np.array([2.0]), s), [50 + 2 * math.sqrt(0.75)], rtol=1e-15
    )
    with pytest.raises(ValueError):
        forward_sample(np.zeros(3), 1, np.zeros(2), s)


def test_estimate_x0_examples():
    s = NoiseSchedule([0.75])
    np.testing.assert_allclose(estimate_x0(np.array([51.73205080756888]), 1, np.array([2.0]), s), [100.0], rtol=1e-14)
    np.testing.assert_allclose(estimate_x0(np.array([3.0]), 1, np.zeros(1), s), [6.0])


@settings(max_examples=200, deadline=None)
@given(
    t=st.integers(1, 1000),
    seed=st.integers(0, 2**32 - 1),
    scale=st.floats(1e-3, 300.0),
)
def test_round_trip(t, seed, scale):
    s = default_schedule()
    r = np.random.default_rng(seed)
    x0 = scale * r.standard_normal((4, 3))
    e = r.standard_normal((4, 3))
    back = estimate_x0(forward_sample(x0, t, e, s), t, e, s)
    assert np.linalg.norm(back - x0) <= 1e-9 * np.linalg.norm(x0)


def test_eta_examples():
    s = NoiseSchedule([0.5])
    assert eta(1, 0.0, s) == 0.0
    assert eta(1, 0.001, s) == pytest.approx(1e-6, rel=1e-12)
    assert eta(1, 1.0, NoiseSchedule([0.1])) == pytest.approx(9.0, rel=1e-12)


def test_eta_rejects_degenerate_schedule():
    with pytest.raises(ValueError):
        eta(1, 0.1, NoiseSchedule([0.0]))


def test_gamma_single_factor():
    assert gamma(make_linear_schedule(1, 0.5, 0.5)) == pytest.approx(-math.log(0.5), rel=1e-15)


def test_gamma_small_beta_limit():
    assert gamma(make_linear_schedule(10, 1e-12, 1e-12)) == pytest.approx(1e-11, rel=1e-6)


def test_gamma_matches_alpha_bar_and_riemann_sum():
    s = default_schedule()
    g = gamma(s)
    assert g == pytest.approx(-math.log(s.alpha_bars[-1]), rel=1e-12)
    # direct summation of beta_t
    direct = sum(float(b) for b in s.betas)
    assert gamma_riemann(s) == pytest.approx(direct, rel=1e-12)
    assert abs(g - direct) / g < 0.02
    assert s.alpha_bars[-1] == pytest.approx(math.exp(-direct), rel=0.02 * direct)


def test_continuous_view_matches_grid():
    s = default_schedule()
    taus = np.arange(1, s.T + 1) / s.T
    np.testing.assert_allclose(s.continuous_alpha_bar(taus), s.alpha_bars, rtol=1e-10)
    # integral of the piecewise-constant rate over the whole span equals gamma
    assert np.sum(s.continuous_beta(taus)) / s.T == pytest.approx(gamma(s), rel=1e-12)
