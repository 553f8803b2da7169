import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffpad.denoisers import GaussianPrior
from diffpad.schedule import NoiseSchedule, default_schedule, gamma, make_linear_schedule
from diffpad.theory import (
    analytic_score_fn,
    c_xi,
    empirical_bound_check,
    forward_terminal,
    kl_monotonicity_series,
    perturb_coordinates,
    purified_distance_bound,
    restoration_error_bound,
    reverse_sde_euler,
)


def test_c_xi_examples():
    for d in (1, 7, 100):
        assert c_xi(d, 1.0) == pytest.approx(math.sqrt(2 * d), rel=1e-15)
    assert c_xi(1, math.exp(-1)) == pytest.approx(math.sqrt(10), rel=1e-14)
    with pytest.raises(ValueError):
        c_xi(4, 0.0)
    with pytest.raises(ValueError):
        c_xi(0, 0.5)


def test_c_xi_high_dimension_against_mpmath():
    mpmath.mp.dps = 50
    d, xi = 196608, mpmath.mpf("0.05")
    L = mpmath.log(1 / xi)
    ref = mpmath.sqrt(2 * d + 4 * mpmath.sqrt(d * L) + 4 * L)
    assert c_xi(d, 0.05) == pytest.approx(float(ref), rel=1e-13)


def test_bound_examples():
    assert purified_distance_bound(0, 5, 0, 3, 4) == 0.0
    g, ce, cx = 0.7, 2.0, 5.0
    assert purified_distance_bound(1.0, 0, g, ce, cx) == pytest.approx(g * ce + math.sqrt(math.expm1(g)) * cx)
    assert purified_distance_bound(1, 10, 1, 2, 3) == pytest.approx(12 + 3 * math.sqrt(math.e - 1), rel=1e-14)
    assert restoration_error_bound(1, 10, 1, 2, 3) == pytest.approx(22 + 3 * math.sqrt(math.e - 1), rel=1e-14)
    assert restoration_error_bound(0.4, 0, g, ce, cx) == purified_distance_bound(0.4, 0, g, ce, cx)
    with pytest.raises(ValueError):
        purified_distance_bound(-1, 1, 1, 1, 1)


nonneg = st.floats(0, 50)


@settings(max_examples=200)
@given(nonneg, st.integers(0, 100), st.floats(0, 10), nonneg, nonneg, nonneg)
def test_bound_growth(eps, area, g, ce, cx, bump):
    base = purified_distance_bound(eps, area, g, ce, cx)
    assert purified_distance_bound(eps + bump, area, g, ce, cx) >= base
    assert purified_distance_bound(eps, area + 1, g, ce, cx) >= base
    assert purified_distance_bound(eps, area, g + bump / 10, ce, cx) >= base
    assert purified_distance_bound(eps, area, g, ce + bump, cx) >= base
    assert restoration_error_bound(eps, area, g, ce, cx) - base == pytest.approx(eps * area, abs=1e-9 * max(1.0, base))


def test_forward_terminal(sched):
    x = np.array([3.0, -2.0, 0.5])
    ab = sched.alpha_bars[-1]
    np.testing.assert_allclose(forward_terminal(x, sched, eps=np.zeros(3)), np.sqrt(ab) * x)
    xs = np.broadcast_to(x, (10_000, 3))
    draws = forward_terminal(xs, sched, rng_seed=0)
    assert np.all(np.abs(draws.mean(axis=0) - np.sqrt(ab) * x) <= 4 / math.sqrt(10_000))
    # near-total noise: terminal draw is essentially standard normal
    assert np.sqrt(ab) < 1e-2
    assert abs(draws.std() - 1) < 0.02


def test_reverse_sde_no_dynamics_is_identity(rng):
    s = NoiseSchedule(np.zeros(50))
    x = rng.standard_normal((7, 3))
    out = reverse_sde_euler(x, lambda v, tau: -v, s, 50, rng_seed=1)
    np.testing.assert_array_equal(out, x)


def test_reverse_sde_standard_normal_moments(sched):
    prior = GaussianPrior.standard(3)
    xT = np.random.default_rng(0).standard_normal((10_000, 3))
    out = reverse_sde_euler(xT, analytic_score_fn(prior, sched), sched, 1000, rng_seed=1)
    assert np.all(np.abs(out.mean(axis=0)) < 0.05)
    assert np.all(np.abs(out.var(axis=0) - 1) < 0.05)


def test_reverse_sde_rejects_bad_input(sched):
    with pytest.raises(ValueError):
        reverse_sde_euler(np.zeros(2), lambda v, t: -v, sched, 0)
    from diffpad.validation import NumericalError

    with pytest.raises(NumericalError):
        reverse_sde_euler(np.ones(2), lambda v, t: np.full_like(v, np.inf), sched, 5)


def test_integrator_first_order_convergence():
    """Halving the step shrinks the change in terminal moments."""
    sched = default_schedule()
    prior = GaussianPrior(np.array([3.0]), np.array([0.25]))
    fn = analytic_score_fn(prior, sched)
    xT = np.random.default_rng(0).standard_normal((200_000, 1))
    means = [reverse_sde_euler(xT, fn, sched, n, rng_seed=n).mean() for n in (10, 20, 40)]
    first, second = abs(means[1] - means[0]), abs(means[2] - means[1])
    assert second < 2 * first


def test_perturb_coordinates(rng):
    x = rng.standard_normal((20, 16))
    out = perturb_coordinates(x, 5, 0.3, rng)
    diff = out - x
    assert np.all(np.count_nonzero(diff, axis=1) == 5)
    np.testing.assert_allclose(np.abs(diff[diff != 0]), 0.3)
    np.testing.assert_array_equal(perturb_coordinates(x, 0, 1.0, rng), x)
    with pytest.raises(ValueError):
        perturb_coordinates(x, 17, 1.0, rng)


def test_empirical_bound_report_is_deterministic():
    sched = default_schedule()
    args = (GaussianPrior.standard(4), 0.5, 2, 4, 0.1, 200, sched)
    a = empirical_bound_check(*args, seed=3, steps=200)
    b = empirical_bound_check(*args, seed=3, steps=200)
    assert a == b
    assert 0 <= a.violation_rate <= 1 and a.bound_value >= 0
    assert a.gamma == pytest.approx(gamma(sched))
    assert a.max_distance >= a.mean_distance


def test_empirical_bound_no_patch():
    sched = default_schedule()
    rep = empirical_bound_check(GaussianPrior.standard(8), 0.0, 0, 8, 0.05, 500, sched, seed=1, steps=300)
    assert rep.violation_rate <= 0.05 + 3 * math.sqrt(0.05 * 0.95 / 500)


def test_empirical_bound_validation(sched):
    p = GaussianPrior.standard(4)
    with pytest.raises(ValueError):
        empirical_bound_check(p, 0.1, 5, 4, 0.1, 200, sched)
    with pytest.raises(ValueError):
        empirical_bound_check(p, 0.1, 1, 4, 0.1, 50, sched)
    with pytest.raises(ValueError):
        empirical_bound_check(p, 0.1, 1, 5, 0.1, 200, sched)


def test_kl_series_examples(rng):
    sched = default_schedule()
    x = rng.standard_normal(6)
    np.testing.assert_array_equal(kl_monotonicity_series(x, x, sched), 0.0)
    y = x + rng.standard_normal(6)
    k1 = kl_monotonicity_series(x, y, sched)
    k2 = kl_monotonicity_series(x, x + 2 * (y - x), sched)
    np.testing.assert_allclose(k2, 4 * k1, rtol=1e-12)
    assert np.all(np.diff(k1) < 0)
    with pytest.raises(ValueError):
        kl_monotonicity_series(x, y[:3], sched)


def test_kl_series_skips_unit_alpha_bar():
    s = NoiseSchedule(np.r_[np.zeros(3), np.full(5, 0.1)])
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        out = kl_monotonicity_series(np.zeros(2), np.ones(2), s)
    assert len(out) == 5 and any("alpha_bar" in str(m.message) for m in w)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(5, 300), st.floats(1e-5, 1e-3), st.floats(1e-2, 0.3))
def test_kl_series_non_increasing(seed, T, b0, b1):
    r = np.random.default_rng(seed)
    s = make_linear_schedule(T, b0, b1)
    kl = kl_monotonicity_series(r.standard_normal(5), r.standard_normal(5), s)
    assert np.all(np.diff(kl) <= 0)
