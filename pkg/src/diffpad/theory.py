"""Empirical check of the purification distance bound on Gaussian data.

The data distribution is a diagonal Gaussian, so the score of every diffused
marginal is known in closed form and the bound's noise-prediction assumption
can be measured instead of assumed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .denoisers import GaussianPrior, _gaussian_score_ab
from .schedule import NoiseSchedule, gamma
from .validation import NumericalError

__all__ = [
    "BoundReport",
    "forward_terminal",
    "analytic_score_fn",
    "reverse_sde_euler",
    "c_xi",
    "purified_distance_bound",
    "restoration_error_bound",
    "perturb_coordinates",
    "empirical_bound_check",
    "kl_monotonicity_series",
]


@dataclass(frozen=True)
class BoundReport:
    gamma: float
    c_eps: float
    c_xi: float
    xi: float
    bound_value: float
    trials: int
    violation_rate: float
    max_distance: float
    mean_distance: float

    def to_dict(self) -> dict:
        return asdict(self)


def forward_terminal(x_a, sched: NoiseSchedule, rng_seed=None, eps=None) -> np.ndarray:
    """``sqrt(ab_T) x_a + sqrt(1 - ab_T) eps'``; ``eps`` overrides the draw."""
    x_a = np.asarray(x_a, dtype=np.float64)
    if eps is None:
        eps = np.random.default_rng(rng_seed).standard_normal(x_a.shape)
    ab = sched.alpha_bars[-1]
    return np.sqrt(ab) * x_a + np.sqrt(1.0 - ab) * eps


def analytic_score_fn(prior: GaussianPrior, sched: NoiseSchedule):
    """Score of the diffused prior at normalized time ``tau`` in [0, 1]."""

    def score(x, tau):
        return _gaussian_score_ab(prior, x, sched.continuous_alpha_bar(tau))

    return score


def reverse_sde_euler(
    x_T, score_fn, sched: NoiseSchedule, steps: int, rng_seed=None, track_score=False
):
    """Euler-Maruyama integration of the reverse VP SDE from tau = 1 to 0.

    One step of width h = 1/steps:
    ``x <- x + beta/2 (x + 2 s(x, tau)) h + sqrt(beta h) z``.
    ``x_T`` may carry leading batch axes. With ``track_score`` the largest
    score norm seen along the way (per batch element) is also returned.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rng = np.random.default_rng(rng_seed)
    x = np.array(x_T, dtype=np.float64)
    h = 1.0 / steps
    max_norm = np.zeros(x.shape[:-1]) if x.ndim > 1 else 0.0
    for i in range(steps, 0, -1):
        tau = i * h
        beta = float(sched.continuous_beta(tau))
        s = score_fn(x, tau)
        if track_score:
            max_norm = np.maximum(max_norm, np.linalg.norm(s, axis=-1))
        z = rng.standard_normal(x.shape)
        x = x + 0.5 * beta * (x + 2.0 * s) * h + math.sqrt(beta * h) * z
        if not np.all(np.isfinite(x)):
            raise NumericalError(f"reverse SDE diverged at tau={tau:.4f} (step {steps - i + 1})")
    return (x, max_norm) if track_score else x


def c_xi(d: int, xi: float) -> float:
    """Chi-square concentration constant."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if not 0 < xi <= 1:
        raise ValueError(f"xi must lie in (0, 1], got {xi!r}")
    L = math.log(1.0 / xi)
    return math.sqrt(2 * d + 4 * math.sqrt(d * L) + 4 * L)


def _check_nonneg(**kw):
    for k, v in kw.items():
        if v < 0:
            raise ValueError(f"{k} must be non-negative")


def purified_distance_bound(epsilon, area, gamma, c_eps, c_xi_val) -> float:
    """Distance bound between the purified patched input and the clean input."""
    _check_nonneg(epsilon=epsilon, area=area, gamma=gamma, c_eps=c_eps, c_xi=c_xi_val)
    return epsilon * area + gamma * c_eps + math.sqrt(math.expm1(gamma)) * c_xi_val


def restoration_error_bound(epsilon, area, gamma, c_eps, c_xi_val) -> float:
    """Distance bound between the patched input before and after purification."""
    return purified_distance_bound(epsilon, area, gamma, c_eps, c_xi_val) + epsilon * area


def perturb_coordinates(x_c, area: int, epsilon: float, rng) -> np.ndarray:
    """Vector analogue of pasting a patch: ``area`` random coordinates move by +-epsilon."""
    x_c = np.asarray(x_c, dtype=np.float64)
    d = x_c.shape[-1]
    if not 0 <= area <= d:
        raise ValueError(f"area must lie in [0, {d}]")
    out = x_c.copy()
    flat = out.reshape(-1, d)
    for row in flat:
        idx = rng.choice(d, size=area, replace=False)
        row[idx] += epsilon * rng.choice([-1.0, 1.0], size=area)
    return out


def empirical_bound_check(
    prior: GaussianPrior,
    epsilon: float,
    area: int,
    d: int,
    xi: float,
    trials: int,
    sched: NoiseSchedule,
    seed=0,
    steps: int = 1000,
) -> BoundReport:
    """Monte-Carlo violation rate of the distance bound.

    All trials are integrated together as one batch, so the report depends
    only on ``seed``.
    """
    if prior.dim != d:
        raise ValueError(f"prior dimension {prior.dim} != d={d}")
    if not 0 <= area <= d:
        raise ValueError(f"area must lie in [0, {d}]")
    if trials < 100:
        raise ValueError("trials must be >= 100")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    cxi = c_xi(d, xi)
    ss = np.random.SeedSequence(seed)
    r_data, r_fwd, r_rev = (np.random.default_rng(s) for s in ss.spawn(3))

    x_c = prior.sample(r_data, trials)
    x_a = perturb_coordinates(x_c, area, epsilon, r_data)
    x_T = forward_terminal(x_a, sched, r_fwd)
    x_hat, score_norms = reverse_sde_euler(
        x_T, analytic_score_fn(prior, sched), sched, steps, r_rev, track_score=True
    )
    # ||eps_hat|| / sqrt(1 - ab) equals the score norm
    c_eps = float(np.max(score_norms))
    g = gamma(sched)
    bound = purified_distance_bound(epsilon, area, g, c_eps, cxi)
    dist = np.linalg.norm(x_hat - x_c, axis=-1)
    return BoundReport(
        gamma=g,
        c_eps=c_eps,
        c_xi=cxi,
        xi=float(xi),
        bound_value=bound,
        trials=int(trials),
        violation_rate=float(np.mean(dist > bound)),
        max_distance=float(dist.max()),
        mean_distance=float(dist.mean()),
    )


def kl_monotonicity_series(x_c, x_a, sched: NoiseSchedule) -> np.ndarray:
    """KL between the diffused point masses at x_c and x_a, for t = 1..T.

    ``ab_t ||x_c - x_a||^2 / (2 (1 - ab_t))``. Steps with ab_t == 1 have no
    finite value and are dropped with a warning.
    """
    x_c = np.asarray(x_c, dtype=np.float64)
    x_a = np.asarray(x_a, dtype=np.float64)
    if x_c.shape != x_a.shape:
        raise ValueError(f"shape mismatch {x_c.shape} vs {x_a.shape}")
    sq = float(np.sum((x_c - x_a) ** 2))
    ab = sched.alpha_bars
    keep = ab < 1.0
    if not np.all(keep):
        warnings.warn(f"skipping {int((~keep).sum())} steps with alpha_bar == 1", stacklevel=2)
    ab = ab[keep]
    return ab * sq / (2.0 * (1.0 - ab))
