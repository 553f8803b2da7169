"""Discrete variance-preserving noise schedules and the elementary DDPM algebra.

Timesteps are 1-based: ``t = 1 .. T``; ``t = 0`` denotes clean data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NoiseSchedule",
    "make_linear_schedule",
    "default_schedule",
    "forward_sample",
    "estimate_x0",
    "eta",
    "gamma",
    "gamma_riemann",
]

DEFAULT_T = 1000
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.02


@dataclass(frozen=True, eq=False)
class NoiseSchedule:
    """Beta table of a discrete VP diffusion.

    ``alpha_bars[t - 1]`` is the cumulative product of ``1 - beta`` up to step t.
    Zero betas are tolerated so degenerate (noiseless) schedules can be built
    for limit checks; :func:`make_linear_schedule` only produces strictly
    positive ones.
    """

    betas: np.ndarray
    alpha_bars: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        betas = np.array(self.betas, dtype=np.float64).reshape(-1)
        if betas.size < 1:
            raise ValueError("a schedule needs at least one step")
        if not np.all(np.isfinite(betas)):
            raise ValueError("betas must be finite")
        if np.any(betas < 0) or np.any(betas >= 1):
            raise ValueError("betas must lie in [0, 1)")
        betas.setflags(write=False)
        alpha_bars = np.cumprod(1.0 - betas)
        alpha_bars.setflags(write=False)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alpha_bars", alpha_bars)

    @property
    def T(self) -> int:
        return int(self.betas.size)

    @property
    def dt(self) -> float:
        """Step width on the normalized continuous span [0, 1]."""
        return 1.0 / self.T

    def check_step(self, t: int) -> int:
        t = int(t)
        if not 1 <= t <= self.T:
            raise ValueError(f"timestep {t} outside [1, {self.T}]")
        return t

    def alpha_bar(self, t: int) -> float:
        """Signal retention at step t; ``alpha_bar(0) == 1``."""
        if t == 0:
            return 1.0
        return float(self.alpha_bars[self.check_step(t) - 1])

    def beta(self, t: int) -> float:
        return float(self.betas[self.check_step(t) - 1])

    # Continuous-time view used by the SDE integrator. The rate is piecewise
    # constant, -T * log(1 - beta_t) on ((t-1)/T, t/T], so the continuous
    # marginal at tau = t/T has exactly alpha_bars[t - 1].

    def continuous_beta(self, tau):
        tau = np.asarray(tau, dtype=np.float64)
        idx = np.clip(np.ceil(tau * self.T).astype(int), 1, self.T) - 1
        return -self.T * np.log1p(-self.betas[idx])

    def continuous_alpha_bar(self, tau):
        tau = np.clip(np.asarray(tau, dtype=np.float64), 0.0, 1.0)
        grid = np.linspace(0.0, 1.0, self.T + 1)
        log_ab = np.concatenate([[0.0], np.log(self.alpha_bars)])
        return np.exp(np.interp(tau, grid, log_ab))

    def __repr__(self):
        return (
            f"NoiseSchedule(T={self.T}, beta_first={self.betas[0]:.3g}, "
            f"beta_last={self.betas[-1]:.3g})"
        )


def make_linear_schedule(T: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    """Linearly spaced betas from ``beta_start`` to ``beta_end`` (inclusive)."""
    if int(T) != T or T < 1:
        raise ValueError(f"T must be a positive integer, got {T!r}")
    if not (np.isfinite(beta_start) and np.isfinite(beta_end)):
        raise ValueError("beta bounds must be finite")
    if not 0 < beta_start <= beta_end < 1:
        raise ValueError(
            f"need 0 < beta_start <= beta_end < 1, got {beta_start}, {beta_end}"
        )
    return NoiseSchedule(np.linspace(beta_start, beta_end, int(T)))


def default_schedule() -> NoiseSchedule:
    return make_linear_schedule(DEFAULT_T, DEFAULT_BETA_START, DEFAULT_BETA_END)


def _same_shape(a, b, what):
    if a.shape != b.shape:
        raise ValueError(f"{what}: shape mismatch {a.shape} vs {b.shape}")


def forward_sample(x0, t: int, eps, sched: NoiseSchedule) -> np.ndarray:
    """Closed-form draw of x_t given x_0 and the noise ``eps``."""
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    _same_shape(x0, eps, "forward_sample")
    ab = sched.alpha_bar(sched.check_step(t))
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def estimate_x0(xt, t: int, eps_hat, sched: NoiseSchedule) -> np.ndarray:
    """Invert :func:`forward_sample` using a noise prediction."""
    xt = np.asarray(xt, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    _same_shape(xt, eps_hat, "estimate_x0")
    ab = sched.alpha_bar(sched.check_step(t))
    if ab <= 0:
        raise ValueError("alpha_bar must be positive to estimate x0")
    return (xt - np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(ab)


def eta(t: int, sigma: float, sched: NoiseSchedule) -> float:
    """Data-fidelity weight ``alpha_bar * sigma**2 / (1 - alpha_bar)``."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    ab = sched.alpha_bar(sched.check_step(t))
    if ab >= 1.0:
        raise ValueError(f"alpha_bar({t}) == 1: degenerate schedule, eta undefined")
    return ab * sigma**2 / (1.0 - ab)


def gamma(sched: NoiseSchedule) -> float:
    """Integrated noise rate, taken as ``-log alpha_bar_T``.

    This matches ``alpha_T = exp(-integral of beta)`` exactly for the discrete
    product; :func:`gamma_riemann` gives the plain beta sum as a cross-check.
    """
    return float(-np.sum(np.log1p(-sched.betas)))


def gamma_riemann(sched: NoiseSchedule) -> float:
    # sum(beta_t * dt) over the normalized span, rescaled by T
    return float(np.sum(sched.betas * sched.dt) * sched.T)
