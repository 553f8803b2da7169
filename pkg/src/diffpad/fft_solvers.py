"""Closed-form data-consistency steps for super-resolution and inpainting.

All convolutions are circular. Images are H x W x C and channels are solved
independently; 2-D inputs are accepted and treated as a single channel.

The super-resolution step minimizes

    ||y - (k * x)[::s, ::s]||^2 + eta ||x - x0_hat||^2

in the Fourier domain, with ``[::s, ::s]`` the decimation whose adjoint is
zero-filling upsampling.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "keys_cubic",
    "make_bicubic_kernel",
    "kernel_to_otf",
    "block_average",
    "block_multiply",
    "upsample_zero",
    "circular_conv",
    "sr_data_solution",
    "inpaint_data_solution",
]


def keys_cubic(x, a=-0.5):
    """Keys cubic convolution kernel."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    x2, x3 = x * x, x * x * x
    near = (a + 2) * x3 - (a + 3) * x2 + 1
    far = a * x3 - 5 * a * x2 + 8 * a * x - 4 * a
    return np.where(x <= 1, near, np.where(x < 2, far, 0.0))


def make_bicubic_kernel(s: int, a: float = -0.5) -> np.ndarray:
    """Anti-aliasing bicubic kernel for s-fold downsampling, normalized to unit sum.

    Taps sit at integer offsets ``j`` with weight ``w(j / s)``; the taps at
    ``|j| = 2s`` vanish, leaving an odd, symmetric support of ``4s - 1``.
    """
    if int(s) != s or s < 1:
        raise ValueError(f"scale must be a positive integer, got {s!r}")
    s = int(s)
    j = np.arange(-2 * s + 1, 2 * s)
    w = keys_cubic(j / s, a)
    nz = np.flatnonzero(np.abs(w) > 1e-15)
    w = w[nz[0]:nz[-1] + 1]
    k = np.outer(w, w)
    return k / k.sum()


def _check_kernel(k):
    k = np.asarray(k, dtype=np.float64)
    if k.ndim != 2 or not np.all(np.isfinite(k)):
        raise ValueError("kernel must be a finite 2-D array")
    if abs(k.sum() - 1.0) > 1e-9:
        raise ValueError(f"kernel taps must sum to 1, got {k.sum()!r}")
    return k


def kernel_to_otf(k, shape) -> np.ndarray:
    """FFT of the kernel placed on an H x W periodic grid with its center at (0, 0).

    Kernels larger than the grid wrap around (taps are summed modulo H, W).
    """
    k = np.asarray(k, dtype=np.float64)
    H, W = shape
    kh, kw = k.shape
    rows = (np.arange(kh) - kh // 2) % H
    cols = (np.arange(kw) - kw // 2) % W
    grid = np.zeros((H, W))
    np.add.at(grid, (rows[:, None], cols[None, :]), k)
    return np.fft.fft2(grid)


def _as_hwc(x):
    x = np.asarray(x)
    return (x[:, :, None], True) if x.ndim == 2 else (x, False)


def block_average(spec, s: int) -> np.ndarray:
    """Mean of the s x s grid of (H/s) x (W/s) blocks of a spectrum."""
    spec = np.asarray(spec)
    H, W = spec.shape[:2]
    if H % s or W % s:
        raise ValueError(f"spectrum {H}x{W} not divisible by {s}")
    blocks = spec.reshape((s, H // s, s, W // s) + spec.shape[2:])
    return blocks.mean(axis=(0, 2))


def block_multiply(spec, factor, s: int) -> np.ndarray:
    """Multiply every (H/s) x (W/s) block of ``spec`` elementwise by ``factor``."""
    spec = np.asarray(spec)
    factor = np.asarray(factor)
    H, W = spec.shape[:2]
    if H % s or W % s or factor.shape[:2] != (H // s, W // s):
        raise ValueError(f"factor {factor.shape} does not tile {spec.shape} by {s}")
    reps = (s, s) + (1,) * (factor.ndim - 2)
    return spec * np.tile(factor, reps)


def upsample_zero(y, s: int) -> np.ndarray:
    """Zero-filling s-fold upsampler; samples land on indices 0, s, 2s, ..."""
    y = np.asarray(y)
    out = np.zeros((y.shape[0] * s, y.shape[1] * s) + y.shape[2:], dtype=y.dtype)
    out[::s, ::s] = y
    return out


def circular_conv(x, k) -> np.ndarray:
    x, squeeze = _as_hwc(np.asarray(x, dtype=np.float64))
    otf = kernel_to_otf(k, x.shape[:2])
    out = np.real(np.fft.ifft2(otf[:, :, None] * np.fft.fft2(x, axes=(0, 1)), axes=(0, 1)))
    return out[:, :, 0] if squeeze else out


def sr_data_solution(x0_hat, y_s, s: int, k, eta_t: float) -> np.ndarray:
    """Exact minimizer of the super-resolution data-consistency objective."""
    if not eta_t > 0:
        raise ValueError(f"eta_t must be positive, got {eta_t!r}")
    k = _check_kernel(k)
    x0_hat, squeeze = _as_hwc(np.asarray(x0_hat, dtype=np.float64))
    y_s, _ = _as_hwc(np.asarray(y_s, dtype=np.float64))
    H, W, C = x0_hat.shape
    if H % s or W % s:
        raise ValueError(f"image {H}x{W} not divisible by scale {s}")
    if y_s.shape != (H // s, W // s, C):
        raise ValueError(f"observation {y_s.shape} does not match {(H // s, W // s, C)}")

    FB = kernel_to_otf(k, (H, W))[:, :, None]
    FBC = np.conj(FB)
    F2B = np.abs(FB) ** 2
    d = FBC * np.fft.fft2(upsample_zero(y_s, s), axes=(0, 1))
    d = d + eta_t * np.fft.fft2(x0_hat, axes=(0, 1))
    ratio = block_average(FB * d, s) / (block_average(F2B, s) + eta_t)
    FX = (d - block_multiply(FBC, ratio, s)) / eta_t
    x = np.real(np.fft.ifft2(FX, axes=(0, 1)))
    return x[:, :, 0] if squeeze else x


def inpaint_data_solution(x0_hat, y_i, M, eta_t: float) -> np.ndarray:
    """``(M * y + eta x0_hat) / (M + eta)``; M = 1 marks observed pixels."""
    if not eta_t > 0:
        raise ValueError(f"eta_t must be positive, got {eta_t!r}")
    x0_hat = np.asarray(x0_hat, dtype=np.float64)
    y_i = np.asarray(y_i, dtype=np.float64)
    if x0_hat.shape != y_i.shape:
        raise ValueError(f"shape mismatch {x0_hat.shape} vs {y_i.shape}")
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 2 and x0_hat.ndim == 3:
        M = M[:, :, None]
    out = (M * y_i + eta_t * x0_hat) / (M + eta_t)
    # eta * x / eta is not always bit-exact; hidden pixels keep the prior as is
    return np.where(M == 0, x0_hat, out)
