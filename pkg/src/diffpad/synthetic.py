"""Synthetic stand-ins for natural images and adversarial patches."""

from __future__ import annotations

import numpy as np

from .localizer import PatchBox

__all__ = ["PATCH_KINDS", "make_synthetic_patch", "random_box", "make_gallery"]

PATCH_KINDS = ("uniform_noise", "checker", "high_contrast")


def make_synthetic_patch(kind: str, side: int, seed: int = 0, channels: int = 3) -> np.ndarray:
    """side x side x channels patch content with 8-bit integer values."""
    if side < 1:
        raise ValueError("side must be >= 1")
    rng = np.random.default_rng(seed)
    shape = (side, side, channels)
    if kind == "uniform_noise":
        patch = rng.integers(0, 256, size=shape)
    elif kind == "checker":
        ii, jj = np.indices((side, side))
        patch = np.repeat((255 * ((ii + jj) % 2))[:, :, None], channels, axis=2)
    elif kind == "high_contrast":
        patch = 255 * rng.integers(0, 2, size=shape)
    else:
        raise ValueError(f"unknown patch kind {kind!r}; choose from {PATCH_KINDS}")
    return patch.astype(np.float64)


def random_box(shape, area_frac: float, rng) -> PatchBox:
    """Square box covering about ``area_frac`` of the image at a random position."""
    H, W = shape[:2]
    side = int(np.clip(round(np.sqrt(area_frac * H * W)), 1, min(H, W)))
    top = int(rng.integers(0, H - side + 1))
    left = int(rng.integers(0, W - side + 1))
    return PatchBox(top, left, side)


def make_gallery(n: int = 5, size: int = 64, channels: int = 3, seed: int = 0) -> list[np.ndarray]:
    """Smooth, mutually distinct images: low-frequency waves, a tilt and soft blobs.

    Values are integers in [40, 215].
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / size
    images = []
    for _ in range(n):
        img = np.empty((size, size, channels))
        for c in range(channels):
            f = rng.normal() * (xx - 0.5) + rng.normal() * (yy - 0.5)
            for _ in range(4):
                fy, fx = rng.integers(1, 4, size=2)
                ph = rng.uniform(0, 2 * np.pi)
                f += rng.uniform(0.3, 1.0) * np.sin(2 * np.pi * (fx * xx + fy * yy) + ph)
            for _ in range(2):
                cy, cx = rng.uniform(0.15, 0.85, size=2)
                r = rng.uniform(0.08, 0.2)
                f += rng.normal(0, 1.5) * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r))
            f = (f - f.min()) / (np.ptp(f) + 1e-12)
            img[:, :, c] = 40 + 175 * f
        images.append(np.round(img))
    return images
