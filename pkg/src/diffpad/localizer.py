"""Patch localization from a restoration residual.

All thresholds act on the canonical ``[0, 255]`` scale.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .validation import check_same_shape

__all__ = [
    "PatchBox",
    "residual_map",
    "restoration_mse",
    "dynamic_threshold",
    "binarize",
    "estimate_patch_area",
    "window_sums",
    "locate_patch",
    "estimate_side",
    "is_clean",
    "DEFAULT_MU",
    "DEFAULT_NU",
    "DEFAULT_TAU_PRIME",
    "DEFAULT_CLEAN_GATE",
]

DEFAULT_MU = 0.066
DEFAULT_NU = 14.90
DEFAULT_TAU_PRIME = 9.0
DEFAULT_CLEAN_GATE = 62.0


class PatchBox(NamedTuple):
    """Square region ``[top, top + side) x [left, left + side)``."""

    top: int
    left: int
    side: int

    def check(self, shape):
        H, W = shape[:2]
        if self.side < 1 or self.top < 0 or self.left < 0:
            raise ValueError(f"invalid box {self}")
        if self.top + self.side > H or self.left + self.side > W:
            raise ValueError(f"box {self} exceeds image bounds {H}x{W}")
        return self

    @property
    def slices(self):
        return (slice(self.top, self.top + self.side), slice(self.left, self.left + self.side))

    @property
    def area(self) -> int:
        return self.side * self.side

    def to_mask(self, shape) -> np.ndarray:
        self.check(shape)
        m = np.zeros(shape[:2], dtype=np.uint8)
        m[self.slices] = 1
        return m


def residual_map(x_a, x_hat) -> np.ndarray:
    """Per-pixel mean absolute difference over channels."""
    x_a = np.asarray(x_a, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    check_same_shape(x_a, x_hat, "residual_map")
    diff = np.abs(x_hat - x_a)
    return diff.mean(axis=2) if diff.ndim == 3 else diff


def restoration_mse(x_a, x_hat) -> float:
    x_a = np.asarray(x_a, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    check_same_shape(x_a, x_hat, "restoration_mse")
    return float(np.mean((x_hat - x_a) ** 2))


def dynamic_threshold(mse: float, mu: float = DEFAULT_MU, nu: float = DEFAULT_NU) -> float:
    if mse < 0:
        raise ValueError("mse must be non-negative")
    return mu * mse + nu


def binarize(rmap, tau: float) -> np.ndarray:
    rmap = np.asarray(rmap, dtype=np.float64)
    if not np.all(np.isfinite(rmap)):
        raise ValueError("residual map must be finite")
    return (rmap > tau).astype(np.uint8)


def estimate_patch_area(xdelta, tau: float) -> int:
    return int(binarize(xdelta, tau).sum())


def window_sums(mask, side: int) -> np.ndarray:
    """Ones-count of every side x side window, via a 2-D prefix sum.

    Entry ``[i, j]`` is the count of the window with top-left corner (i, j).
    """
    m = np.asarray(mask, dtype=np.int64)
    S = np.zeros((m.shape[0] + 1, m.shape[1] + 1), dtype=np.int64)
    S[1:, 1:] = m.cumsum(0).cumsum(1)
    return S[side:, side:] - S[:-side, side:] - S[side:, :-side] + S[:-side, :-side]


def locate_patch(mask, side: int) -> PatchBox:
    """Window with the most ones; ties go to the smallest top, then left."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-D")
    H, W = mask.shape
    if not 1 <= side <= min(H, W):
        raise ValueError(f"side {side} outside [1, {min(H, W)}]")
    sums = window_sums(mask, side)
    # argmax returns the first maximum in row-major order
    top, left = np.unravel_index(int(np.argmax(sums)), sums.shape)
    return PatchBox(int(top), int(left), int(side))


def estimate_side(area: int, H: int, W: int) -> int:
    if area < 0:
        raise ValueError("area must be non-negative")
    side = int(math.floor(math.sqrt(area) + 0.5))
    return max(1, min(side, H, W))


def is_clean(mse: float, gate: float = DEFAULT_CLEAN_GATE) -> bool:
    if mse < 0:
        raise ValueError("mse must be non-negative")
    return bool(mse < gate)
