"""PSNR, MSE and mIoU."""

from __future__ import annotations

import math

import numpy as np

from .localizer import PatchBox, restoration_mse
from .validation import check_same_shape

__all__ = ["mse", "psnr", "miou"]


def mse(a, b) -> float:
    return restoration_mse(a, b)


def psnr(a, b, max_value: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; ``math.inf`` for identical inputs."""
    err = mse(a, b)
    if err == 0:
        return math.inf
    return float(10.0 * math.log10(max_value**2 / err))


def _region(r, shape):
    if r is None:
        return None if shape is None else np.zeros(shape, dtype=bool)
    if isinstance(r, PatchBox):
        return r if shape is None else r.to_mask(shape).astype(bool)
    m = np.asarray(r)
    if m.ndim != 2:
        raise ValueError("mask must be 2-D")
    return m.astype(bool)


def _box_iou(a: PatchBox, b: PatchBox) -> float:
    ih = max(0, min(a.top + a.side, b.top + b.side) - max(a.top, b.top))
    iw = max(0, min(a.left + a.side, b.left + b.side) - max(a.left, b.left))
    inter = ih * iw
    return inter / (a.area + b.area - inter)


def miou(pred, truth, shape=None) -> float:
    """Intersection over union of two regions.

    Each region is a :class:`PatchBox`, a 2-D binary mask, or ``None`` for
    "no region". Two empty regions score 1.0.
    """
    if isinstance(pred, PatchBox) and isinstance(truth, PatchBox):
        return _box_iou(pred, truth)
    if shape is None:
        for r in (pred, truth):
            if r is not None and not isinstance(r, PatchBox):
                shape = np.shape(r)
                break
    if shape is None:
        # at most one box and the rest empty
        return 1.0 if pred is None and truth is None else 0.0
    p, t = _region(pred, shape), _region(truth, shape)
    check_same_shape(p, t, "miou")
    union = np.logical_or(p, t).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(p, t).sum() / union)
