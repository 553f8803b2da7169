"""Input validation helpers shared by the estimator and functional APIs."""

from __future__ import annotations

import numbers

import numpy as np

__all__ = [
    "NumericalError",
    "check_image",
    "check_images",
    "check_mask",
    "check_same_shape",
    "check_scalar",
]


class NumericalError(FloatingPointError):
    """Raised when an iterative routine produces non-finite state."""


def check_image(x, name="image", copy=False) -> np.ndarray:
    """Return ``x`` as a float64 H x W x C raster.

    Two-dimensional input is promoted to a single channel.
    """
    arr = np.array(x, dtype=np.float64) if copy else np.asarray(x, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise ValueError(f"{name} must be H x W or H x W x C, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1 or arr.shape[2] < 1:
        raise ValueError(f"{name} has an empty axis: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_images(X, name="X") -> list[np.ndarray]:
    """Accept an N x H x W x C array or a sequence of rasters."""
    if isinstance(X, np.ndarray) and X.ndim == 4:
        return [check_image(x, name) for x in X]
    if isinstance(X, np.ndarray) and X.ndim in (2, 3) and X.dtype != object:
        raise ValueError(f"{name} must be a batch of images; wrap a single image in a list")
    imgs = [check_image(x, name) for x in X]
    if not imgs:
        raise ValueError(f"{name} is empty")
    return imgs


def check_mask(mask, shape=None, name="mask") -> np.ndarray:
    m = np.asarray(mask)
    if m.dtype == bool:
        m = m.astype(np.float64)
    else:
        m = m.astype(np.float64)
        if not np.all((m == 0) | (m == 1)):
            raise ValueError(f"{name} must be binary")
    if shape is not None:
        if m.ndim == 2 and len(shape) == 3:
            m = m[:, :, None]
        try:
            m = np.broadcast_to(m, shape)
        except ValueError:
            raise ValueError(f"{name} shape {m.shape} incompatible with {shape}") from None
    return m


def check_same_shape(a, b, what="inputs"):
    if np.shape(a) != np.shape(b):
        raise ValueError(f"{what}: shape mismatch {np.shape(a)} vs {np.shape(b)}")


def check_scalar(x, name, min_val=None, max_val=None, include_min=True, integer=False):
    """Light version of ``sklearn.utils.check_scalar`` that also rejects NaN."""
    if integer:
        if isinstance(x, bool) or not isinstance(x, numbers.Integral):
            raise TypeError(f"{name} must be an integer, got {x!r}")
    elif not isinstance(x, numbers.Real) or not np.isfinite(x):
        raise ValueError(f"{name} must be a finite real, got {x!r}")
    if min_val is not None:
        if (x < min_val) if include_min else (x <= min_val):
            op = ">=" if include_min else ">"
            raise ValueError(f"{name} must be {op} {min_val}, got {x}")
    if max_val is not None and x > max_val:
        raise ValueError(f"{name} must be <= {max_val}, got {x}")
    return x
