"""8-bit PNG / PPM / PGM I/O on the canonical [0, 255] float raster."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

__all__ = ["SUPPORTED_SUFFIXES", "read_image", "write_image", "list_images"]

SUPPORTED_SUFFIXES = (".png", ".ppm", ".pgm")


def _check_suffix(path):
    suffix = Path(path).suffix.lower()
    if suffix not in SUPPORTED_SUFFIXES:
        raise ValueError(f"unsupported image format {suffix!r}; use {', '.join(SUPPORTED_SUFFIXES)}")
    return suffix


def read_image(path) -> np.ndarray:
    """Decode to an H x W x C float64 array (C = 1 or 3)."""
    _check_suffix(path)
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB" if im.mode in ("RGBA", "P", "CMYK", "LA") else "L")
        arr = np.asarray(im, dtype=np.float64)
    return arr[:, :, None] if arr.ndim == 2 else arr


def write_image(path, x) -> None:
    suffix = _check_suffix(path)
    arr = np.clip(np.floor(np.asarray(x, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if suffix == ".pgm" and arr.ndim == 3:
        raise ValueError("PGM holds grayscale only")
    if suffix == ".ppm" and arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    Image.fromarray(arr).save(path)


def list_images(directory) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise NotADirectoryError(str(d))
    return sorted(p for p in d.iterdir() if p.is_file() and p.suffix.lower() in SUPPORTED_SUFFIXES)
