"""Noise predictors: the pluggable ``eps_theta(x_t, t)`` used by the sampler.

Every denoiser is bound to a :class:`~diffpad.schedule.NoiseSchedule` and
declares the value range it works in. The pipeline maps canonical
``[0, 255]`` rasters into that range before sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from .schedule import NoiseSchedule

__all__ = [
    "Denoiser",
    "ZeroDenoiser",
    "GaussianPrior",
    "GaussianAnalyticDenoiser",
    "GalleryDenoiser",
    "OnnxDenoiser",
    "gaussian_score",
    "gallery_x0",
    "predict_noise",
]


class Denoiser:
    """Base class. Subclasses implement :meth:`_predict`."""

    value_range = (0.0, 255.0)

    def __init__(self, schedule: NoiseSchedule):
        self.schedule = schedule

    def predict_noise(self, xt, t: int) -> np.ndarray:
        xt = np.asarray(xt, dtype=np.float64)
        t = self.schedule.check_step(t)
        eps = np.asarray(self._predict(xt, t), dtype=np.float64)
        if eps.shape != xt.shape:
            raise ValueError(f"denoiser returned shape {eps.shape}, expected {xt.shape}")
        return eps

    def _predict(self, xt, t):
        raise NotImplementedError


def predict_noise(den: Denoiser, xt, t: int) -> np.ndarray:
    return den.predict_noise(xt, t)


class ZeroDenoiser(Denoiser):
    """Null prior: always predicts zero noise."""

    def __init__(self, schedule, value_range=(0.0, 255.0)):
        super().__init__(schedule)
        self.value_range = tuple(value_range)

    def _predict(self, xt, t):
        return np.zeros_like(xt)


@dataclass(frozen=True, eq=False)
class GaussianPrior:
    """Diagonal Gaussian data distribution N(mean, diag(variances))."""

    mean: np.ndarray
    variances: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        var = np.broadcast_to(np.asarray(self.variances, dtype=np.float64), mean.shape).copy()
        if np.any(var <= 0) or not np.all(np.isfinite(var)):
            raise ValueError("variances must be positive and finite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variances", var)

    @classmethod
    def standard(cls, d: int) -> "GaussianPrior":
        return cls(np.zeros(d), np.ones(d))

    @property
    def dim(self) -> int:
        return int(self.mean.size)

    def sample(self, rng, n=None):
        shape = self.mean.shape if n is None else (n,) + self.mean.shape
        return self.mean + np.sqrt(self.variances) * rng.standard_normal(shape)


def _gaussian_score_ab(prior, x, ab):
    x = np.asarray(x, dtype=np.float64)
    # batches are allowed along leading axes
    if x.shape[x.ndim - prior.mean.ndim:] != prior.mean.shape:
        raise ValueError(f"dimension mismatch: x {x.shape} vs prior {prior.mean.shape}")
    return -(x - np.sqrt(ab) * prior.mean) / (ab * prior.variances + (1.0 - ab))


def gaussian_score(prior: GaussianPrior, x, t: int, sched: NoiseSchedule) -> np.ndarray:
    """Exact score of the diffused marginal N(sqrt(ab) mu, ab Sigma + (1 - ab) I)."""
    return _gaussian_score_ab(prior, x, sched.alpha_bar(sched.check_step(t)))


class GaussianAnalyticDenoiser(Denoiser):
    """Noise prediction derived from the closed-form Gaussian score."""

    value_range = (-np.inf, np.inf)

    def __init__(self, prior: GaussianPrior, schedule: NoiseSchedule):
        super().__init__(schedule)
        self.prior = prior

    def score(self, xt, t):
        return gaussian_score(self.prior, xt, t, self.schedule)

    def _predict(self, xt, t):
        ab = self.schedule.alpha_bar(t)
        return -np.sqrt(1.0 - ab) * self.score(xt, t)


def _fit_to_shape(img, shape):
    # reflect-pad bottom/right so a gallery image matches a padded sample
    if img.shape == tuple(shape):
        return img
    dh, dw = shape[0] - img.shape[0], shape[1] - img.shape[1]
    if dh < 0 or dw < 0 or img.shape[2:] != tuple(shape[2:]):
        raise ValueError(f"gallery image {img.shape} incompatible with sample {shape}")
    pad = [(0, dh), (0, dw)] + [(0, 0)] * (img.ndim - 2)
    return np.pad(img, pad, mode="symmetric")


def gallery_x0(gallery, xt, t: int, sched: NoiseSchedule, temperature: float = 1.0) -> np.ndarray:
    """Posterior mean of x_0 under a uniform mixture of point masses at the gallery.

    Weights are ``exp(-||xt - sqrt(ab) g||^2 / (2 (1 - ab) temperature))``.
    """
    if len(gallery) == 0:
        raise ValueError("gallery is empty")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    xt = np.asarray(xt, dtype=np.float64)
    G = np.stack([_fit_to_shape(np.asarray(g, dtype=np.float64), xt.shape) for g in gallery])
    ab = sched.alpha_bar(sched.check_step(t))
    if len(G) == 1:
        return G[0].copy()
    sq = np.sum((xt[None] - np.sqrt(ab) * G) ** 2, axis=tuple(range(1, G.ndim)))
    w = softmax(-sq / (2.0 * (1.0 - ab) * temperature))
    return np.tensordot(w, G, axes=1)


class GalleryDenoiser(Denoiser):
    """Desk-scale image prior: the data distribution is a finite set of images.

    Works directly on the canonical ``[0, 255]`` scale.
    """

    def __init__(self, gallery, schedule: NoiseSchedule, temperature: float = 1.0):
        super().__init__(schedule)
        gallery = [np.asarray(g, dtype=np.float64) for g in gallery]
        if not gallery:
            raise ValueError("gallery is empty")
        shapes = {g.shape for g in gallery}
        if len(shapes) != 1:
            raise ValueError(f"gallery images differ in shape: {sorted(shapes)}")
        if temperature <= 0:
            raise ValueError("temperature must be positive")
        self.gallery = gallery
        self.temperature = float(temperature)
        self._padded = {}

    def _stack_for(self, shape):
        shape = tuple(shape)
        if shape not in self._padded:
            self._padded[shape] = [_fit_to_shape(g, shape) for g in self.gallery]
        return self._padded[shape]

    def x0(self, xt, t):
        return gallery_x0(self._stack_for(np.shape(xt)), xt, t, self.schedule, self.temperature)

    def _predict(self, xt, t):
        ab = self.schedule.alpha_bar(t)
        return (xt - np.sqrt(ab) * self.x0(xt, t)) / np.sqrt(1.0 - ab)


class OnnxDenoiser(Denoiser):
    """Adapter for a serialized noise-prediction network (ONNX).

    Requires ``onnxruntime``. The model is assumed unconditional with inputs
    ``(x: float32[N, C, H, W], t: int64[N])`` and inputs/outputs in ``[-1, 1]``.
    Models that predict extra channels (learned variance) are truncated to C.
    """

    value_range = (-1.0, 1.0)

    def __init__(self, model_path, schedule: NoiseSchedule):
        try:
            import onnxruntime as ort
        except ImportError as exc:
            raise ImportError(
                "OnnxDenoiser needs the optional 'onnxruntime' package "
                "(pip install 'diffpad[onnx]')"
            ) from exc
        super().__init__(schedule)
        self.model_path = str(model_path)
        self._session = ort.InferenceSession(self.model_path)
        self._inputs = [i.name for i in self._session.get_inputs()]

    def _predict(self, xt, t):
        c = xt.shape[2]
        batch = np.transpose(xt, (2, 0, 1))[None].astype(np.float32)
        # network timesteps are 0-based
        feeds = {self._inputs[0]: batch}
        if len(self._inputs) > 1:
            feeds[self._inputs[1]] = np.array([t - 1], dtype=np.int64)
        out = self._session.run(None, feeds)[0][0, :c]
        return np.transpose(out, (1, 2, 0)).astype(np.float64)
