"""scikit-learn style front end for the decontamination pipeline."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .config import DiffPadConfig, derive_seed
from .denoisers import Denoiser, GalleryDenoiser
from .localizer import PatchBox
from .metrics import miou
from .pipeline import defend, localize
from .validation import check_images

__all__ = ["PatchDecontaminator", "worker_count"]


def worker_count(n_jobs=None) -> int:
    """Thread cap: ``n_jobs`` if given, else ``$DIFFPAD_THREADS``, else 1."""
    if n_jobs is None:
        n_jobs = int(os.environ.get("DIFFPAD_THREADS", "1") or 1)
    if n_jobs < 0:
        n_jobs = os.cpu_count() or 1
    return max(1, int(n_jobs))


class PatchDecontaminator(TransformerMixin, BaseEstimator):
    """Locate and inpaint square adversarial patches with a diffusion prior.

    ``fit`` binds the prior: a user-supplied ``denoiser`` is used as is,
    otherwise the training images become a :class:`GalleryDenoiser`.
    ``transform`` returns decontaminated images and ``predict`` the detected
    boxes (``None`` for images judged clean). Image ``i`` of a batch is
    processed with a seed derived from ``(random_state, i)``.
    """

    def __init__(
        self,
        scale=4,
        sigma=0.001,
        nfe=20,
        rho=0.5,
        mu=0.066,
        nu=14.90,
        tau_prime=9.0,
        clean_gate=62.0,
        n_steps=1000,
        beta_start=1e-4,
        beta_end=0.02,
        temperature=1.0,
        denoiser=None,
        random_state=0,
        n_jobs=None,
    ):
        self.scale = scale
        self.sigma = sigma
        self.nfe = nfe
        self.rho = rho
        self.mu = mu
        self.nu = nu
        self.tau_prime = tau_prime
        self.clean_gate = clean_gate
        self.n_steps = n_steps
        self.beta_start = beta_start
        self.beta_end = beta_end
        self.temperature = temperature
        self.denoiser = denoiser
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _make_config(self):
        return DiffPadConfig(
            mu=self.mu, nu=self.nu, tau_prime=self.tau_prime, clean_gate=self.clean_gate,
            scale=self.scale, sigma=self.sigma, nfe=self.nfe, rho=self.rho, T=self.n_steps,
            beta_start=self.beta_start, beta_end=self.beta_end,
            temperature=self.temperature, seed=int(self.random_state or 0),
        )

    def fit(self, X=None, y=None):
        self.config_ = self._make_config()
        if self.denoiser is not None:
            if not isinstance(self.denoiser, Denoiser):
                raise TypeError("denoiser must be a diffpad.denoisers.Denoiser")
            self.denoiser_ = self.denoiser
        else:
            if X is None:
                raise ValueError("need gallery images in X when no denoiser is given")
            self.denoiser_ = GalleryDenoiser(
                check_images(X), self.config_.make_schedule(), self.temperature
            )
        self.schedule_ = self.denoiser_.schedule
        return self

    def _map(self, fn, X):
        check_is_fitted(self, "denoiser_")
        imgs = check_images(X)
        base = self.config_.seed

        def run(item):
            i, img = item
            return fn(img, self.config_.replace(seed=derive_seed(base, i)), self.denoiser_)

        n = worker_count(self.n_jobs)
        if n == 1:
            return [run(item) for item in enumerate(imgs)]
        with ThreadPoolExecutor(max_workers=n) as pool:
            return list(pool.map(run, enumerate(imgs)))

    def decontaminate(self, X):
        """Full :class:`~diffpad.pipeline.DecontaminationResult` per image."""
        return self._map(defend, X)

    def transform(self, X):
        outs = [r.output for r in self.decontaminate(X)]
        if len({o.shape for o in outs}) == 1:
            return np.stack(outs)
        return outs

    def predict(self, X) -> list[PatchBox | None]:
        """Detected box per image; skips the inpainting stage."""
        return [r.detected for r in self._map(localize, X)]

    def score(self, X, y):
        """Mean IoU between detected boxes and true boxes (``None`` = no patch)."""
        preds = self.predict(X)
        if len(preds) != len(y):
            raise ValueError("X and y differ in length")
        return float(np.mean([miou(p, None if t is None else PatchBox(*t)) for p, t in zip(preds, y)]))
