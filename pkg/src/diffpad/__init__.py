"""Adversarial patch decontamination with conditional diffusion restoration."""

from .config import DiffPadConfig, load_config
from .denoisers import (
    Denoiser,
    GalleryDenoiser,
    GaussianAnalyticDenoiser,
    GaussianPrior,
    OnnxDenoiser,
    ZeroDenoiser,
)
from .estimator import PatchDecontaminator
from .localizer import PatchBox
from .pipeline import DecontaminationResult, apply_patch, bicubic_downsample, defend, localize
from .schedule import NoiseSchedule, default_schedule, make_linear_schedule
from .theory import BoundReport, empirical_bound_check

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "DecontaminationResult",
    "Denoiser",
    "DiffPadConfig",
    "GalleryDenoiser",
    "GaussianAnalyticDenoiser",
    "GaussianPrior",
    "NoiseSchedule",
    "OnnxDenoiser",
    "PatchBox",
    "PatchDecontaminator",
    "ZeroDenoiser",
    "apply_patch",
    "bicubic_downsample",
    "default_schedule",
    "defend",
    "empirical_bound_check",
    "load_config",
    "localize",
    "make_linear_schedule",
]
