"""Pipeline configuration and its JSON form.

JSON configs are nested by section::

    {"schedule": {"T": 1000, "beta_start": 1e-4, "beta_end": 0.02},
     "sampler": {"nfe": 20, "rho": 0.5, "sigma": 0.001},
     "localizer": {"mu": 0.066, "nu": 14.9, "tau_prime": 9, "clean_gate": 62},
     "denoiser": {"model_path": null, "gallery_dir": null, "temperature": 1.0},
     "pipeline": {"scale": 4, "seed": 0}}

Flat dotted keys (``"sampler.nfe": 20``) are accepted too.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import localizer, sampler, schedule

__all__ = ["DiffPadConfig", "load_config", "derive_seed", "CONFIG_KEYS"]

# dotted JSON key -> DiffPadConfig field
CONFIG_KEYS = {
    "schedule.T": "T",
    "schedule.beta_start": "beta_start",
    "schedule.beta_end": "beta_end",
    "sampler.nfe": "nfe",
    "sampler.rho": "rho",
    "sampler.sigma": "sigma",
    "localizer.mu": "mu",
    "localizer.nu": "nu",
    "localizer.tau_prime": "tau_prime",
    "localizer.clean_gate": "clean_gate",
    "denoiser.model_path": "model_path",
    "denoiser.gallery_dir": "gallery_dir",
    "denoiser.temperature": "temperature",
    "pipeline.scale": "scale",
    "pipeline.seed": "seed",
}


@dataclass(frozen=True)
class DiffPadConfig:
    mu: float = localizer.DEFAULT_MU
    nu: float = localizer.DEFAULT_NU
    tau_prime: float = localizer.DEFAULT_TAU_PRIME
    clean_gate: float = localizer.DEFAULT_CLEAN_GATE
    scale: int = 4
    sigma: float = sampler.DEFAULT_SIGMA
    nfe: int = sampler.DEFAULT_NFE
    rho: float = sampler.DEFAULT_RHO
    T: int = schedule.DEFAULT_T
    beta_start: float = schedule.DEFAULT_BETA_START
    beta_end: float = schedule.DEFAULT_BETA_END
    temperature: float = 1.0
    seed: int = 0
    model_path: str | None = None
    gallery_dir: str | None = None

    def __post_init__(self):
        if int(self.scale) != self.scale or self.scale < 1:
            raise ValueError(f"scale must be a positive integer, got {self.scale!r}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if int(self.nfe) != self.nfe or self.nfe < 1:
            raise ValueError(f"nfe must be a positive integer, got {self.nfe!r}")
        if self.nfe > self.T:
            raise ValueError(f"nfe={self.nfe} exceeds T={self.T}")
        if not 0 <= self.rho <= 1:
            raise ValueError("rho must lie in [0, 1]")
        if self.clean_gate < 0 or self.tau_prime < 0:
            raise ValueError("thresholds must be non-negative")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")

    def make_schedule(self) -> schedule.NoiseSchedule:
        return schedule.make_linear_schedule(self.T, self.beta_start, self.beta_end)

    def replace(self, **changes) -> "DiffPadConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data: dict) -> "DiffPadConfig":
        flat = {}
        for key, value in data.items():
            if isinstance(value, dict):
                for sub, v in value.items():
                    flat[f"{key}.{sub}"] = v
            else:
                flat[key] = value
        unknown = sorted(set(flat) - set(CONFIG_KEYS))
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**{CONFIG_KEYS[k]: v for k, v in flat.items()})

    def to_dict(self) -> dict:
        out: dict = {}
        for key, name in CONFIG_KEYS.items():
            section, sub = key.split(".")
            out.setdefault(section, {})[sub] = getattr(self, name)
        return out


def load_config(path, **overrides) -> DiffPadConfig:
    """Read a JSON config; non-None ``overrides`` (field names) win over the file."""
    with open(Path(path)) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    fields = {}
    for key, value in data.items():
        items = value.items() if isinstance(value, dict) else [(None, value)]
        for sub, v in items:
            dotted = key if sub is None else f"{key}.{sub}"
            if dotted not in CONFIG_KEYS:
                raise ValueError(f"unknown config key: {dotted}")
            fields[CONFIG_KEYS[dotted]] = v
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return DiffPadConfig(**fields)


def derive_seed(base: int, index: int) -> int:
    """Independent per-item seed from (base seed, item index)."""
    return int(np.random.SeedSequence([int(base), int(index)]).generate_state(1)[0])
