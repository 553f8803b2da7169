import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from diffpad.config import DiffPadConfig
from diffpad.denoisers import GalleryDenoiser
from diffpad.schedule import default_schedule
from diffpad.synthetic import make_gallery


@pytest.fixture(scope="session")
def sched():
    return default_schedule()


@pytest.fixture(scope="session")
def gallery():
    return make_gallery(5, 64, seed=0)


@pytest.fixture(scope="session")
def gallery_den(gallery, sched):
    return GalleryDenoiser(gallery, sched)


@pytest.fixture
def cfg():
    return DiffPadConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
