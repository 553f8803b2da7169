import numpy as np
import pytest

from diffpad.denoisers import GalleryDenoiser, ZeroDenoiser
from diffpad.fft_solvers import circular_conv, make_bicubic_kernel
from diffpad.pipeline import bicubic_downsample
from diffpad.sampler import Inpainting, SuperResolution, restore, sample_timesteps
from diffpad.schedule import make_linear_schedule
from diffpad.synthetic import make_gallery


def test_timesteps_uniform_and_strictly_decreasing():
    steps = sample_timesteps(1000, 20)
    assert steps[0] == 1000 and steps[-1] == 1
    assert len(steps) == 20
    assert np.all(np.diff(steps) < 0)
    for T, n in [(10, 10), (7, 4), (1000, 999), (1000, 2)]:
        st = sample_timesteps(T, n)
        assert len(st) == n and st[0] == T and st[-1] == 1 and np.all(np.diff(st) < 0)
    np.testing.assert_array_equal(sample_timesteps(5, 1), [5])


def test_timesteps_reject_bad_nfe():
    with pytest.raises(ValueError):
        sample_timesteps(10, 11)
    with pytest.raises(ValueError):
        sample_timesteps(10, 0)


def test_restore_rejects_nfe_above_T(rng):
    s = make_linear_schedule(10, 1e-3, 0.2)
    task = Inpainting(rng.uniform(0, 255, (4, 4, 1)), 0.1, mask=np.ones((4, 4)))
    with pytest.raises(ValueError):
        restore(task, ZeroDenoiser(s), s, nfe=11)


def test_task_validation(rng):
    with pytest.raises(ValueError):
        Inpainting(np.zeros((4, 4, 3)), 0.0, mask=np.ones((4, 4)))
    with pytest.raises(ValueError):
        Inpainting(np.zeros((4, 4, 3)), 0.1, mask=np.full((4, 4), 0.5))
    with pytest.raises(ValueError):
        Inpainting(np.zeros((4, 4, 3)), 0.1, mask=np.ones((5, 4)))
    with pytest.raises(ValueError):
        SuperResolution(np.zeros((4, 4, 3)), 0.1, scale=0)
    assert SuperResolution(np.zeros((4, 4, 3)), 0.1, scale=2).output_shape == (8, 8, 3)


@pytest.mark.parametrize("den_kind", ["zero", "gallery"])
def test_full_mask_inpainting_returns_observation(sched, rng, den_kind):
    y = rng.integers(0, 256, size=(16, 16, 3)).astype(float)
    den = ZeroDenoiser(sched) if den_kind == "zero" else GalleryDenoiser(make_gallery(2, 16), sched)
    out = restore(Inpainting(y, 1e-6, mask=np.ones((16, 16))), den, sched, nfe=20, rng_seed=3)
    assert np.max(np.abs(out - y)) <= 1e-3


def test_scale_one_sr_returns_observation(sched, rng):
    y = rng.integers(0, 256, size=(16, 16, 3)).astype(float)
    task = SuperResolution(y, 1e-6, scale=1, kernel=np.array([[1.0]]))
    out = restore(task, ZeroDenoiser(sched), sched, nfe=20, rng_seed=0)
    assert np.max(np.abs(out - y)) <= 1e-3


def test_empty_mask_inpainting_reproduces_single_gallery_image(sched, rng):
    g = make_gallery(1, 32, seed=4)[0]
    y = rng.uniform(0, 255, size=g.shape)
    out = restore(Inpainting(y, 0.001, mask=np.zeros(g.shape[:2])), GalleryDenoiser([g], sched), sched)
    assert np.linalg.norm(out - g) <= 0.02 * np.linalg.norm(g)


def test_restore_is_seed_deterministic(sched, gallery_den, gallery):
    y = bicubic_downsample(gallery[0], 4)
    task = SuperResolution(y, 0.001, scale=4)
    a = restore(task, gallery_den, sched, rng_seed=9)
    b = restore(task, gallery_den, sched, rng_seed=9)
    c = restore(task, gallery_den, sched, rng_seed=10, rho=1.0)
    assert a.tobytes() == b.tobytes()
    assert a.shape == (64, 64, 3)
    assert np.all((c >= 0) & (c <= 255))


def test_trace_visits_scheduled_steps(sched, gallery_den, gallery):
    task = SuperResolution(bicubic_downsample(gallery[1], 4), 0.001, scale=4)
    _, steps = restore(task, gallery_den, sched, nfe=7, return_trace=True)
    np.testing.assert_array_equal(steps, sample_timesteps(sched.T, 7))


@pytest.mark.parametrize("idx", range(5))
def test_sr_does_not_worsen_data_fit(sched, gallery_den, gallery, rng, idx):
    from diffpad.synthetic import make_synthetic_patch, random_box
    from diffpad.pipeline import apply_patch

    box = random_box(gallery[idx].shape, 0.05, rng)
    x = apply_patch(gallery[idx], make_synthetic_patch("uniform_noise", box.side, idx), box)
    k = make_bicubic_kernel(4)
    y = bicubic_downsample(x, 4)
    task = SuperResolution(y, 0.001, scale=4)
    out = restore(task, gallery_den, sched, rng_seed=idx)

    def misfit(img):
        return np.linalg.norm(circular_conv(img, k)[::4, ::4] - y)

    assert misfit(out) <= misfit(task.initial_estimate(127.5))


def test_conditional_alignment(sched, gallery_den, gallery):
    """Two inputs that differ only inside a patch move closer after restoration."""
    from diffpad.synthetic import PATCH_KINDS, make_synthetic_patch, random_box
    from diffpad.pipeline import apply_patch

    wins, trials = 0, 0
    for idx, g in enumerate(gallery):
        for seed in range(4):
            r = np.random.default_rng([idx, seed])
            box = random_box(g.shape, 0.05, r)
            kind = PATCH_KINDS[seed % 3]
            xa = apply_patch(g, make_synthetic_patch(kind, box.side, seed), box)
            outs = [
                restore(SuperResolution(bicubic_downsample(x, 4), 0.001, scale=4), gallery_den, sched, rng_seed=seed)
                for x in (g, xa)
            ]
            wins += np.linalg.norm(outs[0] - outs[1]) < np.linalg.norm(g - xa)
            trials += 1
    assert wins >= 0.95 * trials
