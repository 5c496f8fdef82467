import numpy as np
import pytest

from freqprompt import analysis, fps, noise, synthetic
from freqprompt.errors import CoordinateError, ParameterError


def test_noise_is_seeded_per_index():
    img = np.full((16, 16), 0.5)
    a = noise.add_noise(img, "gaussian", 0.1, seed=3, index=0)
    np.testing.assert_array_equal(a, noise.add_noise(img, "gaussian", 0.1, seed=3, index=0))
    assert not np.array_equal(a, noise.add_noise(img, "gaussian", 0.1, seed=3, index=1))
    assert not np.array_equal(a, noise.add_noise(img, "gaussian", 0.1, seed=4, index=0))


def test_noise_models():
    img = np.random.default_rng(0).uniform(0.2, 0.8, (64, 64))
    n = noise.noise_rng(1, 0).normal(0, 0.1, img.shape)
    np.testing.assert_array_equal(noise.add_noise(img, "gaussian", 0.1, 1, clip=False), img + n)
    np.testing.assert_array_equal(noise.add_noise(img, "speckle", 0.1, 1, clip=False), img + img * n)
    # speckle leaves black pixels alone
    assert not noise.add_noise(np.zeros((4, 4)), "speckle", 0.5).any()
    out = noise.add_noise(img, "gaussian", 0.5)
    assert out.min() >= 0 and out.max() <= 1


def test_noise_zero_sigma_and_errors():
    img = np.random.default_rng(1).random((4, 4))
    np.testing.assert_array_equal(noise.add_noise(img, sigma=0.0), img)
    with pytest.raises(ParameterError):
        noise.add_noise(img, sigma=-0.1)
    with pytest.raises(ParameterError):
        noise.add_noise(img, kind="salt")


def test_noise_raises_high_frequency_energy():
    from freqprompt.wavelet import frequency_map
    img, _ = synthetic.synthetic_scene(0, 64)
    means = [frequency_map(noise.add_noise(img, sigma=s)).mean() for s in (0, 0.05, 0.1, 0.2)]
    assert means == sorted(means) and len(set(means)) == 4


def _prompts(points, scale=1):
    return fps.PromptSet(tuple(fps.Point(r, c, pos, 0) for r, c, pos in points), scale=scale)


def test_error_counts_by_hand():
    gt = np.zeros((8, 8), dtype=np.uint8)
    gt[:4, :4] = 1
    coarse_bin = gt.copy()
    coarse_bin[4:, 4:] = 1  # wrong in the bottom-right window
    wins = fps.SelectedWindows((fps.Window(0, 0, 4, 1.0), fps.Window(4, 4, 4, 0.5)))
    ps = _prompts([(1, 1, True), (6, 6, True), (5, 5, False), (2, 2, False)])
    rep = analysis.prompt_error_analysis(ps, wins, coarse_bin, gt)
    assert (rep.n_windows, rep.n_failed_windows) == (2, 1)
    assert (rep.n_positives, rep.n_false_positives) == (2, 1)
    assert (rep.n_negatives, rep.n_false_negatives) == (2, 1)
    assert rep.grid_error_rate == 0.5 and rep.point_error_rate == 0.5
    assert rep.images_with_any_failure == 1.0


def test_empty_window_counts_as_correct():
    gt = np.zeros((4, 4), dtype=np.uint8)
    assert analysis.window_iou(gt, gt, 0, 0, 4) == 1.0


def test_pooling_and_bounds():
    gt = np.zeros((4, 4), dtype=np.uint8)
    ok = analysis.prompt_error_analysis(_prompts([(0, 0, False)]), fps.SelectedWindows(), gt, gt)
    bad = analysis.prompt_error_analysis(_prompts([(0, 0, True)]), fps.SelectedWindows(), gt, gt)
    pooled = analysis.pool_reports([ok, bad])
    assert pooled.n_images == 2 and pooled.images_with_any_failure == 0.5
    assert pooled.point_error_rate == 0.5
    with pytest.raises(CoordinateError):
        analysis.prompt_error_analysis(_prompts([(9, 0, True)]), fps.SelectedWindows(), gt, gt)


def test_synthetic_corpora_are_deterministic():
    a = synthetic.corruption_corpus(2, 32)
    b = synthetic.corruption_corpus(2, 32)
    for x, y in zip(a, b):
        for u, v in zip(x, y):
            np.testing.assert_array_equal(u, v)
    img, gt, coarse = a[0]
    assert img.min() >= 0.05 and img.max() <= 0.95 and set(np.unique(gt)) <= {0, 1}
    assert coarse.min() >= 0 and coarse.max() <= 1
