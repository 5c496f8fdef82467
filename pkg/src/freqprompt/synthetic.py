"""Deterministic synthetic scenes and corrupted coarse masks.

These stand in for real underwater photographs and first-pass
segmentations.  They let the noise and gating behaviour be checked without
datasets or pretrained models.
"""
from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter


def synthetic_scene(seed: int, size: int = 128):
    """A smooth, lightly textured background with 1-3 elliptical objects.

    Returns ``(image, gt)``: a float image in [0.05, 0.95] and a binary mask.
    """
    rng = np.random.default_rng([seed, size])
    yy, xx = np.mgrid[0:size, 0:size] / size
    g = rng.uniform(-0.15, 0.15, 2)
    background = 0.4 + g[0] * (yy - 0.5) + g[1] * (xx - 0.5)
    background = background + gaussian_filter(rng.normal(0.0, 0.04, (size, size)), 2.0)

    gt = np.zeros((size, size), dtype=bool)
    img = background.copy()
    for _ in range(rng.integers(1, 4)):
        cy, cx = rng.uniform(0.25, 0.75, 2)
        ry, rx = rng.uniform(0.08, 0.22, 2)
        theta = rng.uniform(0, np.pi)
        dy, dx = yy - cy, xx - cx
        u = (dx * np.cos(theta) + dy * np.sin(theta)) / rx
        v = (-dx * np.sin(theta) + dy * np.cos(theta)) / ry
        blob = u * u + v * v <= 1.0
        shade = rng.uniform(0.6, 0.85) if rng.random() < 0.5 else rng.uniform(0.1, 0.25)
        img[blob] = shade + 0.05 * np.sin(40 * u[blob]) * np.cos(40 * v[blob])
        gt |= blob
    img = gaussian_filter(img, 0.7)
    return np.clip(img, 0.05, 0.95), gt.astype(np.uint8)


def corrupted_coarse_mask(gt, seed: int, n_soft: int = 3, n_hard: int = 1,
                          radius: float = 0.08, softness: float = 1.5):
    """Probability map resembling an imperfect first-pass segmentation.

    The mask starts as a blurred ``gt`` (soft but correct boundaries).  Then
    ``n_soft`` discs near object boundaries are pushed just across 0.5 to the
    wrong side (wrong but unsure), and ``n_hard`` discs are flipped with
    full confidence (wrong and sure).
    """
    gt = np.asarray(gt, dtype=np.float64)
    h, w = gt.shape
    rng = np.random.default_rng([seed, h, w, 7])
    prob = 0.02 + 0.96 * gaussian_filter(gt, softness)
    edge = np.argwhere(gaussian_filter(gt, 1.0) * (1 - gaussian_filter(gt, 1.0)) > 0.05)
    if edge.size == 0:
        edge = np.argwhere(np.ones_like(gt, dtype=bool))
    yy, xx = np.mgrid[0:h, 0:w]
    rad = radius * min(h, w)
    for i in range(n_soft + n_hard):
        cy, cx = edge[rng.integers(len(edge))]
        disc = (yy - cy) ** 2 + (xx - cx) ** 2 <= rad * rad
        if i < n_soft:
            prob[disc] = 0.5 + (0.5 - prob[disc]) * rng.uniform(0.2, 0.4)
        else:
            prob[disc] = 1.0 - prob[disc]
    return np.clip(prob, 0.0, 1.0)


def scene_corpus(n: int = 20, size: int = 128, seed: int = 0):
    """``n`` (image, gt) pairs from consecutive seeds."""
    return [synthetic_scene(seed + i, size) for i in range(n)]


def corruption_corpus(n: int = 40, size: int = 128, seed: int = 0):
    """``n`` (image, gt, coarse) triples for prompt error analysis."""
    out = []
    for i in range(n):
        img, gt = synthetic_scene(seed + i, size)
        out.append((img, gt, corrupted_coarse_mask(gt, seed + i)))
    return out
