"""Seeded Gaussian and speckle noise.

Every draw comes from a Philox (counter-based, 64-bit) generator keyed by
``(seed, index)``.  Each image in a batch therefore gets its own
reproducible stream, independent of processing order.
"""
from __future__ import annotations

import numpy as np

from .errors import ParameterError

NOISE_KINDS = ("gaussian", "speckle")
STRESS_SIGMAS = (0.05, 0.10, 0.20)


def noise_rng(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def add_noise(img, kind: str = "gaussian", sigma: float = 0.05, seed: int = 0,
              index: int = 0, clip: bool = True) -> np.ndarray:
    """``x + n`` (gaussian) or ``x + x * n`` (speckle), ``n ~ N(0, sigma^2)``."""
    if sigma < 0:
        raise ParameterError(f"sigma must be non-negative, got {sigma}")
    if kind not in NOISE_KINDS:
        raise ParameterError(f"unknown noise kind {kind!r}")
    x = np.asarray(img, dtype=np.float64)
    if sigma == 0:
        return x.copy()
    n = noise_rng(seed, index).normal(0.0, sigma, size=x.shape)
    out = x + n if kind == "gaussian" else x + x * n
    return np.clip(out, 0.0, 1.0) if clip else out
