"""Level-1 orthonormal Haar transform and the high-frequency prior map."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError
from .tensor import to_gray


@dataclass(frozen=True)
class SubBands:
    """Half-resolution Haar sub-bands.

    ``pad`` records how many rows/columns were appended by edge replication
    to make the source even; :func:`idhwt` crops them off again.
    """

    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray
    pad: tuple[int, int] = (0, 0)

    def __post_init__(self):
        shapes = {b.shape for b in (self.ll, self.lh, self.hl, self.hh)}
        if len(shapes) != 1:
            raise DimensionError(f"sub-band shapes disagree: {sorted(shapes)}")

    @property
    def shape(self):
        return self.ll.shape

    def stack(self) -> np.ndarray:
        """Bands as an ``(h, w, 4)`` array in ll, lh, hl, hh order."""
        return np.stack([self.ll, self.lh, self.hl, self.hh], axis=-1)

    @classmethod
    def from_stack(cls, arr, pad=(0, 0)):
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 4:
            raise DimensionError(f"expected (h, w, 4) band stack, got {arr.shape}")
        return cls(arr[..., 0], arr[..., 1], arr[..., 2], arr[..., 3], pad)


def dhwt(img) -> SubBands:
    """Single-level 2-D Haar transform of a (grayscale-converted) image.

    For each 2x2 block ``[[a, b], [c, d]]``::

        ll = (a + b + c + d) / 2     lh = (a + b - c - d) / 2
        hl = (a - b + c - d) / 2     hh = (a - b - c + d) / 2

    Odd dimensions are padded by replicating the last row/column.
    """
    x = to_gray(img)
    if x.ndim != 2 or x.size == 0:
        raise DimensionError(f"dhwt needs a non-empty 2-D image, got shape {x.shape}")
    pad = (x.shape[0] % 2, x.shape[1] % 2)
    if any(pad):
        x = np.pad(x, ((0, pad[0]), (0, pad[1])), mode="edge")
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    s_ab, d_ab = a + b, a - b
    s_cd, d_cd = c + d, c - d
    return SubBands(
        ll=(s_ab + s_cd) / 2,
        lh=(s_ab - s_cd) / 2,
        hl=(d_ab + d_cd) / 2,
        hh=(d_ab - d_cd) / 2,
        pad=pad,
    )


def idhwt(bands: SubBands) -> np.ndarray:
    """Exact inverse of :func:`dhwt` (including removal of edge padding)."""
    ll, lh, hl, hh = bands.ll, bands.lh, bands.hl, bands.hh
    if not (ll.shape == lh.shape == hl.shape == hh.shape):
        raise DimensionError("sub-band shapes disagree")
    h, w = ll.shape
    out = np.empty((2 * h, 2 * w))
    s_ll, d_ll = ll + lh, ll - lh
    s_hl, d_hl = hl + hh, hl - hh
    out[0::2, 0::2] = (s_ll + s_hl) / 2
    out[0::2, 1::2] = (s_ll - s_hl) / 2
    out[1::2, 0::2] = (d_ll + d_hl) / 2
    out[1::2, 1::2] = (d_ll - d_hl) / 2
    ph, pw = bands.pad
    return out[: 2 * h - ph, : 2 * w - pw]


def high_freq_map(bands: SubBands, magnitude: bool = True) -> np.ndarray:
    """Average of the three detail bands.

    With ``magnitude=True`` (default) the absolute values are averaged so
    oriented edges of opposite sign do not cancel; ``magnitude=False`` gives
    the plain signed average.
    """
    if magnitude:
        return (np.abs(bands.lh) + np.abs(bands.hl) + np.abs(bands.hh)) / 3
    return (bands.lh + bands.hl + bands.hh) / 3


def soft_threshold(m, thresh: float = 0.0) -> np.ndarray:
    """``sign(x) * max(|x| - thresh, 0)`` elementwise."""
    if thresh < 0:
        raise ParameterError(f"threshold must be non-negative, got {thresh}")
    m = np.asarray(m, dtype=np.float64)
    if thresh == 0:
        return m.copy()
    return np.sign(m) * np.maximum(np.abs(m) - thresh, 0.0)


def frequency_map(img, soft_thresh: float = 0.0, magnitude: bool = True) -> np.ndarray:
    """Image -> Haar detail map -> optional soft-threshold denoising."""
    return soft_threshold(high_freq_map(dhwt(img), magnitude=magnitude), soft_thresh)
