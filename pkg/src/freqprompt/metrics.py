"""Segmentation metrics: mIoU, S-measure, weighted F-measure, mean E-measure, MAE.

``pred`` is a probability map in [0, 1]; ``gt`` a binary mask of the same
shape.  Conventions follow the common salient-object evaluation toolkits,
with these deliberate choices:

* S-measure uses alpha = 0.5; an all-background ``gt`` scores
  ``1 - mean(pred)`` and an all-foreground one ``mean(pred)``.  Sub-regions
  with fewer than two pixels use zero variance instead of NaN, and empty
  quadrants contribute nothing.
* Weighted F uses beta^2 = 1, a 7x7 Gaussian (sigma 5) and a Euclidean
  distance transform.  When several foreground pixels are equally near a
  background pixel, the one with the smallest (column, row) wins.  An empty
  ``gt`` scores 1 if ``pred`` is all zero and 0 otherwise.
* Mean E-measure averages over the 256 thresholds ``(i + 0.5) / 256``, binarizing
  with ``pred >= t``, and normalizes by the pixel count, so a perfect binary
  prediction scores exactly 1.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.ndimage import convolve, distance_transform_edt

from .errors import DimensionError, ParameterError

EPS = np.spacing(1.0)
ALPHA = 0.5
BETA2 = 1.0
N_THRESHOLDS = 256
E_THRESHOLDS = (np.arange(N_THRESHOLDS) + 0.5) / N_THRESHOLDS


@dataclass(frozen=True)
class MetricReport:
    miou: float
    s_alpha: float
    f_beta_w: float
    m_e_phi: float
    mae: float

    def as_dict(self):
        return asdict(self)


def _check(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt)
    if pred.shape != gt.shape or pred.ndim != 2:
        raise DimensionError(f"prediction {pred.shape} and ground truth {gt.shape} must be equal 2-D")
    if not np.all((gt == 0) | (gt == 1)):
        raise ParameterError("ground truth must be binary")
    return pred, gt.astype(bool)


# --- simple metrics ----------------------------------------------------------------

def iou(pred, gt, threshold: float = 0.5) -> float:
    pred, gt = _check(pred, gt)
    b = pred > threshold
    union = np.count_nonzero(b | gt)
    if union == 0:
        return 1.0
    return np.count_nonzero(b & gt) / union


def mae(pred, gt) -> float:
    pred, gt = _check(pred, gt)
    # correctly rounded sum, so the result does not depend on summation order
    return math.fsum(np.abs(pred - gt).ravel().tolist()) / pred.size


# --- S-measure ------------------------------------------------------------------------

def _s_object(x, mask):
    vals = x[mask]
    mu = vals.mean()
    sigma = vals.std(ddof=1) if vals.size > 1 else 0.0
    return 2.0 * mu / (mu * mu + 1.0 + sigma + EPS)


def _object_score(pred, gt):
    u = gt.mean()
    fg = np.where(gt, pred, 0.0)
    bg = np.where(gt, 0.0, 1.0 - pred)
    return u * _s_object(fg, gt) + (1.0 - u) * _s_object(bg, ~gt)


def _ssim(x, y):
    n = x.size
    mx, my = x.mean(), y.mean()
    denom = max(n - 1, 1)
    sx = ((x - mx) ** 2).sum() / denom
    sy = ((y - my) ** 2).sum() / denom
    sxy = ((x - mx) * (y - my)).sum() / denom
    alpha = 4.0 * mx * my * sxy
    beta = (mx * mx + my * my) * (sx + sy)
    if alpha != 0:
        return alpha / (beta + EPS)
    return 1.0 if beta == 0 else 0.0


def _centroid(gt):
    h, w = gt.shape
    if not gt.any():
        return int(np.round(w / 2)) + 1, int(np.round(h / 2)) + 1
    rows, cols = np.nonzero(gt)
    return int(np.round(cols.mean())) + 1, int(np.round(rows.mean())) + 1


def _region_score(pred, gt):
    h, w = gt.shape
    x, y = _centroid(gt)
    x, y = min(x, w), min(y, h)
    area = h * w
    parts = [
        (slice(0, y), slice(0, x), x * y / area),
        (slice(0, y), slice(x, w), y * (w - x) / area),
        (slice(y, h), slice(0, x), (h - y) * x / area),
    ]
    parts.append((slice(y, h), slice(x, w), 1.0 - sum(p[2] for p in parts)))
    score = 0.0
    for rs, cs, weight in parts:
        p, g = pred[rs, cs], gt[rs, cs].astype(np.float64)
        if p.size:
            score += weight * _ssim(p, g)
    return score


def s_measure(pred, gt, alpha: float = ALPHA) -> float:
    pred, gt = _check(pred, gt)
    y = gt.mean()
    if y == 0:
        return float(1.0 - pred.mean())
    if y == 1:
        return float(pred.mean())
    score = alpha * _object_score(pred, gt) + (1.0 - alpha) * _region_score(pred, gt)
    return float(max(score, 0.0))


# --- weighted F-measure -------------------------------------------------------------------

def gaussian_kernel(size: int = 7, sigma: float = 5.0) -> np.ndarray:
    """Normalized ``size x size`` Gaussian, tiny tails zeroed like MATLAB's fspecial."""
    m = (size - 1) / 2
    y, x = np.ogrid[-m:m + 1, -m:m + 1]
    k = np.exp(-(x * x + y * y) / (2 * sigma * sigma))
    k[k < np.finfo(k.dtype).eps * k.max()] = 0
    return k / k.sum()


def nearest_foreground(gt):
    """Distance to, and index of, the nearest foreground pixel for every pixel."""
    dist, (ri, ci) = distance_transform_edt(~gt, return_indices=True)
    return dist, ri, ci


def weighted_f_measure(pred, gt, beta2: float = BETA2) -> float:
    pred, gt = _check(pred, gt)
    if not gt.any():
        return 1.0 if not pred.any() else 0.0
    dist, ri, ci = nearest_foreground(gt)
    e = np.abs(pred - gt)
    et = np.where(gt, e, e[ri, ci])
    ea = convolve(et, gaussian_kernel(), mode="constant", cval=0.0)
    min_e_ea = np.where(gt & (ea < e), ea, e)
    importance = np.where(gt, 1.0, 2.0 - np.exp(np.log(0.5) / 5.0 * dist))
    ew = min_e_ea * importance
    tpw = gt.sum() - ew[gt].sum()
    fpw = ew[~gt].sum()
    recall = 1.0 - ew[gt].mean()
    precision = tpw / (tpw + fpw + EPS)
    return float((1 + beta2) * recall * precision / (recall + beta2 * precision + EPS))


# --- E-measure -------------------------------------------------------------------------------

def _e_from_counts(tp, fp, fn, tn, n_fg, n):
    """Sum of the enhanced-alignment matrix from confusion counts (vectorized over thresholds)."""
    n_bin = tp + fp
    mu_b = n_bin / n
    mu_g = n_fg / n
    total = np.zeros_like(mu_b, dtype=np.float64)
    for count, b, g in ((tp, 1.0, 1.0), (fp, 1.0, 0.0), (fn, 0.0, 1.0), (tn, 0.0, 0.0)):
        db, dg = b - mu_b, g - mu_g
        align = 2.0 * dg * db / (dg * dg + db * db + EPS)
        total += count * (align + 1.0) ** 2 / 4.0
    return total


def e_measure_curve(pred, gt, thresholds=E_THRESHOLDS) -> np.ndarray:
    pred, gt = _check(pred, gt)
    n = gt.size
    n_fg = np.count_nonzero(gt)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    # counts of pred >= t, split by gt, via sorted search
    fg_sorted = np.sort(pred[gt])
    bg_sorted = np.sort(pred[~gt])
    tp = fg_sorted.size - np.searchsorted(fg_sorted, thresholds, side="left")
    fp = bg_sorted.size - np.searchsorted(bg_sorted, thresholds, side="left")
    if n_fg == 0:
        total = n - (tp + fp)
    elif n_fg == n:
        total = tp + fp
    else:
        total = _e_from_counts(tp, fp, n_fg - tp, (n - n_fg) - fp, n_fg, n)
    return np.asarray(total, dtype=np.float64) / n


def mean_e_measure(pred, gt) -> float:
    return float(e_measure_curve(pred, gt).mean())


def metric_suite(pred, gt) -> MetricReport:
    pred, gt = _check(pred, gt)
    return MetricReport(
        miou=float(iou(pred, gt)),
        s_alpha=s_measure(pred, gt),
        f_beta_w=weighted_f_measure(pred, gt),
        m_e_phi=mean_e_measure(pred, gt),
        mae=mae(pred, gt),
    )
