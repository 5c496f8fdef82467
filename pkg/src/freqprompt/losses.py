"""Boundary-weighted BCE and IoU losses."""
from __future__ import annotations

import numpy as np
from scipy.ndimage import uniform_filter

from .errors import DimensionError, ParameterError

CLAMP = 1e-7
POOL_SIZE = 31
BOUNDARY_GAIN = 5.0
DEFAULT_LAMBDA = 1.0


def _pair(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise DimensionError(f"prediction {pred.shape} and ground truth {gt.shape} differ")
    return pred, gt


def weight_map(gt) -> np.ndarray:
    """``1 + 5 * |avgpool_31x31(gt) - gt|`` with zero padding (pad counted in the mean)."""
    gt = np.asarray(gt, dtype=np.float64)
    pooled = uniform_filter(gt, size=POOL_SIZE, mode="constant", cval=0.0)
    return 1.0 + BOUNDARY_GAIN * np.abs(pooled - gt)


def wbce(pred, gt, w=None) -> float:
    """Weighted binary cross-entropy, normalized by the total weight."""
    pred, gt = _pair(pred, gt)
    w = weight_map(gt) if w is None else np.asarray(w, dtype=np.float64)
    p = np.clip(pred, CLAMP, 1.0 - CLAMP)
    ce = -(gt * np.log(p) + (1.0 - gt) * np.log(1.0 - p))
    return float((w * ce).sum() / w.sum())


def wiou(pred, gt, w=None) -> float:
    """``1 - (sum w*p*g + 1) / (sum w*(p+g) - sum w*p*g + 1)``."""
    pred, gt = _pair(pred, gt)
    w = weight_map(gt) if w is None else np.asarray(w, dtype=np.float64)
    inter = (w * pred * gt).sum()
    union = (w * (pred + gt)).sum() - inter
    return float(1.0 - (inter + 1.0) / (union + 1.0))


def total_loss(pred, gt, lam: float = DEFAULT_LAMBDA) -> float:
    """``wbce + lam * wiou`` sharing one weight map."""
    if lam < 0:
        raise ParameterError(f"lambda must be non-negative, got {lam}")
    w = weight_map(gt)
    return wbce(pred, gt, w) + lam * wiou(pred, gt, w)
