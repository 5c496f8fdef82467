"""Prompt error analysis against ground truth."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoordinateError, DimensionError

WINDOW_IOU_THRESHOLD = 0.5


def _rate(num, den):
    return num / den if den else 0.0


@dataclass(frozen=True)
class ErrorReport:
    """Prompt error counts for one image or pooled over many.

    A window fails when the coarse mask's IoU with the ground truth inside
    it falls below the threshold.  A positive point is wrong on background;
    a negative point is wrong on foreground.
    """

    n_windows: int = 0
    n_failed_windows: int = 0
    n_positives: int = 0
    n_false_positives: int = 0
    n_negatives: int = 0
    n_false_negatives: int = 0
    n_images: int = 1
    n_images_failed: int = 0
    n_images_failing_window: int = 0
    n_images_wrong_point: int = 0

    @property
    def n_points(self):
        return self.n_positives + self.n_negatives

    @property
    def grid_error_rate(self):
        return _rate(self.n_failed_windows, self.n_windows)

    @property
    def point_error_rate(self):
        return _rate(self.n_false_positives + self.n_false_negatives, self.n_points)

    @property
    def positive_fp_rate(self):
        return _rate(self.n_false_positives, self.n_positives)

    @property
    def negative_fn_rate(self):
        return _rate(self.n_false_negatives, self.n_negatives)

    @property
    def images_with_any_failure(self):
        return _rate(self.n_images_failed, self.n_images)

    def to_dict(self) -> dict:
        return {
            "grid_error_rate": self.grid_error_rate,
            "point_error_rate": self.point_error_rate,
            "positive_fp_rate": self.positive_fp_rate,
            "negative_fn_rate": self.negative_fn_rate,
            "images_with_any_failure": self.images_with_any_failure,
            "images_with_failing_window": _rate(self.n_images_failing_window, self.n_images),
            "images_with_wrong_point": _rate(self.n_images_wrong_point, self.n_images),
            "counts": {
                "windows": self.n_windows,
                "failed_windows": self.n_failed_windows,
                "positives": self.n_positives,
                "false_positives": self.n_false_positives,
                "negatives": self.n_negatives,
                "false_negatives": self.n_false_negatives,
                "images": self.n_images,
            },
        }


def window_iou(coarse_bin, gt, r0, c0, size) -> float:
    b = np.asarray(coarse_bin)[r0:r0 + size, c0:c0 + size].astype(bool)
    g = np.asarray(gt)[r0:r0 + size, c0:c0 + size].astype(bool)
    union = np.count_nonzero(b | g)
    return 1.0 if union == 0 else np.count_nonzero(b & g) / union


def prompt_error_analysis(prompts, windows, coarse_bin, gt,
                          iou_threshold: float = WINDOW_IOU_THRESHOLD) -> ErrorReport:
    """Score one image's prompts; points and windows are mapped with ``prompts.scale``."""
    gt = np.asarray(gt)
    if np.shape(coarse_bin) != gt.shape:
        raise DimensionError(f"coarse mask {np.shape(coarse_bin)} and gt {gt.shape} differ")
    h, w = gt.shape
    s = prompts.scale
    failed = sum(
        window_iou(coarse_bin, gt, win.row * s, win.col * s, win.size * s) < iou_threshold
        for win in windows
    )
    pos = fp = neg = fn = 0
    for p in prompts.points:
        if not (0 <= p.row < h and 0 <= p.col < w):
            raise CoordinateError(f"point ({p.row}, {p.col}) outside {h}x{w} ground truth")
        on_fg = bool(gt[p.row, p.col])
        if p.positive:
            pos += 1
            fp += not on_fg
        else:
            neg += 1
            fn += on_fg
    wrong_point = fp + fn > 0
    return ErrorReport(
        n_windows=len(windows), n_failed_windows=int(failed),
        n_positives=pos, n_false_positives=fp, n_negatives=neg, n_false_negatives=fn,
        n_images=1, n_images_failed=int(failed > 0 or wrong_point),
        n_images_failing_window=int(failed > 0), n_images_wrong_point=int(wrong_point),
    )


def pool_reports(reports) -> ErrorReport:
    """Sum counts over images; rates become pooled (micro-averaged) rates."""
    reports = list(reports)
    fields = ErrorReport.__dataclass_fields__
    return ErrorReport(**{f: sum(getattr(r, f) for r in reports) for f in fields})
