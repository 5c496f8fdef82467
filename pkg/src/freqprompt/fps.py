"""Frequency-aware point selection.

Windows are scored on the half-resolution frequency map, the top-k windows
are kept, and inside each window the ``t`` strongest and ``t`` weakest cells
become candidate points whose polarity comes from the binarized coarse mask.

Everything here is deterministic.  Window scores are exact means (the
correctly rounded sum divided by the window area), so results never depend
on summation order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CoordinateError, DimensionError, ParameterError

DEFAULT_WINDOW = 32
DEFAULT_TOP_K = 10
DEFAULT_POINTS_PER_EXTREMUM = 1
DEFAULT_TAU = 0.5
DEFAULT_GAMMA = 0.8

# image side -> window size (in frequency-map cells)
RESOLUTION_WINDOWS = {256: 16, 512: 32, 1024: 64}


@dataclass(frozen=True)
class Window:
    row: int
    col: int
    size: int
    score: float


@dataclass(frozen=True)
class WindowGrid:
    window_size: int
    stride: int
    rows: int
    cols: int
    scores: np.ndarray  # (rows, cols)

    def window(self, r: int, c: int) -> Window:
        return Window(r * self.stride, c * self.stride, self.window_size, float(self.scores[r, c]))


@dataclass(frozen=True)
class SelectedWindows:
    entries: tuple[Window, ...] = ()
    fallback_mask_only: bool = False

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclass(frozen=True)
class Point:
    row: int
    col: int
    positive: bool
    window: int  # index into the SelectedWindows entries


@dataclass(frozen=True)
class PromptSet:
    points: tuple[Point, ...] = ()
    scale: int = 2
    coordinate_space: str = "image"

    @property
    def positives(self):
        return [(p.row, p.col) for p in self.points if p.positive]

    @property
    def negatives(self):
        return [(p.row, p.col) for p in self.points if not p.positive]


@dataclass(frozen=True)
class FPSResult:
    windows: SelectedWindows
    prompts: PromptSet
    candidates: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return prompts_to_dict(self.windows, self.prompts)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def window_for_resolution(side: int) -> int:
    """Window size for an image whose shorter side is ``side`` pixels.

    16 at 256, 32 at 512, 64 at 1024; other sizes scale linearly (side / 16).
    """
    if side in RESOLUTION_WINDOWS:
        return RESOLUTION_WINDOWS[side]
    return max(1, int(round(side / 16)))


def window_scores(m, window_size: int, stride: int | None = None) -> WindowGrid:
    m = np.asarray(m, dtype=np.float64)
    stride = window_size if stride is None else stride
    if window_size < 1 or stride < 1:
        raise ParameterError("window_size and stride must be >= 1")
    h, w = m.shape
    if window_size > h or window_size > w:
        raise DimensionError(f"window {window_size} does not fit a {h}x{w} map")
    rows = (h - window_size) // stride + 1
    cols = (w - window_size) // stride + 1
    area = window_size * window_size
    scores = np.empty((rows, cols))
    for r in range(rows):
        r0 = r * stride
        band = m[r0:r0 + window_size]
        for c in range(cols):
            c0 = c * stride
            scores[r, c] = math.fsum(band[:, c0:c0 + window_size].ravel().tolist()) / area
    return WindowGrid(window_size, stride, rows, cols, scores)


def select_top_k(grid: WindowGrid, k: int) -> SelectedWindows:
    """Top-k windows by score; ties go to the smaller (row, col) corner."""
    if k < 1:
        raise ParameterError("k must be >= 1")
    flat = grid.scores.ravel()
    # lexsort: last key is primary; flat index order equals row-major corner order
    order = np.lexsort((np.arange(flat.size), -flat))[:k]
    entries = tuple(grid.window(*divmod(int(i), grid.cols)) for i in order)
    return SelectedWindows(entries)


def binarize(coarse, tau: float = DEFAULT_TAU) -> np.ndarray:
    if not 0.0 < tau < 1.0:
        raise ParameterError(f"tau must lie in (0, 1), got {tau}")
    return (np.asarray(coarse) > tau).astype(np.uint8)


def _extreme_cells(values: np.ndarray, t: int):
    """Flat indices of the t largest, then the t smallest of the remaining cells."""
    idx = np.arange(values.size)
    by_high = np.lexsort((idx, -values))
    high = by_high[:t]
    rest = np.setdiff1d(idx, high, assume_unique=True)
    low = rest[np.lexsort((rest, values[rest]))][:t]
    return list(high) + list(low)


def sample_points(m, windows: SelectedWindows, t: int = DEFAULT_POINTS_PER_EXTREMUM):
    """Candidate cells per window in frequency-map coordinates.

    Returns one list of ``(row, col)`` per window: the ``t`` highest cells in
    descending order followed by the ``t`` lowest in ascending order.  Ties
    resolve in row-major order, and no cell is picked twice.
    """
    m = np.asarray(m, dtype=np.float64)
    if t < 1:
        raise ParameterError("t must be >= 1")
    out = []
    for win in windows:
        if 2 * t > win.size * win.size:
            raise ParameterError(f"2t = {2 * t} exceeds window area {win.size ** 2}")
        patch = m[win.row:win.row + win.size, win.col:win.col + win.size]
        if patch.shape != (win.size, win.size):
            raise CoordinateError(f"window {win} lies outside the {m.shape} map")
        cells = _extreme_cells(patch.ravel(), t)
        out.append([(win.row + int(i) // win.size, win.col + int(i) % win.size) for i in cells])
    return out


def assign_polarity(candidates, mb, scale: int = 2) -> PromptSet:
    """Label each candidate by the binary mask at ``scale`` times its coordinate.

    Emitted coordinates are the scaled ones, i.e. in the mask's (image) space.
    """
    mb = np.asarray(mb)
    h, w = mb.shape[:2]
    points = []
    for wi, cands in enumerate(candidates):
        for r, c in cands:
            rr, cc = r * scale, c * scale
            if not (0 <= rr < h and 0 <= cc < w):
                raise CoordinateError(f"point ({rr}, {cc}) outside {h}x{w} mask")
            points.append(Point(rr, cc, bool(mb[rr, cc] == 1), wi))
    return PromptSet(tuple(points), scale=scale)


def window_confidence(win: Window, coarse, scale: int = 2) -> float:
    """Mean of ``max(p, 1 - p)`` over the window's pixels in the coarse mask."""
    coarse = np.asarray(coarse, dtype=np.float64)
    r0, c0, s = win.row * scale, win.col * scale, win.size * scale
    region = coarse[r0:r0 + s, c0:c0 + s]
    if region.size == 0:
        raise CoordinateError(f"window {win} lies outside the {coarse.shape} mask")
    return float(np.maximum(region, 1.0 - region).mean())


def gate_windows(windows: SelectedWindows, coarse, gamma: float = DEFAULT_GAMMA,
                 scale: int = 2, min_windows: int = 1) -> SelectedWindows:
    """Drop windows whose coarse-mask confidence is below ``gamma``.

    If fewer than ``min_windows`` survive, the result is empty and flagged
    ``fallback_mask_only``: prompting then relies on the coarse mask alone.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ParameterError(f"gamma must lie in [0, 1], got {gamma}")
    kept = tuple(w for w in windows if window_confidence(w, coarse, scale) >= gamma)
    if len(kept) < min_windows:
        return SelectedWindows((), fallback_mask_only=True)
    return SelectedWindows(kept)


def select_prompts(m, coarse, window_size: int = DEFAULT_WINDOW, stride: int | None = None,
                   k: int = DEFAULT_TOP_K, t: int = DEFAULT_POINTS_PER_EXTREMUM,
                   tau: float = DEFAULT_TAU, gamma: float | None = None,
                   scale: int = 2, min_windows: int = 1) -> FPSResult:
    """Full point selection: score, top-k, optional gating, sample, label.

    ``m`` is the frequency map; ``coarse`` the probability mask at ``scale``
    times the map's resolution.  ``gamma=None`` disables gating.
    """
    windows = select_top_k(window_scores(m, window_size, stride), k)
    if gamma is not None:
        windows = gate_windows(windows, coarse, gamma, scale, min_windows)
    candidates = sample_points(m, windows, t)
    prompts = assign_polarity(candidates, binarize(coarse, tau), scale)
    return FPSResult(windows, prompts, candidates)


def prompts_to_dict(windows: SelectedWindows, prompts: PromptSet) -> dict:
    """JSON-ready record; window corners and sizes are scaled into image space."""
    s = prompts.scale
    return {
        "windows": [
            {"row": w.row * s, "col": w.col * s, "size": w.size * s, "score": w.score}
            for w in windows
        ],
        "points": [
            {"row": p.row, "col": p.col, "polarity": "positive" if p.positive else "negative"}
            for p in prompts.points
        ],
        "fallback_mask_only": windows.fallback_mask_only,
    }
