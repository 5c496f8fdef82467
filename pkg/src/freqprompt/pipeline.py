"""Batch pipeline: image -> M^h -> windows -> prompts -> (demo FGA/FVM) -> metrics.

Every output file is recorded with its SHA-256.  The manifest lists them in
input order with relative paths and no timestamps, so identical inputs,
config and seed give a byte-identical manifest.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import analysis, fga, fps, fvm, metrics, noise, tensor, wavelet
from .config import PipelineConfig
from .errors import ParameterError

log = logging.getLogger(__name__)

METRIC_COLUMNS = ("image", "miou", "s_alpha", "f_beta_w", "m_e_phi", "mae")
# stage ids for derived random streams
STAGE_NOISE, STAGE_DEMO = 1, 2
DEMO_PATCH = 16


def stage_seed(seed: int, stage: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, stage, index]).generate_state(1)[0])


def worker_count(n_items: int) -> int:
    raw = os.environ.get("HFP_THREADS", "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        n = 1
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, min(n, max(n_items, 1)))


class ArtifactWriter:
    """Writes files under ``root`` and remembers each one's hash."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.records = []

    def write(self, rel: str, data: bytes) -> str:
        path = self.root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        self.records.append({"path": rel, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        return rel

    def json(self, rel: str, obj) -> str:
        return self.write(rel, (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode())


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def image_names(paths) -> list:
    """Output folder names: the file stem, prefixed by position so duplicates stay apart."""
    return [f"{i:03d}_{Path(p).stem}" for i, p in enumerate(paths)]


def _load_mask(path, shape):
    m = tensor.load_image(path)
    if m.ndim == 3:
        m = tensor.to_gray(m)
    if m.shape != shape:
        m = tensor.resize_bilinear(m, *shape)
    return m


def process_image(cfg: PipelineConfig, index: int, name: str, root: Path):
    """Run every stage for one image.  Never raises; failures land in the entry."""
    out = ArtifactWriter(root)
    entry = {"index": index, "name": name, "image": str(cfg.images[index]), "status": "ok"}
    row, report = None, None
    try:
        img = tensor.load_image(cfg.images[index])
        gray = tensor.to_gray(img) if img.ndim == 3 else img
        h, w = gray.shape
        win = fps.window_for_resolution(min(h, w)) if cfg.auto_window else cfg.window_size
        entry.update(height=h, width=w, window_size=win)

        m = wavelet.frequency_map(gray, cfg.soft_threshold, magnitude=not cfg.signed)
        out.write(f"{name}/freqmap.hfpt", tensor.encode_tensor(m))
        if win > min(m.shape):
            raise ParameterError(f"window {win} exceeds the {m.shape[0]}x{m.shape[1]} frequency map")

        coarse = _load_mask(cfg.coarse[index], (h, w)) if cfg.coarse else None
        if coarse is not None:
            res = fps.select_prompts(m, coarse, win, cfg.stride, cfg.top_k, cfg.points_per_window,
                                     cfg.tau, cfg.gate)
            windows = res.windows
            out.write(f"{name}/prompts.json", res.to_json().encode())
        else:
            windows = fps.select_top_k(fps.window_scores(m, win, cfg.stride), cfg.top_k)
            res = None
            out.write(f"{name}/prompts.json",
                      fps.FPSResult(windows, fps.PromptSet(())).to_json().encode())

        if cfg.noise:
            noisy = noise.add_noise(img, cfg.noise, cfg.sigma,
                                    seed=stage_seed(cfg.seed, STAGE_NOISE, index))
            ext = "pgm" if noisy.ndim == 2 else "ppm"
            out.write(f"{name}/noisy_{cfg.noise}_{cfg.sigma:g}.{ext}", tensor.encode_pnm(noisy))

        if cfg.demo:
            dseed = stage_seed(cfg.seed, STAGE_DEMO, index)
            # edge-pad to whole patches; windows stay where they are
            padded = np.pad(gray, ((0, -h % DEMO_PATCH), (0, -w % DEMO_PATCH)), mode="edge")
            tokens, fga_summary = fga.fga_demo(padded, windows, scale=2, patch=DEMO_PATCH, seed=dseed)
            grid = tokens.reshape(padded.shape[0] // DEMO_PATCH, padded.shape[1] // DEMO_PATCH, -1)
            weights = fvm.FVMWeights.init(grid.shape[2], seed=dseed)
            fvm_out, _ = fvm.fvm_forward(grid, weights)
            out.write(f"{name}/fvm_out.hfpt", tensor.encode_tensor(fvm_out))
            out.json(f"{name}/demo.json", _jsonable({
                "fga": fga_summary,
                "fvm": {"grid": list(grid.shape), "output_norm": float(np.linalg.norm(fvm_out)),
                        "update_norm": float(np.linalg.norm(fvm_out - grid))},
            }))

        if cfg.gt:
            gt = _load_mask(cfg.gt[index], (h, w)) > 0.5
            if coarse is not None:
                rep = metrics.metric_suite(coarse, gt)
                row = {"image": name, **rep.as_dict()}
                report = analysis.prompt_error_analysis(res.prompts, res.windows,
                                                        fps.binarize(coarse, cfg.tau), gt)
                out.json(f"{name}/error_analysis.json", report.to_dict())
            else:
                entry["note"] = "ground truth given without a coarse mask; nothing to score"
    except Exception as exc:  # crash isolation: record and move on
        log.warning("image %s failed: %s", name, exc)
        entry["status"] = "error"
        entry["error"] = f"{type(exc).__name__}: {exc}"
    entry["artifacts"] = out.records
    return entry, row, report


def metrics_csv(rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(METRIC_COLUMNS)
    for r in rows:
        writer.writerow([r["image"]] + [f"{r[c]:.10f}" for c in METRIC_COLUMNS[1:]])
    if rows:
        writer.writerow(["mean"] + [f"{np.mean([r[c] for r in rows]):.10f}" for c in METRIC_COLUMNS[1:]])
    return buf.getvalue().encode()


def run_pipeline(cfg: PipelineConfig):
    """Process every image and write ``manifest.json``.

    Returns ``(manifest, exit_code)``; the exit code is 0 when every image
    succeeded and 1 otherwise.
    """
    cfg.validate()
    root = Path(cfg.out)
    root.mkdir(parents=True, exist_ok=True)
    names = image_names(cfg.images)
    n_workers = worker_count(len(names))
    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            results = list(pool.map(lambda i: process_image(cfg, i, names[i], root), range(len(names))))
    else:
        results = [process_image(cfg, i, names[i], root) for i in range(len(names))]

    batch = ArtifactWriter(root)
    rows = [r for _, r, _ in results if r is not None]
    reports = [rep for _, _, rep in results if rep is not None]
    if rows:
        batch.write("metrics.csv", metrics_csv(rows))
    if reports:
        batch.json("error_summary.json", analysis.pool_reports(reports).to_dict())

    entries = [e for e, _, _ in results]
    failed = sum(e["status"] != "ok" for e in entries)
    manifest = {
        "config": cfg.to_dict(),
        "images": entries,
        "batch_artifacts": batch.records,
        "n_images": len(entries),
        "n_failed": failed,
        "status": "ok" if failed == 0 else "partial_failure",
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest, 0 if failed == 0 else 1
