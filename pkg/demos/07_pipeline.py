#!/usr/bin/env python3
"""Batch pipeline on a few generated images.

Writes PGM inputs to a temporary folder, runs the pipeline, and prints
the manifest summary.  The same run from the shell:

    freqprompt pipeline --image a.pgm b.pgm --coarse ca.pgm cb.pgm --gt ga.pgm gb.pgm \\
        --window-size 8 --noise gaussian --sigma 0.1 --out run
"""
import json
import tempfile
from pathlib import Path

from freqprompt import synthetic, tensor
from freqprompt.config import build_config
from freqprompt.pipeline import run_pipeline

tmp = Path(tempfile.mkdtemp(prefix="freqprompt_demo_"))
paths = {"images": [], "coarse": [], "gt": []}
for i in range(3):
    img, gt = synthetic.synthetic_scene(i, 128)
    for key, arr in (("images", img), ("coarse", synthetic.corrupted_coarse_mask(gt, i)), ("gt", gt * 1.0)):
        p = tmp / f"{key}_{i}.pgm"
        tensor.save_image(p, arr)
        paths[key].append(str(p))

cfg = build_config(overrides={**paths, "out": str(tmp / "run"), "window_size": 8,
                              "noise": "gaussian", "sigma": 0.1, "demo": True})
manifest, code = run_pipeline(cfg)
print("exit code", code, "| images", manifest["n_images"], "| failed", manifest["n_failed"])
for entry in manifest["images"]:
    print(" ", entry["name"], entry["status"], [a["path"].split("/")[-1] for a in entry["artifacts"]])
print((tmp / "run" / "metrics.csv").read_text())
print(json.dumps(json.loads((tmp / "run" / "error_summary.json").read_text()), indent=1))
