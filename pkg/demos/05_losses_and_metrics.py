#!/usr/bin/env python3
"""Boundary-weighted losses and the five evaluation metrics."""
import numpy as np

from freqprompt import losses, metrics, synthetic

_, gt = synthetic.synthetic_scene(seed=5, size=96)
coarse = synthetic.corrupted_coarse_mask(gt, seed=5)

w = losses.weight_map(gt)
print("weight map range %.2f-%.2f (boundary pixels weigh more)" % (w.min(), w.max()))

for lam in (0.5, 1.0, 2.0):
    print(f"lambda {lam}: total loss {losses.total_loss(coarse, gt, lam):.4f}")
print("wiou at a perfect prediction:", losses.wiou(gt, gt))

def show(name, pred):
    r = metrics.metric_suite(pred, gt)
    print(f"{name:>10}: " + "  ".join(f"{k} {v:.3f}" for k, v in r.as_dict().items()))

show("coarse", coarse)
show("perfect", gt.astype(float))
show("blurred", np.clip(coarse * 0.7 + 0.15, 0, 1))
show("inverted", 1.0 - gt)
