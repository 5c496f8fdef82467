#!/usr/bin/env python3
"""Selective scan, the four-direction 2-D scan, and the full block.

Ends with a finite-difference gradient check of the hand-written
backward pass.
"""
import time

import numpy as np

from freqprompt import fvm

rng = np.random.default_rng(0)
p = fvm.SSMParams.init(4, 4, rng)
x = rng.normal(size=(32, 4))

y = fvm.selective_scan_1d(x, p)
x2 = x.copy()
x2[20] += 1.0
y2 = fvm.selective_scan_1d(x2, p)
print("changing step 20 leaves steps 0-19 alone:", np.array_equal(y[:20], y2[:20]))
print("backward scan == reversed forward scan:",
      np.array_equal(fvm.selective_scan_1d(x, p, "backward"), fvm.selective_scan_1d(x[::-1], p)[::-1]))

for L in (1024, 2048, 4096):
    seq = rng.normal(size=(L, 4))
    t0 = time.perf_counter()
    fvm.selective_scan_1d(seq, p)
    print(f"L={L}: {1e3 * (time.perf_counter() - t0):.1f} ms")

grid = rng.normal(size=(6, 6, 4))
print("SS2D output", fvm.ss2d(grid, p).shape)

out, summary = fvm.fvm_demo(seed=1, shape=(16, 16, 8))
print({k: round(v, 3) if isinstance(v, float) else v for k, v in summary.items()})

rep = fvm.grad_check(seed=0)
print(f"gradient check: passed={rep.passed}, worst group error {rep.max_error:.1e}")
worst = sorted(rep.errors.items(), key=lambda kv: -kv[1])[:3]
for name, err in worst:
    print(f"  {name}: {err:.1e}")
