#!/usr/bin/env python3
"""The frequency-guided adapter at toy scale.

Tokens inside the selected windows get an extra adapter branch; the
rest only see the spatial adapter.
"""
import numpy as np

from freqprompt import fga, fps, synthetic, wavelet

img, _ = synthetic.synthetic_scene(seed=2, size=128)
m = wavelet.frequency_map(img)
windows = fps.select_top_k(fps.window_scores(m, 8), k=6)

prior = fga.prior_mask_from_windows(windows, img.shape, patch=16, scale=2)
print("prior grid (1 = token touches a selected window):")
print(prior.reshape(8, 8).astype(int))

tokens, summary = fga.fga_demo(img, windows, patch=16, dim=32, heads=4, depth=2, seed=0)
print("tokens", tokens.shape)
for i, b in enumerate(summary["blocks"]):
    print(f"  block {i}: |freq| {b['frequency_branch_norm']:.4f}  |spatial| {b['spatial_branch_norm']:.4f}"
          f"  |x_hat| {b['residual_norm']:.4f}")

# Zero adapters leave the block output untouched
block = fga.BlockWeights.init(32, 4, seed=1)
x = fga.patch_tokens(img, 16, 32)
_, x_hat = fga.transformer_block_forward(x, block)
same = fga.adapter_inject(x_hat, fga.frequency_gate(x_hat, prior), fga.AdapterWeights.zeros(32))
print("zero adapter is identity:", np.array_equal(same, x_hat))
