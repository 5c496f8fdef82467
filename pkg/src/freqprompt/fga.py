"""Frequency guided adapter at toy scale.

A small pre-norm transformer block produces ``x_bar`` and ``x_hat``; the
selected frequency windows are rasterized into a per-token prior; and two
bottleneck adapters (spatial on ``x_hat``, frequency on the gated copy) are
added back onto ``x_hat``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoordinateError, DimensionError
from .tensor import block_pool

LN_EPS = 1e-5
INIT_RANGE = 0.02
DEFAULT_REDUCTION = 4


def gelu(x):
    """tanh approximation of GELU."""
    return 0.5 * x * (1.0 + np.tanh(np.sqrt(2.0 / np.pi) * (x + 0.044715 * x ** 3)))


def layer_norm(x, gain, bias, eps=LN_EPS):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps) * gain + bias


def softmax(z, axis=-1):
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass
class BlockWeights:
    ln1_gain: np.ndarray
    ln1_bias: np.ndarray
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray
    ln2_gain: np.ndarray
    ln2_bias: np.ndarray
    w_mlp1: np.ndarray
    b_mlp1: np.ndarray
    w_mlp2: np.ndarray
    b_mlp2: np.ndarray
    heads: int

    @property
    def dim(self):
        return self.w_q.shape[0]

    @classmethod
    def init(cls, dim: int, heads: int, seed: int = 0, mlp_ratio: int = 4):
        if dim % heads:
            raise DimensionError(f"{heads} heads do not divide dim {dim}")
        rng = np.random.default_rng(seed)
        u = lambda *shape: rng.uniform(-INIT_RANGE, INIT_RANGE, size=shape)
        hidden = mlp_ratio * dim
        return cls(
            ln1_gain=np.ones(dim), ln1_bias=np.zeros(dim),
            w_q=u(dim, dim), w_k=u(dim, dim), w_v=u(dim, dim), w_o=u(dim, dim),
            ln2_gain=np.ones(dim), ln2_bias=np.zeros(dim),
            w_mlp1=u(dim, hidden), b_mlp1=np.zeros(hidden),
            w_mlp2=u(hidden, dim), b_mlp2=np.zeros(dim),
            heads=heads,
        )


@dataclass
class AdapterWeights:
    w_down_s: np.ndarray  # (D, r)
    w_up_s: np.ndarray    # (r, D)
    w_down_f: np.ndarray
    w_up_f: np.ndarray

    @classmethod
    def init(cls, dim: int, reduction: int = DEFAULT_REDUCTION, seed: int = 0):
        """``reduction`` divides the embedding width to give the bottleneck width."""
        if dim % reduction:
            raise DimensionError(f"reduction {reduction} does not divide dim {dim}")
        r = dim // reduction
        rng = np.random.default_rng(seed)
        u = lambda *shape: rng.uniform(-INIT_RANGE, INIT_RANGE, size=shape)
        return cls(u(dim, r), u(r, dim), u(dim, r), u(r, dim))

    @classmethod
    def zeros(cls, dim: int, reduction: int = DEFAULT_REDUCTION):
        r = dim // reduction
        return cls(np.zeros((dim, r)), np.zeros((r, dim)), np.zeros((dim, r)), np.zeros((r, dim)))


def multi_head_attention(x, w: BlockWeights):
    n, d = x.shape
    dh = d // w.heads
    split = lambda m: m.reshape(n, w.heads, dh).transpose(1, 0, 2)  # (h, n, dh)
    q, k, v = split(x @ w.w_q), split(x @ w.w_k), split(x @ w.w_v)
    att = softmax(q @ k.transpose(0, 2, 1) / np.sqrt(dh))
    out = (att @ v).transpose(1, 0, 2).reshape(n, d)
    return out @ w.w_o


def transformer_block_forward(x, w: BlockWeights, mlp_residual: bool = False):
    """Returns ``(x_bar, x_hat)``.

    ``x_bar = MHSA(LN(x)) + x`` and ``x_hat = MLP(LN(x_bar))``; the MLP has no
    residual unless ``mlp_residual`` is set (the usual ViT form).
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != w.dim:
        raise DimensionError(f"tokens {x.shape} do not match block width {w.dim}")
    x_bar = multi_head_attention(layer_norm(x, w.ln1_gain, w.ln1_bias), w) + x
    h = layer_norm(x_bar, w.ln2_gain, w.ln2_bias)
    x_hat = gelu(h @ w.w_mlp1 + w.b_mlp1) @ w.w_mlp2 + w.b_mlp2
    if mlp_residual:
        x_hat = x_hat + x_bar
    return x_bar, x_hat


def prior_mask_from_windows(windows, image_shape, patch: int, scale: int = 1) -> np.ndarray:
    """Per-token bits: 1 where the token's patch overlaps a selected window.

    Window corners and sizes are multiplied by ``scale`` to reach image pixels
    (use 2 for windows selected on the half-resolution frequency map).
    """
    h, w = image_shape[:2]
    canvas = np.zeros((h, w))
    for win in windows:
        r0, c0, s = win.row * scale, win.col * scale, win.size * scale
        if r0 < 0 or c0 < 0 or r0 + s > h or c0 + s > w:
            raise CoordinateError(f"window ({r0}, {c0}, {s}) outside {h}x{w} image")
        canvas[r0:r0 + s, c0:c0 + s] = 1.0
    return block_pool(canvas, patch, mode="max").ravel()


def frequency_gate(x_hat, prior) -> np.ndarray:
    x_hat = np.asarray(x_hat, dtype=np.float64)
    prior = np.asarray(prior, dtype=np.float64).ravel()
    if prior.shape[0] != x_hat.shape[0]:
        raise DimensionError(f"prior length {prior.shape[0]} != token count {x_hat.shape[0]}")
    return x_hat * prior[:, None]


def adapter_branches(x_hat, x_hat_f, w: AdapterWeights, activation=gelu):
    """``(frequency_branch, spatial_branch)`` contributions."""
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x_hat_f = np.asarray(x_hat_f, dtype=np.float64)
    if x_hat.shape != x_hat_f.shape:
        raise DimensionError(f"x_hat {x_hat.shape} and gated copy {x_hat_f.shape} differ")
    if x_hat.shape[1] != w.w_down_s.shape[0]:
        raise DimensionError(f"token width {x_hat.shape[1]} != adapter width {w.w_down_s.shape[0]}")
    freq = activation(x_hat_f @ w.w_down_f) @ w.w_up_f
    spatial = activation(x_hat @ w.w_down_s) @ w.w_up_s
    return freq, spatial


def adapter_inject(x_hat, x_hat_f, w: AdapterWeights, activation=gelu) -> np.ndarray:
    """Next-block tokens: frequency adapter + spatial adapter + ``x_hat``."""
    freq, spatial = adapter_branches(x_hat, x_hat_f, w, activation)
    return freq + spatial + np.asarray(x_hat, dtype=np.float64)


def fga_layer(x, block: BlockWeights, adapter: AdapterWeights, prior, mlp_residual=False):
    """One transformer block followed by frequency-guided injection."""
    _, x_hat = transformer_block_forward(x, block, mlp_residual)
    return adapter_inject(x_hat, frequency_gate(x_hat, prior), adapter)


def patch_tokens(img, patch: int, dim: int, seed: int = 0) -> np.ndarray:
    """Flatten non-overlapping patches and project them to ``dim`` with a seeded map."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    h, w, c = img.shape
    if h % patch or w % patch:
        raise DimensionError(f"patch {patch} does not divide {h}x{w}")
    cols = (img.reshape(h // patch, patch, w // patch, patch, c)
               .transpose(0, 2, 1, 3, 4)
               .reshape((h // patch) * (w // patch), patch * patch * c))
    proj = np.random.default_rng(seed).normal(0.0, 1.0 / np.sqrt(cols.shape[1]), (cols.shape[1], dim))
    return cols @ proj


def fga_demo(img, windows, scale: int = 2, patch: int = 16, dim: int = 32, heads: int = 4,
             depth: int = 2, seed: int = 0, mlp_residual: bool = False):
    """Seeded forward pass through a toy stack with the adapter on every block.

    Returns ``(tokens, summary)`` where ``summary`` records per-block norms of
    the frequency branch, the spatial branch, and the residual ``x_hat``.
    """
    prior = prior_mask_from_windows(windows, np.shape(img), patch, scale)
    x = patch_tokens(img, patch, dim, seed)
    ss = np.random.SeedSequence(seed).spawn(2 * depth)
    blocks = []
    for i in range(depth):
        block = BlockWeights.init(dim, heads, seed=ss[2 * i])
        adapter = AdapterWeights.init(dim, seed=ss[2 * i + 1])
        _, x_hat = transformer_block_forward(x, block, mlp_residual)
        freq, spatial = adapter_branches(x_hat, frequency_gate(x_hat, prior), adapter)
        x = freq + spatial + x_hat
        blocks.append({
            "frequency_branch_norm": float(np.linalg.norm(freq)),
            "spatial_branch_norm": float(np.linalg.norm(spatial)),
            "residual_norm": float(np.linalg.norm(x_hat)),
        })
    summary = {
        "tokens": int(x.shape[0]),
        "dim": dim,
        "prior_tokens_on": int(prior.sum()),
        "blocks": blocks,
        "output_norm": float(np.linalg.norm(x)),
    }
    return x, summary
