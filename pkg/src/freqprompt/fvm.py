"""Full-view state-space decoder block with a hand-written backward pass.

Forward, for a feature grid ``D`` of shape ``(H, W, C)``::

    D_s = LN(SS2D(SiLU(DWConv3x3(D @ W_in + b_in))))            spatial branch
    F_c = GAP(D @ W_ch + b_ch)                      length-C sequence of scalars
    D_c = LN_f(scan_fwd(F_c)) + LN_b(scan_bwd(F_c))             channel branch
    out = (D_s * D_c) @ W_out + b_out + D

The selective scan is the diagonal input-dependent recurrence::

    delta_k = softplus(x_k @ W_delta + b_delta)           (C,)
    A       = -exp(a_log)                                 (C, N)
    h_k     = exp(delta_k A) * h_{k-1} + delta_k (x_k @ W_B) x_k
    y_k     = h_k @ (x_k @ W_C) + d * x_k

All arrays are float64.  :func:`fvm_backward` returns exact reverse-mode
gradients, checked against central differences by :func:`grad_check`.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.special import expit

from .errors import DimensionError, NumericError, ParameterError, StateError

LN_EPS = 1e-5
DEFAULT_STATE_DIM = 4


def softplus(z):
    return np.logaddexp(0.0, z)


def silu(x):
    return x * expit(x)


@dataclass
class SSMParams:
    delta_w: np.ndarray  # (C, C)
    delta_b: np.ndarray  # (C,)
    a_log: np.ndarray    # (C, N); decay A = -exp(a_log) < 0
    b_w: np.ndarray      # (C, N)
    c_w: np.ndarray      # (C, N)
    d_skip: np.ndarray   # (C,)

    @property
    def channels(self):
        return self.delta_w.shape[0]

    @property
    def state_dim(self):
        return self.a_log.shape[1]

    @classmethod
    def init(cls, channels, state_dim=DEFAULT_STATE_DIM, rng=None):
        rng = np.random.default_rng(rng)
        scale = 0.5 / np.sqrt(channels)
        return cls(
            delta_w=rng.normal(0.0, scale, (channels, channels)),
            delta_b=rng.uniform(-1.0, 0.5, channels),
            a_log=np.log(np.tile(np.arange(1, state_dim + 1, dtype=float), (channels, 1)))
            + rng.normal(0.0, 0.1, (channels, state_dim)),
            b_w=rng.normal(0.0, 0.5, (channels, state_dim)),
            c_w=rng.normal(0.0, 0.5, (channels, state_dim)),
            d_skip=1.0 + rng.normal(0.0, 0.1, channels),
        )

    @classmethod
    def skip_only(cls, channels, state_dim=DEFAULT_STATE_DIM, d=1.0):
        """Parameters whose scan returns ``d * x`` (no state contribution)."""
        return cls(
            delta_w=np.zeros((channels, channels)), delta_b=np.zeros(channels),
            a_log=np.zeros((channels, state_dim)), b_w=np.zeros((channels, state_dim)),
            c_w=np.zeros((channels, state_dim)), d_skip=np.full(channels, float(d)),
        )


@dataclass
class FVMWeights:
    w_in: np.ndarray
    b_in: np.ndarray
    dw_kernel: np.ndarray  # (3, 3, C)
    dw_bias: np.ndarray
    spatial_ssm: SSMParams
    ln_s_gain: np.ndarray
    ln_s_bias: np.ndarray
    w_ch: np.ndarray
    b_ch: np.ndarray
    ch_fwd_ssm: SSMParams  # channels = 1: sequence elements are scalars
    ch_bwd_ssm: SSMParams
    ln_f_gain: np.ndarray
    ln_f_bias: np.ndarray
    ln_b_gain: np.ndarray
    ln_b_bias: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray

    @property
    def channels(self):
        return self.w_in.shape[0]

    @classmethod
    def init(cls, channels, state_dim=DEFAULT_STATE_DIM, seed=0):
        rng = np.random.default_rng(seed)
        c = channels
        lin = lambda: rng.normal(0.0, 1.0 / np.sqrt(c), (c, c))
        small = lambda *s: rng.normal(0.0, 0.1, s)
        return cls(
            w_in=lin(), b_in=small(c),
            dw_kernel=rng.normal(0.0, 0.3, (3, 3, c)), dw_bias=small(c),
            spatial_ssm=SSMParams.init(c, state_dim, rng),
            ln_s_gain=1.0 + small(c), ln_s_bias=small(c),
            w_ch=lin(), b_ch=small(c),
            ch_fwd_ssm=SSMParams.init(1, state_dim, rng),
            ch_bwd_ssm=SSMParams.init(1, state_dim, rng),
            ln_f_gain=1.0 + small(c), ln_f_bias=small(c),
            ln_b_gain=1.0 + small(c), ln_b_bias=small(c),
            w_out=lin(), b_out=small(c),
        )

    def named_arrays(self):
        """``(name, array)`` pairs over every parameter, nested SSMs flattened."""
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, SSMParams):
                for g in fields(value):
                    yield f"{f.name}.{g.name}", getattr(value, g.name)
            else:
                yield f.name, value

    def zeros_like(self):
        def zero(obj):
            kw = {}
            for f in fields(obj):
                v = getattr(obj, f.name)
                kw[f.name] = zero(v) if isinstance(v, SSMParams) else np.zeros_like(v)
            return replace(obj, **kw)
        return zero(self)

    def fingerprint(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        for name, arr in self.named_arrays():
            h.update(name.encode())
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


# --- selective scan ---------------------------------------------------------------

def _check_finite(x):
    if not np.all(np.isfinite(x)):
        raise NumericError("non-finite value in scan input")


def _scan_forward(x, p: SSMParams):
    """Forward scan over axis 1 of a ``(B, L, C)`` batch; returns (y, cache)."""
    z = x @ p.delta_w + p.delta_b
    delta = softplus(z)
    bk = x @ p.b_w
    ck = x @ p.c_w
    a = -np.exp(p.a_log)
    abar = np.exp(delta[..., None] * a)
    u = delta[..., None] * bk[:, :, None, :] * x[..., None]
    hs = np.empty_like(u)
    h = np.zeros_like(u[:, 0])
    for k in range(x.shape[1]):
        h = abar[:, k] * h + u[:, k]
        hs[:, k] = h
    y = np.einsum("blcn,bln->blc", hs, ck) + p.d_skip * x
    return y, (x, z, delta, bk, ck, a, abar, hs)


def _scan_backward(p: SSMParams, cache, gy):
    """Reverse-mode pass of :func:`_scan_forward`; returns (gx, SSMParams of grads)."""
    x, z, delta, bk, ck, a, abar, hs = cache
    g_ck = np.einsum("blcn,blc->bln", hs, gy)
    g_h_direct = gy[..., None] * ck[:, :, None, :]
    g_d = (gy * x).sum(axis=(0, 1))
    gx = gy * p.d_skip

    gu = np.empty_like(hs)
    g_abar = np.zeros_like(hs)
    carry = np.zeros_like(hs[:, 0])
    for k in range(x.shape[1] - 1, -1, -1):
        carry = carry + g_h_direct[:, k]
        gu[:, k] = carry
        if k > 0:
            g_abar[:, k] = carry * hs[:, k - 1]
        carry = carry * abar[:, k]

    t = g_abar * abar  # d/d(delta * A) of exp(delta * A)
    g_delta = (gu * bk[:, :, None, :] * x[..., None]).sum(-1) + (t * a).sum(-1)
    g_bk = (gu * (delta * x)[..., None]).sum(2)
    gx = gx + (gu * bk[:, :, None, :]).sum(-1) * delta
    g_a = (t * delta[..., None]).sum(axis=(0, 1))
    gz = g_delta * expit(z)

    grads = SSMParams(
        delta_w=np.einsum("blc,bld->cd", x, gz),
        delta_b=gz.sum(axis=(0, 1)),
        a_log=g_a * a,
        b_w=np.einsum("blc,bln->cn", x, g_bk),
        c_w=np.einsum("blc,bln->cn", x, g_ck),
        d_skip=g_d,
    )
    gx = gx + gz @ p.delta_w.T + g_bk @ p.b_w.T + g_ck @ p.c_w.T
    return gx, grads


def selective_scan_1d(x, p: SSMParams, direction: str = "forward") -> np.ndarray:
    """Scan an ``(L, C)`` sequence; ``backward`` scans the reversed sequence
    and reverses the result."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DimensionError(f"expected (L, C) sequence with L >= 1, got {x.shape}")
    if x.shape[1] != p.channels:
        raise DimensionError(f"sequence width {x.shape[1]} != SSM channels {p.channels}")
    _check_finite(x)
    if direction == "forward":
        return _scan_forward(x[None], p)[0][0]
    if direction == "backward":
        return _scan_forward(x[::-1][None], p)[0][0][::-1]
    raise ParameterError(f"unknown scan direction {direction!r}")


# --- 2-D scanning ------------------------------------------------------------------

def _ss2d_sequences(f):
    h, w, c = f.shape
    rm = f.reshape(h * w, c)
    cm = f.transpose(1, 0, 2).reshape(h * w, c)
    return np.stack([rm, rm[::-1], cm, cm[::-1]])


def _ss2d_merge(ys, shape, merge):
    h, w, c = shape
    rm = ys[0] + ys[1][::-1]
    cm = ys[2] + ys[3][::-1]
    out = rm.reshape(h, w, c) + cm.reshape(w, h, c).transpose(1, 0, 2)
    return out / 4.0 if merge == "mean" else out


def _ss2d_forward(f, p, merge):
    ys, cache = _scan_forward(_ss2d_sequences(f), p)
    return _ss2d_merge(ys, f.shape, merge), cache


def _ss2d_backward(p, cache, g, merge):
    if merge == "mean":
        g = g / 4.0
    gxs, grads = _scan_backward(p, cache, _ss2d_sequences(g))
    # the sequence split is linear, so its adjoint is the merge
    return _ss2d_merge(gxs, g.shape, "sum"), grads


def ss2d(f, p: SSMParams, merge: str = "mean") -> np.ndarray:
    """Four-direction scan (row-major and column-major, each both ways)."""
    f = np.asarray(f, dtype=np.float64)
    if f.ndim != 3 or f.shape[2] != p.channels:
        raise DimensionError(f"grid {f.shape} does not match SSM channels {p.channels}")
    if merge not in ("mean", "sum"):
        raise ParameterError(f"unknown merge {merge!r}")
    _check_finite(f)
    return _ss2d_forward(f, p, merge)[0]


# --- building blocks ---------------------------------------------------------------

def _ln_forward(x, gain, bias):
    mu = x.mean(axis=-1, keepdims=True)
    sigma = np.sqrt(x.var(axis=-1, keepdims=True) + LN_EPS)
    xhat = (x - mu) / sigma
    return xhat * gain + bias, (xhat, sigma)


def _ln_backward(gain, cache, gy):
    xhat, sigma = cache
    axes = tuple(range(gy.ndim - 1))
    g_gain = (gy * xhat).sum(axis=axes)
    g_bias = gy.sum(axis=axes)
    gxhat = gy * gain
    gx = (gxhat - gxhat.mean(-1, keepdims=True)
          - xhat * (gxhat * xhat).mean(-1, keepdims=True)) / sigma
    return gx, g_gain, g_bias


def _dwconv_forward(x, kernel, bias):
    h, w, _ = x.shape
    xp = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    out = np.broadcast_to(bias, x.shape).copy()
    for u in range(3):
        for v in range(3):
            out += kernel[u, v] * xp[u:u + h, v:v + w]
    return out, xp


def _dwconv_backward(kernel, xp, g):
    h, w, _ = g.shape
    gk = np.empty_like(kernel)
    gxp = np.zeros_like(xp)
    for u in range(3):
        for v in range(3):
            gk[u, v] = (g * xp[u:u + h, v:v + w]).sum(axis=(0, 1))
            gxp[u:u + h, v:v + w] += g * kernel[u, v]
    return gxp[1:-1, 1:-1], gk, g.sum(axis=(0, 1))


def depthwise_conv3x3(x, kernel, bias):
    """Per-channel 3x3 correlation with zero padding."""
    return _dwconv_forward(np.asarray(x, dtype=np.float64), kernel, bias)[0]


def _spatial_forward(d, w: FVMWeights, merge):
    x1 = d @ w.w_in + w.b_in
    x2, xp = _dwconv_forward(x1, w.dw_kernel, w.dw_bias)
    x3 = silu(x2)
    x4, scan_cache = _ss2d_forward(x3, w.spatial_ssm, merge)
    ds, ln_cache = _ln_forward(x4, w.ln_s_gain, w.ln_s_bias)
    return ds, (x2, xp, scan_cache, ln_cache)


def _channel_forward(d, w: FVMWeights):
    y1 = d @ w.w_ch + w.b_ch
    fc = y1.mean(axis=(0, 1))[None, :, None]  # (1, C, 1)
    yf, cache_f = _scan_forward(fc, w.ch_fwd_ssm)
    yb_rev, cache_b = _scan_forward(fc[:, ::-1], w.ch_bwd_ssm)
    lf, ln_f = _ln_forward(yf[0, :, 0], w.ln_f_gain, w.ln_f_bias)
    lb, ln_b = _ln_forward(yb_rev[0, ::-1, 0], w.ln_b_gain, w.ln_b_bias)
    return lf + lb, (cache_f, cache_b, ln_f, ln_b)


def spatial_branch(d, w: FVMWeights, merge: str = "mean") -> np.ndarray:
    d = _check_grid(d, w)
    return _spatial_forward(d, w, merge)[0]


def channel_branch(d, w: FVMWeights) -> np.ndarray:
    d = _check_grid(d, w)
    return _channel_forward(d, w)[0]


def _check_grid(d, w):
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 3 or d.shape[2] != w.channels:
        raise DimensionError(f"feature grid {d.shape} does not match {w.channels} channels")
    _check_finite(d)
    return d


# --- full block ---------------------------------------------------------------------

@dataclass
class FVMTape:
    """Intermediates of one forward call, consumed by :func:`fvm_backward`."""

    d: np.ndarray
    weights: FVMWeights
    fingerprint: str
    merge: str
    ds: np.ndarray
    dc: np.ndarray
    dstar: np.ndarray
    spatial_cache: tuple
    channel_cache: tuple


def fvm_forward(d, w: FVMWeights, merge: str = "mean"):
    """Returns ``(out, tape)``."""
    d = _check_grid(d, w)
    if merge not in ("mean", "sum"):
        raise ParameterError(f"unknown merge {merge!r}")
    ds, s_cache = _spatial_forward(d, w, merge)
    dc, c_cache = _channel_forward(d, w)
    dstar = ds * dc
    out = dstar @ w.w_out + w.b_out + d
    return out, FVMTape(d, w, w.fingerprint(), merge, ds, dc, dstar, s_cache, c_cache)


def fvm_backward(tape: FVMTape, grad_out):
    """Gradients of ``sum(grad_out * out)`` w.r.t. the input and every weight.

    Returns ``(grad_input, grad_weights)``; ``grad_weights`` is an
    :class:`FVMWeights` holding gradients.  Raises :class:`StateError` if the
    weights changed since the forward call or ``grad_out`` has the wrong shape.
    """
    w = tape.weights
    g = np.asarray(grad_out, dtype=np.float64)
    if g.shape != tape.d.shape:
        raise StateError(f"grad_out shape {g.shape} does not match tape {tape.d.shape}")
    if w.fingerprint() != tape.fingerprint:
        raise StateError("weights were modified after the forward pass; tape is stale")
    c = w.channels
    grads = w.zeros_like()

    # out = dstar @ W_out + b_out + d
    gd = g.copy()
    grads.w_out = tape.dstar.reshape(-1, c).T @ g.reshape(-1, c)
    grads.b_out = g.sum(axis=(0, 1))
    g_dstar = g @ w.w_out.T
    g_ds = g_dstar * tape.dc
    g_dc = (g_dstar * tape.ds).sum(axis=(0, 1))

    # channel branch
    cache_f, cache_b, ln_f, ln_b = tape.channel_cache
    g_yf, grads.ln_f_gain, grads.ln_f_bias = _ln_backward(w.ln_f_gain, ln_f, g_dc)
    g_yb, grads.ln_b_gain, grads.ln_b_bias = _ln_backward(w.ln_b_gain, ln_b, g_dc)
    g_fc_f, grads.ch_fwd_ssm = _scan_backward(w.ch_fwd_ssm, cache_f, g_yf[None, :, None])
    g_fc_b, grads.ch_bwd_ssm = _scan_backward(w.ch_bwd_ssm, cache_b, g_yb[::-1][None, :, None])
    g_fc = g_fc_f[0, :, 0] + g_fc_b[0, ::-1, 0]
    h, wd, _ = tape.d.shape
    g_y1 = np.broadcast_to(g_fc / (h * wd), tape.d.shape)
    grads.w_ch = tape.d.reshape(-1, c).T @ g_y1.reshape(-1, c)
    grads.b_ch = g_y1.sum(axis=(0, 1))
    gd += g_y1 @ w.w_ch.T

    # spatial branch
    x2, xp, scan_cache, ln_cache = tape.spatial_cache
    g_x4, grads.ln_s_gain, grads.ln_s_bias = _ln_backward(w.ln_s_gain, ln_cache, g_ds)
    g_x3, grads.spatial_ssm = _ss2d_backward(w.spatial_ssm, scan_cache, g_x4, tape.merge)
    s = expit(x2)
    g_x2 = g_x3 * s * (1.0 + x2 * (1.0 - s))
    g_x1, grads.dw_kernel, grads.dw_bias = _dwconv_backward(w.dw_kernel, xp, g_x2)
    grads.w_in = tape.d.reshape(-1, c).T @ g_x1.reshape(-1, c)
    grads.b_in = g_x1.sum(axis=(0, 1))
    gd += g_x1 @ w.w_in.T
    return gd, grads


# --- gradient verification ------------------------------------------------------------

@dataclass
class GradCheckReport:
    errors: dict  # group name -> max relative error
    tolerance: float
    step: float

    @property
    def passed(self) -> bool:
        return self.tolerance > 0 and all(e <= self.tolerance for e in self.errors.values())

    @property
    def max_error(self) -> float:
        return max(self.errors.values())

    def failures(self):
        return [k for k, e in self.errors.items() if not e <= self.tolerance]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "tolerance": self.tolerance,
            "step": self.step,
            "max_error": self.max_error,
            "groups": dict(self.errors),
        }


def _relative_error(analytic, numeric):
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-30)
    return float(np.abs(analytic - numeric).max() / scale)


def grad_check(seed: int = 0, tolerance: float = 1e-6, shape=(8, 8, 4), step: float = 1e-5,
               state_dim: int = DEFAULT_STATE_DIM, weights: FVMWeights | None = None,
               merge: str = "mean") -> GradCheckReport:
    """Compare :func:`fvm_backward` with central differences on a seeded fixture.

    The scalar objective is ``sum(R * out)`` for a seeded random ``R``, summed
    with ``math.fsum``.  The input gets a per-channel offset so the channel
    branch sees O(1) pooled values.  Each parameter array (and the input) is
    one group; the reported error is
    ``max|analytic - numeric| / max(|analytic|, |numeric|)`` over the group.
    """
    rng = np.random.default_rng(seed)
    c = shape[2]
    d = rng.normal(0.0, 1.0, shape) + rng.uniform(-1.5, 1.5, c)
    r = rng.normal(0.0, 1.0, shape)
    if weights is None:
        weights = FVMWeights.init(c, state_dim, seed=rng.integers(2 ** 32))

    objective = lambda: math.fsum((fvm_forward(d, weights, merge)[0] * r).ravel().tolist())
    _, tape = fvm_forward(d, weights, merge)
    g_input, g_weights = fvm_backward(tape, r)

    def numeric(arr):
        out = np.empty_like(arr)
        flat, g = arr.reshape(-1), out.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            f_plus = objective()
            flat[i] = orig - step
            f_minus = objective()
            flat[i] = orig
            g[i] = (f_plus - f_minus) / (2 * step)
        return out

    errors = {}
    analytic = dict(g_weights.named_arrays())
    for name, arr in weights.named_arrays():
        errors[name] = _relative_error(analytic[name], numeric(arr))
    errors["input"] = _relative_error(g_input, numeric(d))
    return GradCheckReport(errors, tolerance, step)


def fvm_demo(seed: int = 0, shape=(16, 16, 8), state_dim: int = DEFAULT_STATE_DIM):
    """Seeded forward pass; returns ``(out, summary)`` with branch norms."""
    rng = np.random.default_rng(seed)
    d = rng.normal(0.0, 1.0, shape)
    w = FVMWeights.init(shape[2], state_dim, seed=rng.integers(2 ** 32))
    out, tape = fvm_forward(d, w)
    summary = {
        "shape": list(shape),
        "input_norm": float(np.linalg.norm(d)),
        "spatial_norm": float(np.linalg.norm(tape.ds)),
        "channel_norm": float(np.linalg.norm(tape.dc)),
        "fused_norm": float(np.linalg.norm(tape.dstar)),
        "output_norm": float(np.linalg.norm(out)),
        "update_norm": float(np.linalg.norm(out - d)),
    }
    return out, summary
