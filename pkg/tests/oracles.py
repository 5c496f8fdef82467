"""Independent reference implementations used only by the tests.

These favour plain loops, exact rationals and brute force over speed so
they share no code path with the library.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

EPS = np.spacing(1.0)


# --- wavelet -------------------------------------------------------------------------

def haar_matrix(n: int) -> np.ndarray:
    """Orthonormal 1-D Haar analysis matrix: n/2 averaging rows, then n/2 differencing rows."""
    h = np.zeros((n, n))
    s = 1.0 / math.sqrt(2.0)
    for i in range(n // 2):
        h[i, 2 * i] = h[i, 2 * i + 1] = s
        h[n // 2 + i, 2 * i] = s
        h[n // 2 + i, 2 * i + 1] = -s
    return h


def haar_bands(img):
    """(ll, lh, hl, hh) via Y = H_rows X H_cols^T.

    lh is low across columns and high down rows; hl the opposite.
    """
    x = np.asarray(img, dtype=np.float64)
    hgt, wid = x.shape
    y = haar_matrix(hgt) @ x @ haar_matrix(wid).T
    a, b = hgt // 2, wid // 2
    return y[:a, :b], y[a:, :b], y[:a, b:], y[a:, b:]


# --- point selection -------------------------------------------------------------------

def fps_oracle(m, coarse, window, k, t, tau, stride=None, gamma=None, scale=2) -> str:
    """Enumerate every window, sort with Python tuples, emit the JSON document."""
    m = np.asarray(m, dtype=np.float64)
    stride = window if stride is None else stride
    hgt, wid = m.shape
    area = window * window
    cands = []
    for r0 in range(0, hgt - window + 1, stride):
        for c0 in range(0, wid - window + 1, stride):
            exact = sum((Fraction(float(m[r, c])) for r in range(r0, r0 + window)
                         for c in range(c0, c0 + window)), Fraction(0))
            cands.append((-(float(exact) / area), r0, c0))
    cands.sort()
    chosen = [(r0, c0, -neg) for neg, r0, c0 in cands[:k]]

    fallback = False
    if gamma is not None:
        kept = []
        for r0, c0, s in chosen:
            vals = [max(float(coarse[r, c]), 1.0 - float(coarse[r, c]))
                    for r in range(r0 * scale, (r0 + window) * scale)
                    for c in range(c0 * scale, (c0 + window) * scale)]
            if sum(vals) / len(vals) >= gamma:
                kept.append((r0, c0, s))
        if not kept:
            fallback = True
        chosen = kept

    points = []
    for r0, c0, _ in chosen:
        cells = [(float(m[r, c]), r, c) for r in range(r0, r0 + window) for c in range(c0, c0 + window)]
        high = sorted(cells, key=lambda e: (-e[0], e[1], e[2]))[:t]
        rest = [e for e in cells if e not in high]
        low = sorted(rest, key=lambda e: (e[0], e[1], e[2]))[:t]
        for _, r, c in high + low:
            rr, cc = r * scale, c * scale
            pos = float(coarse[rr, cc]) > tau
            points.append({"row": rr, "col": cc, "polarity": "positive" if pos else "negative"})
    doc = {
        "windows": [{"row": r0 * scale, "col": c0 * scale, "size": window * scale, "score": s}
                    for r0, c0, s in chosen],
        "points": points,
        "fallback_mask_only": fallback,
    }
    return json.dumps(doc, indent=2) + "\n"


# --- state-space scan ---------------------------------------------------------------------

def _softplus(z):
    return math.log1p(math.exp(-abs(z))) + max(z, 0.0)


def scan_oracle(x, p):
    """Scalar-loop selective scan of an (L, C) sequence."""
    x = np.asarray(x, dtype=np.float64)
    length, c = x.shape
    n = p.a_log.shape[1]
    h = [[0.0] * n for _ in range(c)]
    y = np.zeros((length, c))
    for k in range(length):
        xk = x[k]
        delta = [_softplus(sum(xk[i] * p.delta_w[i, j] for i in range(c)) + p.delta_b[j]) for j in range(c)]
        bk = [sum(xk[i] * p.b_w[i, s] for i in range(c)) for s in range(n)]
        ck = [sum(xk[i] * p.c_w[i, s] for i in range(c)) for s in range(n)]
        for j in range(c):
            acc = 0.0
            for s in range(n):
                a = -math.exp(p.a_log[j, s])
                h[j][s] = math.exp(delta[j] * a) * h[j][s] + delta[j] * bk[s] * xk[j]
                acc += h[j][s] * ck[s]
            y[k, j] = acc + p.d_skip[j] * xk[j]
    return y


def ss2d_oracle(f, p, merge="mean"):
    """Four explicit traversal orders, each scanned by :func:`scan_oracle`."""
    f = np.asarray(f, dtype=np.float64)
    hgt, wid, _ = f.shape
    row_major = [(r, c) for r in range(hgt) for c in range(wid)]
    col_major = [(r, c) for c in range(wid) for r in range(hgt)]
    orders = [row_major, row_major[::-1], col_major, col_major[::-1]]
    out = np.zeros_like(f)
    for order in orders:
        seq = np.array([f[r, c] for r, c in order])
        ys = scan_oracle(seq, p)
        for (r, c), yv in zip(order, ys):
            out[r, c] += yv
    return out / 4.0 if merge == "mean" else out


# --- adapter ------------------------------------------------------------------------------

def gelu_tanh(v):
    return 0.5 * v * (1.0 + math.tanh(math.sqrt(2.0 / math.pi) * (v + 0.044715 * v ** 3)))


def layer_norm_rows(x, gain, bias, eps=1e-5):
    out = np.empty_like(x)
    for i, row in enumerate(x):
        mu = math.fsum(row) / row.size
        var = math.fsum((v - mu) ** 2 for v in row) / row.size
        out[i] = [(v - mu) / math.sqrt(var + eps) * g + b for v, g, b in zip(row, gain, bias)]
    return out


def attention_oracle(x, w):
    n, d = x.shape
    dh = d // w.heads
    q, k, v = x @ w.w_q, x @ w.w_k, x @ w.w_v
    out = np.zeros((n, d))
    for head in range(w.heads):
        sl = slice(head * dh, (head + 1) * dh)
        for i in range(n):
            logits = [float(q[i, sl] @ k[j, sl]) / math.sqrt(dh) for j in range(n)]
            top = max(logits)
            ex = [math.exp(z - top) for z in logits]
            tot = sum(ex)
            out[i, sl] = sum((e / tot) * v[j, sl] for j, e in enumerate(ex))
    return out @ w.w_o


def block_oracle(x, w):
    x_bar = attention_oracle(layer_norm_rows(x, w.ln1_gain, w.ln1_bias), w) + x
    hid = layer_norm_rows(x_bar, w.ln2_gain, w.ln2_bias) @ w.w_mlp1 + w.b_mlp1
    hid = np.vectorize(gelu_tanh)(hid)
    return x_bar, hid @ w.w_mlp2 + w.b_mlp2


# --- losses -----------------------------------------------------------------------------------

def weight_map_oracle(gt, size=31):
    gt = np.asarray(gt, dtype=np.float64)
    hgt, wid = gt.shape
    r = size // 2
    out = np.empty_like(gt)
    for i in range(hgt):
        for j in range(wid):
            tot = 0.0
            for u in range(i - r, i + r + 1):
                for v in range(j - r, j + r + 1):
                    if 0 <= u < hgt and 0 <= v < wid:
                        tot += gt[u, v]
            out[i, j] = 1.0 + 5.0 * abs(tot / (size * size) - gt[i, j])
    return out


def wbce_oracle(pred, gt):
    w = weight_map_oracle(gt)
    num = den = 0.0
    for p, g, wv in zip(np.ravel(pred), np.ravel(gt), np.ravel(w)):
        p = min(max(p, 1e-7), 1 - 1e-7)
        num += wv * -(g * math.log(p) + (1 - g) * math.log(1 - p))
        den += wv
    return num / den


def wiou_oracle(pred, gt):
    w = weight_map_oracle(gt)
    inter = union = 0.0
    for p, g, wv in zip(np.ravel(pred), np.ravel(gt), np.ravel(w)):
        inter += wv * p * g
        union += wv * (p + g - p * g)
    return 1.0 - (inter + 1.0) / (union + 1.0)


# --- metrics ----------------------------------------------------------------------------------

def iou_oracle(pred, gt):
    inter = union = 0
    for p, g in zip(np.ravel(pred), np.ravel(gt)):
        b, g = bool(p > 0.5), bool(g)
        inter += b and g
        union += b or g
    return 1.0 if union == 0 else inter / union


def mae_oracle(pred, gt):
    return math.fsum(abs(float(p) - float(g)) for p, g in zip(np.ravel(pred), np.ravel(gt))) / np.size(gt)


def _mean(vals):
    return math.fsum(vals) / len(vals)


def _std1(vals):
    if len(vals) < 2:
        return 0.0
    mu = _mean(vals)
    return math.sqrt(math.fsum((v - mu) ** 2 for v in vals) / (len(vals) - 1))


def _ssim_oracle(p, g):
    pv = [float(v) for v in np.ravel(p)]
    gv = [float(v) for v in np.ravel(g)]
    n = len(pv)
    mx, my = _mean(pv), _mean(gv)
    den = max(n - 1, 1)
    sx = math.fsum((v - mx) ** 2 for v in pv) / den
    sy = math.fsum((v - my) ** 2 for v in gv) / den
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(pv, gv)) / den
    alpha = 4 * mx * my * sxy
    beta = (mx * mx + my * my) * (sx + sy)
    if alpha != 0:
        return alpha / (beta + EPS)
    return 1.0 if beta == 0 else 0.0


def s_measure_oracle(pred, gt, alpha=0.5):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=bool)
    hgt, wid = gt.shape
    y = gt.sum() / gt.size
    if y == 0:
        return 1.0 - _mean(pred.ravel().tolist())
    if y == 1:
        return _mean(pred.ravel().tolist())

    fg = [float(pred[i, j]) for i in range(hgt) for j in range(wid) if gt[i, j]]
    bg = [1.0 - float(pred[i, j]) for i in range(hgt) for j in range(wid) if not gt[i, j]]
    obj = lambda v: 2 * _mean(v) / (_mean(v) ** 2 + 1 + _std1(v) + EPS)
    s_obj = y * obj(fg) + (1 - y) * obj(bg)

    rows = [i for i in range(hgt) for j in range(wid) if gt[i, j]]
    cols = [j for i in range(hgt) for j in range(wid) if gt[i, j]]
    cx = min(int(round(_mean(cols))) + 1, wid)
    cy = min(int(round(_mean(rows))) + 1, hgt)
    area = hgt * wid
    w1 = cx * cy / area
    w2 = cy * (wid - cx) / area
    w3 = (hgt - cy) * cx / area
    w4 = 1 - w1 - w2 - w3
    s_reg = 0.0
    for wt, rs, cs in ((w1, (0, cy), (0, cx)), (w2, (0, cy), (cx, wid)),
                       (w3, (cy, hgt), (0, cx)), (w4, (cy, hgt), (cx, wid))):
        if rs[1] > rs[0] and cs[1] > cs[0]:
            s_reg += wt * _ssim_oracle(pred[rs[0]:rs[1], cs[0]:cs[1]], gt[rs[0]:rs[1], cs[0]:cs[1]])
    return max(alpha * s_obj + (1 - alpha) * s_reg, 0.0)


def nearest_fg_oracle(gt):
    """Brute-force nearest foreground pixel; ties go to the smallest (col, row)."""
    gt = np.asarray(gt, dtype=bool)
    fg = [(r, c) for r in range(gt.shape[0]) for c in range(gt.shape[1]) if gt[r, c]]
    dist = np.zeros(gt.shape)
    idx = np.zeros(gt.shape + (2,), dtype=int)
    for r in range(gt.shape[0]):
        for c in range(gt.shape[1]):
            if gt[r, c]:
                idx[r, c] = (r, c)
                continue
            best = min(fg, key=lambda q: ((q[0] - r) ** 2 + (q[1] - c) ** 2, q[1], q[0]))
            dist[r, c] = math.sqrt((best[0] - r) ** 2 + (best[1] - c) ** 2)
            idx[r, c] = best
    return dist, idx


def gauss7_oracle(sigma=5.0):
    k = [[math.exp(-(x * x + y * y) / (2 * sigma * sigma)) for x in range(-3, 4)] for y in range(-3, 4)]
    tot = sum(map(sum, k))
    return np.array(k) / tot


def conv_zero_oracle(img, kern):
    hgt, wid = img.shape
    r = kern.shape[0] // 2
    out = np.zeros_like(img)
    for i in range(hgt):
        for j in range(wid):
            acc = 0.0
            for u in range(-r, r + 1):
                for v in range(-r, r + 1):
                    if 0 <= i - u < hgt and 0 <= j - v < wid:
                        acc += kern[u + r, v + r] * img[i - u, j - v]
            out[i, j] = acc
    return out


def weighted_f_oracle(pred, gt, beta2=1.0):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=bool)
    if not gt.any():
        return 1.0 if not pred.any() else 0.0
    dist, idx = nearest_fg_oracle(gt)
    e = np.abs(pred - gt)
    et = np.array([[e[tuple(idx[r, c])] for c in range(gt.shape[1])] for r in range(gt.shape[0])])
    ea = conv_zero_oracle(et, gauss7_oracle())
    tp = fp = 0.0
    ew_fg = []
    for r in range(gt.shape[0]):
        for c in range(gt.shape[1]):
            if gt[r, c]:
                val = min(ea[r, c], e[r, c])
                ew_fg.append(val)
            else:
                fp += e[r, c] * (2.0 - 0.5 ** (dist[r, c] / 5.0))
    tp = len(ew_fg) - math.fsum(ew_fg)
    recall = 1.0 - _mean(ew_fg)
    precision = tp / (tp + fp + EPS)
    return (1 + beta2) * recall * precision / (recall + beta2 * precision + EPS)


def e_measure_oracle(pred, gt):
    """Per-pixel enhanced alignment, averaged over 256 thresholds."""
    pred = np.asarray(pred, dtype=np.float64)
    g = np.asarray(gt, dtype=np.float64).ravel()
    n = g.size
    scores = []
    for i in range(256):
        thr = (i + 0.5) / 256
        b = (pred.ravel() >= thr).astype(np.float64)
        if g.sum() == 0:
            per_pixel = 1.0 - b
        elif g.sum() == n:
            per_pixel = b
        else:
            db = b - b.mean()
            dg = g - g.mean()
            align = 2 * dg * db / (dg * dg + db * db + EPS)
            per_pixel = (align + 1) ** 2 / 4
        scores.append(math.fsum(per_pixel.tolist()) / n)
    return math.fsum(scores) / 256
