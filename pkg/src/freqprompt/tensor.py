"""Array helpers: PGM/PPM and raw tensor IO, block pooling, bilinear resizing.

Images are plain float64 numpy arrays with values in [0, 1], shaped
``(H, W)`` for grayscale or ``(H, W, 3)`` for colour.  Feature grids are
``(H, W, C)`` arrays of finite reals.
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .errors import DecodeError, DimensionError, ParameterError

TENSOR_MAGIC = b"HFPTENSR".ljust(16, b"\0")
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

_WHITESPACE = b" \t\r\n\v\f"


def as_image(data) -> np.ndarray:
    """Validate and return ``data`` as a float64 image array."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    if img.ndim not in (2, 3) or (img.ndim == 3 and img.shape[2] != 3):
        raise DimensionError(f"expected (H, W) or (H, W, 3) image, got shape {img.shape}")
    if img.size == 0:
        raise DimensionError("empty image")
    if not np.all(np.isfinite(img)) or img.min() < 0.0 or img.max() > 1.0:
        raise ParameterError("image values must be finite and lie in [0, 1]")
    return img


def to_gray(img: np.ndarray) -> np.ndarray:
    """Luma conversion (0.299, 0.587, 0.114); grayscale input passes through."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 3:
        return img @ LUMA_WEIGHTS
    if img.ndim == 3 and img.shape[2] == 1:
        return img[:, :, 0]
    raise DimensionError(f"cannot convert shape {img.shape} to grayscale")


# --- PNM ---------------------------------------------------------------------

def _read_header(buf: bytes, n_fields: int):
    """Parse the magic plus ``n_fields`` integers; returns (magic, ints, payload offset)."""
    pos = 0
    tokens = []
    while len(tokens) < n_fields + 1:
        while pos < len(buf) and (buf[pos] in _WHITESPACE or buf[pos] == ord("#")):
            if buf[pos] == ord("#"):
                while pos < len(buf) and buf[pos] not in b"\r\n":
                    pos += 1
            else:
                pos += 1
        if pos >= len(buf):
            raise DecodeError("truncated header", pos)
        start = pos
        while pos < len(buf) and buf[pos] not in _WHITESPACE and buf[pos] != ord("#"):
            pos += 1
        tokens.append((buf[start:pos], start))
    if pos >= len(buf) or buf[pos] not in _WHITESPACE:
        raise DecodeError("header must end with a single whitespace byte", pos)
    magic = tokens[0][0]
    values = []
    for tok, off in tokens[1:]:
        if not tok.isdigit():
            raise DecodeError(f"malformed header field {tok!r}", off)
        values.append((int(tok), off))
    return magic, values, pos + 1


def _decode_pnm(buf: bytes) -> np.ndarray:
    if buf[:2] not in (b"P5", b"P6"):
        raise DecodeError(f"unsupported magic {buf[:2]!r}", 0)
    magic, fields, offset = _read_header(buf, 3)
    (width, _), (height, _), (maxval, maxval_off) = fields
    if width < 1 or height < 1:
        raise DecodeError("image dimensions must be positive", fields[0][1])
    if maxval != 255:
        raise DecodeError(f"unsupported maxval {maxval}", maxval_off)
    channels = 3 if magic == b"P6" else 1
    expected = width * height * channels
    payload = buf[offset:offset + expected]
    if len(payload) < expected:
        raise DecodeError(
            f"truncated payload: expected {expected} bytes, found {len(payload)}",
            offset + len(payload),
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / maxval
    if channels == 3:
        return pixels.reshape(height, width, 3)
    return pixels.reshape(height, width)


def encode_pnm(img: np.ndarray) -> bytes:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3 and img.shape[2] == 1:
        img = img[:, :, 0]
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise DimensionError(f"PNM supports 1 or 3 channels, got shape {img.shape}")
    h, w = img.shape[:2]
    q = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    return magic + f"\n{w} {h}\n255\n".encode("ascii") + q.tobytes()


# --- raw tensor ----------------------------------------------------------------

def encode_tensor(arr: np.ndarray) -> bytes:
    """Serialize a 2-D or 3-D array: 16-byte magic, u32 LE (h, w, c), f64 LE payload."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise DimensionError(f"tensor must be 2-D or 3-D, got shape {arr.shape}")
    header = TENSOR_MAGIC + struct.pack("<3I", *arr.shape)
    return header + np.ascontiguousarray(arr, dtype="<f8").tobytes()


def decode_tensor(buf: bytes) -> np.ndarray:
    """Inverse of :func:`encode_tensor`; always returns an ``(h, w, c)`` array."""
    if len(buf) < 16 or buf[:16] != TENSOR_MAGIC:
        raise DecodeError("bad tensor magic", 0)
    if len(buf) < 28:
        raise DecodeError("truncated tensor header", len(buf))
    h, w, c = struct.unpack_from("<3I", buf, 16)
    expected = h * w * c * 8
    payload = buf[28:28 + expected]
    if len(payload) < expected:
        raise DecodeError(
            f"truncated payload: expected {expected} bytes, found {len(payload)}",
            28 + len(payload),
        )
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(h, w, c)


def save_tensor(path, arr) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_tensor(arr))


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_tensor(fh.read())


def save_image(path, img) -> None:
    """Write a PGM/PPM (by channel count), or a raw tensor for ``.hfpt`` paths."""
    if os.fspath(path).endswith(".hfpt"):
        save_tensor(path, img)
        return
    with open(path, "wb") as fh:
        fh.write(encode_pnm(img))


def load_image(path) -> np.ndarray:
    """Load a P5/P6 file (maxval 255) or a raw tensor file, scaled to [0, 1]."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:16] == TENSOR_MAGIC:
        arr = decode_tensor(buf)
        return arr[:, :, 0] if arr.shape[2] == 1 else arr
    return _decode_pnm(buf)


# --- resampling -----------------------------------------------------------------

def block_pool(img, factor: int, mode: str = "mean") -> np.ndarray:
    """Non-overlapping ``factor x factor`` pooling over the two leading axes."""
    img = np.asarray(img, dtype=np.float64)
    if factor < 1:
        raise ParameterError("factor must be a positive integer")
    h, w = img.shape[:2]
    if h % factor or w % factor:
        raise DimensionError(f"factor {factor} does not divide {h}x{w}")
    blocks = img.reshape(h // factor, factor, w // factor, factor, *img.shape[2:])
    if mode == "mean":
        return blocks.mean(axis=(1, 3))
    if mode == "max":
        return blocks.max(axis=(1, 3))
    raise ParameterError(f"unknown pooling mode {mode!r}")


def _axis_weights(n_in: int, n_out: int):
    # half-pixel centres (align_corners=False), clamped at the borders
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_bilinear(img, out_h: int, out_w: int) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if out_h < 1 or out_w < 1:
        raise DimensionError(f"target size must be positive, got {out_h}x{out_w}")
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img.copy()
    r0, r1, fr = _axis_weights(h, out_h)
    c0, c1, fc = _axis_weights(w, out_w)
    extra = (None,) * (img.ndim - 2)
    fr = fr[(slice(None), None) + extra]
    fc = fc[(None, slice(None)) + extra]
    top = img[r0][:, c0] * (1 - fc) + img[r0][:, c1] * fc
    bottom = img[r1][:, c0] * (1 - fc) + img[r1][:, c1] * fc
    out = top * (1 - fr) + bottom * fr
    # convex weights can still round a hair outside the input range
    return np.clip(out, img.min(), img.max())
