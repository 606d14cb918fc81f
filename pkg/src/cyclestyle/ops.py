"""Differentiable primitives for NHWC image tensors.

Convolutions run as im2col + one BLAS matmul; the transposed convolution is
implemented literally as the backward-input pass of the matching strided
convolution, so the two are exact linear adjoints of each other (same kernel
array, layouts (kh, kw, cin, cout) for conv2d and (kh, kw, cout, cin) for
conv2d_transpose).

Same padding follows pad_total = max((ceil(in/s) - 1)*s + k - in, 0), split
floor on the leading edge and ceil on the trailing edge, which reproduces the
256 -> 128 -> ... -> 1 downsampling chain of the generator.

No general broadcasting: binary ops require equal shapes (channel-wise
parameters like bias/gamma/beta are the deliberate exceptions).
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .errors import ShapeError
from .rng import Rng
from .tensor import Tensor, record, require_same_shape


def _require_nhwc(t: Tensor, op: str):
    if t.data.ndim != 4:
        raise ShapeError(f"{op}: expected rank-4 NHWC tensor, got shape {t.shape}")


def _require_same_dtype(op: str, *tensors: Tensor):
    dtypes = {t.dtype for t in tensors}
    if len(dtypes) > 1:
        raise TypeError(f"{op}: mixed dtypes {sorted(d.name for d in dtypes)}")


def _same_pads(size: int, k: int, stride: int) -> tuple[int, int]:
    """Total zero padding for 'same' output size ceil(size/stride), split
    floor-left / ceil-right."""
    out = math.ceil(size / stride)
    total = max((out - 1) * stride + k - size, 0)
    return total // 2, total - total // 2


def _im2col(x_pad: np.ndarray, kh: int, kw: int, stride: int, oh: int, ow: int) -> np.ndarray:
    """(n, hp, wp, c) -> (n*oh*ow, kh*kw*c) patch matrix."""
    n, _, _, c = x_pad.shape
    cols = np.empty((n, oh, ow, kh, kw, c), dtype=x_pad.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, :, i, j, :] = x_pad[:, i : i + oh * stride : stride, j : j + ow * stride : stride, :]
    return cols.reshape(n * oh * ow, kh * kw * c)


def _col2im(cols: np.ndarray, n: int, hp: int, wp: int, c: int,
            kh: int, kw: int, stride: int, oh: int, ow: int) -> np.ndarray:
    """Adjoint of _im2col: scatter-add patches back to (n, hp, wp, c)."""
    img = np.zeros((n, hp, wp, c), dtype=cols.dtype)
    cols = cols.reshape(n, oh, ow, kh, kw, c)
    for i in range(kh):
        for j in range(kw):
            img[:, i : i + oh * stride : stride, j : j + ow * stride : stride, :] += cols[:, :, :, i, j, :]
    return img


def conv2d(x: Tensor, kernel: Tensor, bias: Optional[Tensor] = None, *,
           stride: int = 1, padding: str = "same") -> Tensor:
    """Strided 2D convolution, kernel layout (kh, kw, cin, cout).

    Output spatial size is ceil(in/stride) for 'same', floor((in-k)/stride)+1
    for 'valid'. Differentiable w.r.t. input, kernel and bias.
    """
    _require_nhwc(x, "conv2d")
    if kernel.data.ndim != 4:
        raise ShapeError(f"conv2d: kernel must be rank 4, got shape {kernel.shape}")
    if stride < 1:
        raise ValueError(f"conv2d: stride must be >= 1, got {stride}")
    if padding not in ("same", "valid"):
        raise ValueError(f"conv2d: padding must be 'same' or 'valid', got {padding!r}")
    n, h, w, cin = x.shape
    kh, kw, kcin, cout = kernel.shape
    if kcin != cin:
        raise ShapeError(f"conv2d: input shape {x.shape} has {cin} channels but kernel shape "
                         f"{kernel.shape} expects {kcin}")
    if bias is not None and bias.shape != (cout,):
        raise ShapeError(f"conv2d: bias shape {bias.shape} != ({cout},)")
    _require_same_dtype("conv2d", *( (x, kernel) if bias is None else (x, kernel, bias) ))

    if padding == "same":
        oh, ow = math.ceil(h / stride), math.ceil(w / stride)
        pt, pb = _same_pads(h, kh, stride)
        pl, pr = _same_pads(w, kw, stride)
    else:
        if h < kh or w < kw:
            raise ShapeError(f"conv2d: valid convolution of {kh}x{kw} kernel needs input "
                             f">= kernel, got spatial {(h, w)}")
        oh, ow = (h - kh) // stride + 1, (w - kw) // stride + 1
        pt = pb = pl = pr = 0

    x_pad = np.pad(x.data, ((0, 0), (pt, pb), (pl, pr), (0, 0))) if (pt | pb | pl | pr) else x.data
    hp, wp = h + pt + pb, w + pl + pr
    cols = _im2col(x_pad, kh, kw, stride, oh, ow)       # (n*oh*ow, kh*kw*cin)
    w2 = kernel.data.reshape(kh * kw * cin, cout)
    out2 = cols @ w2
    if bias is not None:
        out2 += bias.data
    out = Tensor(out2.reshape(n, oh, ow, cout))

    def backward_fn(g):
        g2 = g.reshape(n * oh * ow, cout)
        dk = (cols.T @ g2).reshape(kernel.shape)
        dxp = _col2im(g2 @ w2.T, n, hp, wp, cin, kh, kw, stride, oh, ow)
        dx = dxp[:, pt : pt + h, pl : pl + w, :]
        if bias is None:
            return dx, dk
        return dx, dk, g2.sum(axis=0)

    inputs = (x, kernel) if bias is None else (x, kernel, bias)
    record("conv2d", inputs, out, backward_fn)
    return out


def conv2d_transpose(x: Tensor, kernel: Tensor, bias: Optional[Tensor] = None, *,
                     stride: int = 1) -> Tensor:
    """Transposed convolution with 'same' padding, kernel layout (kh, kw, cout, cin).

    Output spatial size is in*stride. The forward pass is exactly the
    backward-input pass of the matching conv2d, so for a shared kernel K,
    <conv2d(x, K), y> == <x, conv2d_transpose(y, K)>.
    """
    _require_nhwc(x, "conv2d_transpose")
    if kernel.data.ndim != 4:
        raise ShapeError(f"conv2d_transpose: kernel must be rank 4, got shape {kernel.shape}")
    if stride < 1:
        raise ValueError(f"conv2d_transpose: stride must be >= 1, got {stride}")
    n, h, w, cin = x.shape
    kh, kw, cout, kcin = kernel.shape
    if kcin != cin:
        raise ShapeError(f"conv2d_transpose: input shape {x.shape} has {cin} channels but "
                         f"kernel shape {kernel.shape} expects {kcin}")
    if bias is not None and bias.shape != (cout,):
        raise ShapeError(f"conv2d_transpose: bias shape {bias.shape} != ({cout},)")
    _require_same_dtype("conv2d_transpose", *( (x, kernel) if bias is None else (x, kernel, bias) ))

    oh, ow = h * stride, w * stride
    # pads of the matching conv2d that maps (oh, ow) -> (h, w)
    pt, pb = _same_pads(oh, kh, stride)
    pl, pr = _same_pads(ow, kw, stride)
    hp, wp = oh + pt + pb, ow + pl + pr

    w2 = kernel.data.reshape(kh * kw * cout, cin)
    y2 = x.data.reshape(n * h * w, cin)
    out_pad = _col2im(y2 @ w2.T, n, hp, wp, cout, kh, kw, stride, h, w)
    cropped = out_pad[:, pt : pt + oh, pl : pl + ow, :]
    out_data = cropped + bias.data if bias is not None else np.ascontiguousarray(cropped)
    out = Tensor(out_data)

    def backward_fn(g):
        g_pad = np.pad(g, ((0, 0), (pt, pb), (pl, pr), (0, 0))) if (pt | pb | pl | pr) else g
        cols_g = _im2col(g_pad, kh, kw, stride, h, w)    # (n*h*w, kh*kw*cout)
        dx = (cols_g @ w2).reshape(n, h, w, cin)
        dk = (cols_g.T @ y2).reshape(kernel.shape)
        if bias is None:
            return dx, dk
        return dx, dk, g.sum(axis=(0, 1, 2))

    inputs = (x, kernel) if bias is None else (x, kernel, bias)
    record("conv2d_transpose", inputs, out, backward_fn)
    return out


def pad_spatial(x: Tensor, pad: int) -> Tensor:
    """Zero-pad height and width by `pad` on every side."""
    _require_nhwc(x, "pad_spatial")
    if pad < 0:
        raise ValueError(f"pad_spatial: pad must be >= 0, got {pad}")
    if pad == 0:
        return x
    n, h, w, c = x.shape
    out = Tensor(np.pad(x.data, ((0, 0), (pad, pad), (pad, pad), (0, 0))))

    def backward_fn(g):
        return (g[:, pad : pad + h, pad : pad + w, :],)

    record("pad_spatial", (x,), out, backward_fn)
    return out


def instance_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-5) -> Tensor:
    """Per-sample, per-channel spatial standardization with learned affine.

    Each (batch item, channel) slice is shifted/scaled by its own spatial
    mean and population variance, then mapped through gamma * xhat + beta.
    """
    _require_nhwc(x, "instance_norm")
    c = x.shape[3]
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeError(f"instance_norm: gamma {gamma.shape} / beta {beta.shape} must both be ({c},)")
    _require_same_dtype("instance_norm", x, gamma, beta)
    mu = x.data.mean(axis=(1, 2), keepdims=True)
    var = x.data.var(axis=(1, 2), keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = Tensor(xhat * gamma.data + beta.data)

    def backward_fn(g):
        dgamma = (g * xhat).sum(axis=(0, 1, 2))
        dbeta = g.sum(axis=(0, 1, 2))
        dxhat = g * gamma.data
        m1 = dxhat.mean(axis=(1, 2), keepdims=True)
        m2 = (dxhat * xhat).mean(axis=(1, 2), keepdims=True)
        dx = inv * (dxhat - m1 - xhat * m2)
        return dx, dgamma, dbeta

    record("instance_norm", (x, gamma, beta), out, backward_fn)
    return out


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.data, 0))

    def backward_fn(g):
        return (g * (x.data > 0),)   # subgradient 0 at the kink

    record("relu", (x,), out, backward_fn)
    return out


def leaky_relu(x: Tensor, alpha: float = 0.2) -> Tensor:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"leaky_relu: alpha must be in (0, 1), got {alpha}")
    pos = x.data > 0
    out = Tensor(np.where(pos, x.data, x.data * alpha))

    def backward_fn(g):
        return (g * np.where(pos, 1.0, alpha).astype(g.dtype),)

    record("leaky_relu", (x,), out, backward_fn)
    return out


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.data)
    out = Tensor(y)

    def backward_fn(g):
        return (g * (1.0 - y * y),)

    record("tanh", (x,), out, backward_fn)
    return out


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bce_with_logits_mean(logits: Tensor, targets: Tensor) -> Tensor:
    """Mean binary cross-entropy on raw logits, numerically stable form
    max(z,0) - z*y + log(1 + exp(-|z|)); finite for any logit magnitude."""
    require_same_shape(logits, targets, "bce_with_logits_mean")
    z, y = logits.data, targets.data
    val = np.maximum(z, 0) - z * y + np.log1p(np.exp(-np.abs(z)))
    out = Tensor(np.asarray(val.mean(), dtype=z.dtype))

    def backward_fn(g):
        dz = (_sigmoid(z) - y) * (g / z.size)
        return dz, None

    record("bce_with_logits_mean", (logits, targets), out, backward_fn)
    return out


def l1_mean(a: Tensor, b: Tensor) -> Tensor:
    """Mean absolute difference; subgradient 0 where entries are equal."""
    require_same_shape(a, b, "l1_mean")
    d = a.data - b.data
    out = Tensor(np.asarray(np.abs(d).mean(), dtype=d.dtype))

    def backward_fn(g):
        s = np.sign(d) * (g / d.size)
        return s, -s

    record("l1_mean", (a, b), out, backward_fn)
    return out


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate along the channel axis; backward splits the gradient."""
    _require_nhwc(a, "concat_channels")
    _require_nhwc(b, "concat_channels")
    if a.shape[:3] != b.shape[:3]:
        raise ShapeError(f"concat_channels: batch/spatial dims differ, {a.shape} vs {b.shape}")
    _require_same_dtype("concat_channels", a, b)
    ca = a.shape[3]
    out = Tensor(np.concatenate([a.data, b.data], axis=3))

    def backward_fn(g):
        return g[..., :ca], g[..., ca:]

    record("concat_channels", (a, b), out, backward_fn)
    return out


def dropout(x: Tensor, rate: float, rng: Rng, training: bool) -> Tensor:
    """Inverted dropout: zero with probability `rate`, scale survivors by
    1/(1-rate). Identity when not training or rate == 0."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout: rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    keep = (rng.uniform(x.shape) >= rate).astype(x.dtype)
    mask = keep / np.asarray(1.0 - rate, dtype=x.dtype)
    out = Tensor(x.data * mask)

    def backward_fn(g):
        return (g * mask,)

    record("dropout", (x,), out, backward_fn)
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    require_same_shape(a, b, "add")
    _require_same_dtype("add", a, b)
    out = Tensor(a.data + b.data)

    def backward_fn(g):
        return g, g

    record("add", (a, b), out, backward_fn)
    return out


def scale(x: Tensor, c: float) -> Tensor:
    c = float(c)
    out = Tensor(x.data * np.asarray(c, dtype=x.dtype))

    def backward_fn(g):
        return (g * np.asarray(c, dtype=g.dtype),)

    record("scale", (x,), out, backward_fn)
    return out


def weighted_sum(x: Tensor, weights: np.ndarray) -> Tensor:
    """sum(x * weights) against a constant weight array; handy for probing a
    single output coordinate or forming inner products."""
    weights = np.asarray(weights, dtype=x.dtype)
    if weights.shape != x.shape:
        raise ShapeError(f"weighted_sum: weights shape {weights.shape} != x shape {x.shape}")
    out = Tensor(np.asarray((x.data * weights).sum(), dtype=x.dtype))

    def backward_fn(g):
        return (g * weights,)

    record("weighted_sum", (x,), out, backward_fn)
    return out


def mean_all(x: Tensor) -> Tensor:
    out = Tensor(np.asarray(x.data.mean(), dtype=x.dtype))

    def backward_fn(g):
        return (np.ones_like(x.data) * (g / x.size),)

    record("mean_all", (x,), out, backward_fn)
    return out
