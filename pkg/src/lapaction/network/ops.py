"""Differentiable primitives in float64: dense, conv, pooling, dropout, softmax.

Every forward returns (output, cache); the matching backward consumes the
cache and the upstream gradient. Convolutions use NHWC layout with symmetric
zero padding of kernel//2, so a stride-s stage maps H to ceil(H/s).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def dense_forward(x, w, b):
    return x @ w + b, (x, w)


def dense_backward(dout, cache):
    x, w = cache
    dx = dout @ w.T
    dw = x.T @ dout
    db = dout.sum(axis=0)
    return dx, dw, db


def relu_forward(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(dout, mask):
    return dout * mask


def conv2d_forward(x, w, b, stride):
    """x (N, H, W, C), w (kh, kw, C, F) -> (N, Ho, Wo, F)."""
    kh, kw = w.shape[:2]
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw), (0, 0)))
    cols = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    # cols: (N, Ho, Wo, C, kh, kw)
    out = np.einsum("nhwcij,ijcf->nhwf", cols, w, optimize=True) + b
    return out, (xp, w, stride, x.shape)


def conv2d_backward(dout, cache):
    xp, w, stride, x_shape = cache
    kh, kw = w.shape[:2]
    ph, pw = kh // 2, kw // 2
    n, ho, wo, _ = dout.shape
    cols = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    dw = np.einsum("nhwcij,nhwf->ijcf", cols, dout, optimize=True)
    db = dout.sum(axis=(0, 1, 2))
    dcols = np.einsum("nhwf,ijcf->nhwcij", dout, w, optimize=True)
    dxp = np.zeros_like(xp)
    for i in range(kh):
        for j in range(kw):
            dxp[:, i : i + stride * ho : stride, j : j + stride * wo : stride, :] += dcols[
                :, :, :, :, i, j
            ]
    dx = dxp[:, ph : ph + x_shape[1], pw : pw + x_shape[2], :]
    return dx, dw, db


def global_avg_pool_forward(x):
    """(N, H, W, C) -> (N, C) spatial mean."""
    return x.mean(axis=(1, 2)), x.shape


def global_avg_pool_backward(dout, x_shape):
    _, h, w, _ = x_shape
    return np.broadcast_to(dout[:, None, None, :], x_shape) / (h * w)


def dropout_forward(x, rate, rng):
    """Inverted dropout; the mask is drawn from the supplied generator."""
    if rate == 0.0:
        mask = np.ones_like(x)
    else:
        mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(dout, mask):
    return dout * mask


def softmax(z):
    """Row-wise stable softmax over the last axis."""
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(p, dp):
    """Gradient w.r.t. logits given gradient w.r.t. probabilities."""
    return p * (dp - (dp * p).sum(axis=-1, keepdims=True))
