"""Batched layer primitives with hand-written reverse passes.

Every ``*_forward`` returns ``(out, cache)``; the matching ``*_backward``
takes the upstream gradient and the cache and returns the input gradient
(plus parameter gradients where the layer has parameters).  Tensors are
float64 numpy arrays laid out as ``(batch, channels, width)``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv1d_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray):
    """Stride-1 convolution with 'same' zero padding; ``weight`` is ``(out, in, k)``, k odd."""
    batch, c_in, width = x.shape
    c_out, _, k = weight.shape
    pad = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
    # (B, C, W, k) -> (B*W, C*k)
    cols = sliding_window_view(xp, k, axis=2).transpose(0, 2, 1, 3).reshape(batch * width, c_in * k)
    wmat = weight.reshape(c_out, c_in * k)
    out = cols @ wmat.T + bias
    return out.reshape(batch, width, c_out).transpose(0, 2, 1), (cols, x.shape, weight)


def conv1d_backward(grad: np.ndarray, cache):
    cols, (batch, c_in, width), weight = cache
    c_out, _, k = weight.shape
    pad = k // 2
    g2 = grad.transpose(0, 2, 1).reshape(batch * width, c_out)
    d_weight = (g2.T @ cols).reshape(weight.shape)
    d_bias = g2.sum(axis=0)
    dcols = (g2 @ weight.reshape(c_out, c_in * k)).reshape(batch, width, c_in, k)
    dxp = np.zeros((batch, c_in, width + 2 * pad))
    for j in range(k):
        dxp[:, :, j:j + width] += dcols[:, :, :, j].transpose(0, 2, 1)
    return dxp[:, :, pad:pad + width], d_weight, d_bias


def relu_forward(x: np.ndarray):
    mask = x > 0
    return x * mask, mask


def relu_backward(grad: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return grad * mask


def maxpool2_forward(x: np.ndarray):
    batch, c, width = x.shape
    pairs = x.reshape(batch, c, width // 2, 2)
    take_right = pairs[..., 1] > pairs[..., 0]
    return np.where(take_right, pairs[..., 1], pairs[..., 0]), (take_right, x.shape)


def maxpool2_backward(grad: np.ndarray, cache) -> np.ndarray:
    take_right, shape = cache
    dx = np.zeros(shape[:2] + (shape[2] // 2, 2))
    dx[..., 0] = np.where(take_right, 0.0, grad)
    dx[..., 1] = np.where(take_right, grad, 0.0)
    return dx.reshape(shape)


def global_avg_pool_forward(x: np.ndarray):
    return x.mean(axis=2), x.shape


def global_avg_pool_backward(grad: np.ndarray, shape) -> np.ndarray:
    return np.broadcast_to(grad[:, :, None] / shape[2], shape).copy()


def dense_forward(x: np.ndarray, weight: np.ndarray, bias: np.ndarray):
    """``weight`` is ``(out, in)``."""
    return x @ weight.T + bias, (x, weight)


def dense_backward(grad: np.ndarray, cache):
    x, weight = cache
    return grad @ weight, grad.T @ x, grad.sum(axis=0)
