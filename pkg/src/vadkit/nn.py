"""Minimal convolutional building blocks with exact backward passes.

Everything here works on float32 NCHW arrays.  The scope is deliberately
small: strided 2-D convolution, leaky ReLU, per-position L2 normalization and
momentum SGD; exactly what the toy extractor and the student-teacher trainer
need, with gradients that are unit-checked against finite differences.
"""

import numpy as np

F32 = np.float32


def _im2col(x, kh, kw, stride, pad):
    n, c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (w + 2 * pad - kw) // stride + 1
    cols = np.empty((n, c, kh, kw, ho, wo), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i:i + stride * (ho - 1) + 1:stride,
                                  j:j + stride * (wo - 1) + 1:stride]
    return cols, ho, wo


def _col2im(dcols, x_shape, stride, pad):
    n, c, h, w = x_shape
    kh, kw = dcols.shape[2], dcols.shape[3]
    ho, wo = dcols.shape[4], dcols.shape[5]
    dxp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=dcols.dtype)
    for i in range(kh):
        for j in range(kw):
            dxp[:, :, i:i + stride * (ho - 1) + 1:stride,
                j:j + stride * (wo - 1) + 1:stride] += dcols[:, :, i, j]
    if pad:
        return dxp[:, :, pad:h + pad, pad:w + pad]
    return dxp


def conv2d_forward(x, w, b, stride=1, pad=0):
    """y[n,f] = sum_c x[n,c] * w[f,c] + b[f].  Returns (y, cache)."""
    cols, ho, wo = _im2col(x, w.shape[2], w.shape[3], stride, pad)
    y = np.tensordot(cols, w, axes=([1, 2, 3], [1, 2, 3]))  # (n, ho, wo, f)
    y = np.ascontiguousarray(y.transpose(0, 3, 1, 2))
    if b is not None:
        y += b.reshape(1, -1, 1, 1)
    cache = (x.shape, cols, w, stride, pad)
    return y, cache


def conv2d_backward(dy, cache):
    """Gradients (dx, dw, db) for :func:`conv2d_forward`."""
    x_shape, cols, w, stride, pad = cache
    db = dy.sum(axis=(0, 2, 3))
    dw = np.tensordot(dy, cols, axes=([0, 2, 3], [0, 4, 5]))  # (f, c, kh, kw)
    dcols = np.tensordot(dy, w, axes=([1], [0]))  # (n, ho, wo, c, kh, kw)
    dcols = dcols.transpose(0, 3, 4, 5, 1, 2)
    dx = _col2im(np.ascontiguousarray(dcols), x_shape, stride, pad)
    return dx, dw.astype(dy.dtype, copy=False), db.astype(dy.dtype, copy=False)


def leaky_relu(x, alpha=0.1):
    return np.where(x > 0, x, x * np.asarray(alpha, dtype=x.dtype))


def leaky_relu_backward(dy, x, alpha=0.1):
    scale = np.where(x > 0, np.asarray(1.0, dtype=dy.dtype),
                     np.asarray(alpha, dtype=dy.dtype))
    return dy * scale


def l2_normalize(feats, eps=1e-12):
    """Normalize channel vectors per spatial position: f / max(|f|, eps).

    ``feats`` is (N, C, H, W); returns (normalized, norms) with norms
    (N, 1, H, W).
    """
    norms = np.sqrt(np.sum(feats * feats, axis=1, keepdims=True))
    norms = np.maximum(norms, np.asarray(eps, dtype=feats.dtype))
    return feats / norms, norms


def he_normal(rng, shape, fan_in, dtype=F32):
    std = np.sqrt(2.0 / fan_in)
    return (rng.standard_normal(shape) * std).astype(dtype)


class SGDMomentum:
    """Classic momentum SGD: v <- mu*v + g; p <- p - lr*v (float32)."""

    def __init__(self, lr, momentum=0.9):
        self.lr = F32(lr)
        self.momentum = F32(momentum)
        self._velocity = {}

    def step(self, params: dict, grads: dict):
        for key, p in params.items():
            g = grads[key].astype(F32, copy=False)
            v = self._velocity.get(key)
            v = g if v is None else self.momentum * v + g
            self._velocity[key] = v
            params[key] = (p - self.lr * v).astype(F32, copy=False)
        return params
