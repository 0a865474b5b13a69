"""Layers of the dense-tensor engine: conv2d, dense, activations.

Every layer caches what its backward pass needs during forward, so a layer
instance handles one in-flight batch at a time. Convolutions use "same"
zero padding with stride 1 (the plane size is preserved), implemented as an
im2col matrix product.

Weight initialization is fan-in-scaled uniform, U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
"""

import numpy as np

from .tensor import Tensor


def _init_uniform(rng, shape, fan_in):
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


class Layer:
    def params(self):
        return []

    def forward(self, x):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError


class Conv2D(Layer):
    """Stride-1 same-padding 2-D convolution on (batch, H, W, C) arrays."""

    def __init__(self, in_channels, out_channels, kernel_h, kernel_w, rng):
        if kernel_h % 2 == 0 or kernel_w % 2 == 0:
            raise ValueError("same padding requires odd kernel sizes")
        fan_in = kernel_h * kernel_w * in_channels
        self.w = Tensor(_init_uniform(rng, (kernel_h, kernel_w, in_channels,
                                            out_channels), fan_in))
        self.b = Tensor(np.zeros(out_channels))
        self.kh, self.kw = kernel_h, kernel_w
        self.in_channels = in_channels
        self.out_channels = out_channels
        self._cols = None
        self._x_shape = None

    def params(self):
        return [self.w, self.b]

    def _im2col(self, x):
        batch, h, w, c = x.shape
        ph, pw = self.kh // 2, self.kw // 2
        xp = np.zeros((batch, h + 2 * ph, w + 2 * pw, c))
        xp[:, ph:ph + h, pw:pw + w, :] = x
        cols = np.empty((batch, h, w, self.kh * self.kw * c))
        t = 0
        for di in range(self.kh):
            for dj in range(self.kw):
                cols[..., t * c:(t + 1) * c] = xp[:, di:di + h, dj:dj + w, :]
                t += 1
        return cols

    def forward(self, x):
        if x.ndim != 4 or x.shape[3] != self.in_channels:
            raise ValueError(f"conv2d expected (B, H, W, {self.in_channels}) input, "
                             f"got {x.shape}")
        batch, h, w, _ = x.shape
        cols = self._im2col(x)
        self._cols = cols
        self._x_shape = x.shape
        flat = cols.reshape(-1, cols.shape[-1])
        y = flat @ self.w.values.reshape(-1, self.out_channels)
        y += self.b.values
        return y.reshape(batch, h, w, self.out_channels)

    def backward(self, dy):
        batch, h, w, _ = self._x_shape
        c = self.in_channels
        dy_mat = dy.reshape(-1, self.out_channels)
        cols_mat = self._cols.reshape(-1, self._cols.shape[-1])
        self.w.grad += (cols_mat.T @ dy_mat).reshape(self.w.shape)
        self.b.grad += dy_mat.sum(axis=0)

        dcols = (dy_mat @ self.w.values.reshape(-1, self.out_channels).T)
        dcols = dcols.reshape(batch, h, w, -1)
        ph, pw = self.kh // 2, self.kw // 2
        dxp = np.zeros((batch, h + 2 * ph, w + 2 * pw, c))
        t = 0
        for di in range(self.kh):
            for dj in range(self.kw):
                dxp[:, di:di + h, dj:dj + w, :] += dcols[..., t * c:(t + 1) * c]
                t += 1
        return dxp[:, ph:ph + h, pw:pw + w, :]


class Dense(Layer):
    def __init__(self, in_features, out_features, rng):
        self.w = Tensor(_init_uniform(rng, (in_features, out_features), in_features))
        self.b = Tensor(np.zeros(out_features))
        self._x = None

    def params(self):
        return [self.w, self.b]

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.w.shape[0]:
            raise ValueError(f"dense expected (B, {self.w.shape[0]}) input, got {x.shape}")
        self._x = x
        return x @ self.w.values + self.b.values

    def backward(self, dy):
        self.w.grad += self._x.T @ dy
        self.b.grad += dy.sum(axis=0)
        return dy @ self.w.values.T


class ReLU(Layer):
    def __init__(self):
        self._mask = None

    def forward(self, x):
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy):
        return np.where(self._mask, dy, 0.0)


class UpperClamp(Layer):
    """Caps activations at ``hi``; gradient is zero above the cap."""

    def __init__(self, hi=1.0):
        self.hi = hi
        self._mask = None

    def forward(self, x):
        self._mask = x < self.hi
        return np.where(self._mask, x, self.hi)

    def backward(self, dy):
        return np.where(self._mask, dy, 0.0)


class Flatten(Layer):
    def __init__(self):
        self._shape = None

    def forward(self, x):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._shape)


def softmax(logits):
    """Row-wise softmax, numerically stabilized."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)
