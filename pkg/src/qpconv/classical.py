"""Minimal classical CNN pieces in numpy.

Feature batches are ``(N, H, W, C)``. Each layer caches what its backward
pass needs during ``forward`` and exposes ``params``/``grads`` as parallel
lists of arrays that the optimizer updates in place.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class DegenerateBatchError(ValueError):
    pass


# =============================================================================
# Functional ops
# =============================================================================

def _windows(x: np.ndarray) -> np.ndarray:
    """3x3 neighbourhoods of a zero-padded batch: (N, H, W, C, 3, 3)."""
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    return sliding_window_view(xp, (3, 3), axis=(1, 2))


def conv3x3_forward(weights: np.ndarray, input: np.ndarray) -> np.ndarray:
    """Cross-correlation with a (3, 3, C_in, C_out) kernel, padding 1, stride 1.

    Accepts a single (H, W, C) image or an (N, H, W, C) batch.
    """
    single = input.ndim == 3
    x = input[None] if single else input
    if weights.shape[:2] != (3, 3) or weights.shape[2] != x.shape[-1]:
        raise ValueError(f"kernel {weights.shape} does not fit {x.shape[-1]} input channels")
    out = np.einsum("nhwcij,ijco->nhwo", _windows(x), weights, optimize=True)
    return out[0] if single else out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_mask(x: np.ndarray) -> np.ndarray:
    return (x > 0).astype(np.float64)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def softmax_cross_entropy(logits, label: int) -> tuple[float, np.ndarray]:
    logits = np.asarray(logits, dtype=np.float64)
    k = logits.shape[0]
    if k < 2:
        raise ValueError("need at least two classes")
    if not 0 <= label < k:
        raise IndexError(f"label {label} out of range for {k} classes")
    z = logits - logits.max()
    log_probs = z - np.log(np.sum(np.exp(z)))
    probs = np.exp(log_probs)
    grad = probs.copy()
    grad[label] -= 1.0
    return float(-log_probs[label]), grad


def batch_cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean loss over the batch and its gradient w.r.t. the (N, K) logits."""
    n, k = logits.shape
    if np.any(labels < 0) or np.any(labels >= k):
        raise IndexError(f"labels must lie in [0, {k})")
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.sum(np.exp(z), axis=1, keepdims=True))
    rows = np.arange(n)
    loss = -np.mean(log_probs[rows, labels])
    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    return float(loss), grad / n


def cosine_lr(epoch: int, total_epochs: int, lr0: float, lr_min: float = 0.0) -> float:
    if total_epochs < 1:
        raise ValueError("total_epochs must be positive")
    if not 0 <= epoch <= total_epochs:
        raise ValueError(f"epoch {epoch} outside [0, {total_epochs}]")
    return lr_min + 0.5 * (lr0 - lr_min) * (1 + math.cos(math.pi * epoch / total_epochs))


def dropout(x: np.ndarray, rate: float, training: bool, rng: np.random.Generator):
    """Inverted dropout. Returns (output, mask) where mask already carries the 1/(1-rate) scale."""
    if not 0 <= rate < 1:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0:
        return x, None
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


# =============================================================================
# Optimizer
# =============================================================================

@dataclass
class OptimizerState:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(state: OptimizerState, params: list, grads: list, lr: float | None = None):
    """One bias-corrected Adam update, applied to ``params`` in place."""
    if len(params) != len(grads):
        raise ValueError("params and grads differ in length")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    lr = state.lr if lr is None else lr
    state.t += 1
    c1 = 1 - state.beta1 ** state.t
    c2 = 1 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape or p.shape != m.shape:
            raise ValueError(f"shape mismatch: param {p.shape}, grad {g.shape}")
        m *= state.beta1
        m += (1 - state.beta1) * g
        v *= state.beta2
        v += (1 - state.beta2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


# =============================================================================
# Layers
# =============================================================================

def uniform_init(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    bound = math.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Layer:
    def __init__(self):
        self.params = []
        self.grads = []

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def out_shape(self, in_shape: tuple) -> tuple:
        return in_shape

    @property
    def n_params(self) -> int:
        return sum(p.size for p in self.params)


class Conv3x3(Layer):
    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator):
        super().__init__()
        self.weight = uniform_init(rng, (3, 3, c_in, c_out), 9 * c_in)
        self.bias = uniform_init(rng, (c_out,), 9 * c_in)
        self.params = [self.weight, self.bias]
        self.grads = [np.zeros_like(self.weight), np.zeros_like(self.bias)]

    def forward(self, x, training=False):
        self._windows = _windows(x)
        return np.einsum("nhwcij,ijco->nhwo", self._windows, self.weight,
                         optimize=True) + self.bias

    def backward(self, grad):
        self.grads[0][...] = np.einsum("nhwcij,nhwo->ijco", self._windows, grad, optimize=True)
        self.grads[1][...] = grad.sum(axis=(0, 1, 2))
        flipped = self.weight[::-1, ::-1]
        return np.einsum("nhwoij,ijco->nhwc", _windows(grad), flipped, optimize=True)

    def out_shape(self, in_shape):
        return in_shape[:-1] + (self.weight.shape[3],)


class ReLU(Layer):
    def forward(self, x, training=False):
        self._mask = relu_mask(x)
        return x * self._mask

    def backward(self, grad):
        return grad * self._mask


class Flatten(Layer):
    def forward(self, x, training=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._shape)

    def out_shape(self, in_shape):
        return (int(np.prod(in_shape)),)


class Dense(Layer):
    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator):
        super().__init__()
        self.weight = uniform_init(rng, (c_in, c_out), c_in)
        self.bias = uniform_init(rng, (c_out,), c_in)
        self.params = [self.weight, self.bias]
        self.grads = [np.zeros_like(self.weight), np.zeros_like(self.bias)]

    def forward(self, x, training=False):
        self._x = x
        return x @ self.weight + self.bias

    def backward(self, grad):
        x = self._x.reshape(-1, self._x.shape[-1])
        g = grad.reshape(-1, grad.shape[-1])
        self.grads[0][...] = x.T @ g
        self.grads[1][...] = g.sum(axis=0)
        return grad @ self.weight.T

    def out_shape(self, in_shape):
        return in_shape[:-1] + (self.weight.shape[1],)


class ClassicalPointwise(Dense):
    """1x1 convolution: a dense map applied to every pixel's channel vector."""


class Dropout(Layer):
    def __init__(self, rate: float, rng: np.random.Generator):
        super().__init__()
        if not 0 <= rate < 1:
            raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.rng = rng

    def forward(self, x, training=False):
        out, self._mask = dropout(x, self.rate, training, self.rng)
        return out

    def backward(self, grad):
        return grad if self._mask is None else grad * self._mask


class BatchNorm(Layer):
    """Per-channel normalization over every axis but the last."""

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.gamma = np.ones(channels)
        self.beta = np.zeros(channels)
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self.momentum = momentum
        self.eps = eps
        self.params = [self.gamma, self.beta]
        self.grads = [np.zeros(channels), np.zeros(channels)]

    def forward(self, x, training=False):
        return batchnorm_forward(self, x, training)

    def backward(self, grad):
        axes = tuple(range(grad.ndim - 1))
        m = grad.size // grad.shape[-1]
        xhat = self._xhat
        self.grads[0][...] = np.sum(grad * xhat, axis=axes)
        self.grads[1][...] = np.sum(grad, axis=axes)
        if not self._training:
            return grad * self.gamma * self._inv_std
        dxhat = grad * self.gamma
        return (self._inv_std / m) * (m * dxhat - dxhat.sum(axis=axes)
                                      - xhat * np.sum(dxhat * xhat, axis=axes))


def batchnorm_forward(bn: BatchNorm, x: np.ndarray, training: bool) -> np.ndarray:
    axes = tuple(range(x.ndim - 1))
    m = x.size // x.shape[-1]
    if training:
        if m < 2:
            raise DegenerateBatchError("batch norm needs at least 2 values per channel to train")
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        bn.running_mean[...] = (1 - bn.momentum) * bn.running_mean + bn.momentum * mean
        bn.running_var[...] = ((1 - bn.momentum) * bn.running_var
                               + bn.momentum * var * m / (m - 1))
    else:
        mean, var = bn.running_mean, bn.running_var
    bn._training = training
    bn._inv_std = 1.0 / np.sqrt(var + bn.eps)
    bn._xhat = (x - mean) * bn._inv_std
    return bn.gamma * bn._xhat + bn.beta
