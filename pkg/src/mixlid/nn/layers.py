"""Dense-array layers with hand-written backward passes.

Every sequence layer is batch-first: inputs are [batch, steps, features]
(id matrices [batch, steps] for the embedding).  `forward` returns
(output, cache); `backward(cache, grad_out)` accumulates parameter
gradients and returns the input gradient.  Shape mismatches raise;
nothing broadcasts silently.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .params import INFER, TRAIN, Parameter, glorot_uniform, embedding_table, zeros


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


class EmbeddingLayer:
    """Lookup table [vocab_size, dim]; ids [B, T] -> [B, T, dim]."""

    def __init__(self, rng, vocab_size: int, dim: int, name: str = "embedding"):
        self.vocab_size = vocab_size
        self.dim = dim
        self.table = embedding_table(rng, vocab_size, dim, name)

    def params(self):
        return [self.table]

    def forward(self, ids: np.ndarray):
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= self.vocab_size):
            raise ValueError(f"character id out of range [0, {self.vocab_size})")
        return self.table.value[ids], ids

    def backward(self, cache, grad_out: np.ndarray):
        ids = cache
        # Scatter-add: repeated ids accumulate row gradients.
        np.add.at(self.table.grad, ids, grad_out)
        return None


class Conv1DLayer:
    """Valid 1-D convolution, stride 1, relu; [B, T, C] -> [B, T-k+1, F]."""

    def __init__(self, rng, in_dim: int, kernel_size: int, filters: int,
                 name: str = "conv"):
        self.kernel_size = kernel_size
        self.in_dim = in_dim
        self.filters = filters
        fan_in = kernel_size * in_dim
        self.kernels = glorot_uniform(
            rng, (filters, kernel_size, in_dim), fan_in, filters, f"{name}.kernels")
        self.bias = zeros(filters, f"{name}.bias")

    def params(self):
        return [self.kernels, self.bias]

    def forward(self, x: np.ndarray):
        if x.ndim != 3 or x.shape[2] != self.in_dim:
            raise ValueError(f"expected [B, T, {self.in_dim}], got {x.shape}")
        if x.shape[1] < self.kernel_size:
            raise ValueError(
                f"input length {x.shape[1]} < kernel size {self.kernel_size}")
        windows = sliding_window_view(x, self.kernel_size, axis=1)  # [B, T', C, k]
        pre = np.tensordot(windows, self.kernels.value, axes=([2, 3], [2, 1]))
        pre += self.bias.value
        return relu(pre), (windows, pre)

    def backward(self, cache, grad_out: np.ndarray):
        windows, pre = cache
        dpre = grad_out * (pre > 0)
        self.kernels.grad += np.tensordot(
            dpre, windows, axes=([0, 1], [0, 1])).transpose(0, 2, 1)
        self.bias.grad += dpre.sum(axis=(0, 1))
        batch, out_len, _ = dpre.shape
        dx = np.zeros((batch, out_len + self.kernel_size - 1, self.in_dim))
        for j in range(self.kernel_size):
            dx[:, j:j + out_len, :] += dpre @ self.kernels.value[:, j, :]
        return dx


def max_pool1d_forward(x: np.ndarray, pool: int):
    """Non-overlapping windows along the step axis; remainder steps dropped.

    [B, T, C] -> [B, T//pool, C].  Backward routes each window's gradient to
    the first maximal element.
    """
    if x.ndim != 3:
        raise ValueError(f"expected [B, T, C], got {x.shape}")
    batch, length, channels = x.shape
    if length < pool:
        raise ValueError(f"input length {length} < pool {pool}")
    windows = length // pool
    xr = x[:, :windows * pool, :].reshape(batch, windows, pool, channels)
    idx = xr.argmax(axis=2)
    out = np.take_along_axis(xr, idx[:, :, None, :], axis=2)[:, :, 0, :]
    return out, (idx, x.shape, pool)


def max_pool1d_backward(cache, grad_out: np.ndarray) -> np.ndarray:
    idx, x_shape, pool = cache
    batch, length, channels = x_shape
    windows = length // pool
    dxr = np.zeros((batch, windows, pool, channels))
    np.put_along_axis(dxr, idx[:, :, None, :], grad_out[:, :, None, :], axis=2)
    dx = np.zeros(x_shape)
    dx[:, :windows * pool, :] = dxr.reshape(batch, windows * pool, channels)
    return dx


def dropout_forward(x: np.ndarray, rate: float, mode: str,
                    rng: np.random.Generator | None = None):
    """Inverted dropout: survivors scaled by 1/(1-rate); INFER is identity."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if mode == INFER or rate == 0.0:
        return x, None
    if mode != TRAIN:
        raise ValueError(f"unknown mode {mode!r}")
    if rng is None:
        raise ValueError("TRAIN-mode dropout needs an explicit rng")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(cache, grad_out: np.ndarray) -> np.ndarray:
    if cache is None:
        return grad_out
    return grad_out * cache


class LSTMLayer:
    """Single-direction LSTM over [B, T, in_dim].

    Gate pre-activations are packed as one [*, 4*hidden] matrix in
    (input, forget, candidate, output) order; gates use sigmoid, the
    candidate and cell output tanh.  Initial hidden and cell states are
    zero.  Backward is full backpropagation through time.
    """

    def __init__(self, rng, in_dim: int, hidden: int, name: str = "lstm"):
        self.in_dim = in_dim
        self.hidden = hidden
        self.wx = glorot_uniform(rng, (in_dim, 4 * hidden), in_dim, hidden,
                                 f"{name}.wx")
        self.wh = glorot_uniform(rng, (hidden, 4 * hidden), hidden, hidden,
                                 f"{name}.wh")
        self.b = zeros(4 * hidden, f"{name}.b")

    def params(self):
        return [self.wx, self.wh, self.b]

    def forward(self, x: np.ndarray, return_sequence: bool = True):
        if x.ndim != 3 or x.shape[2] != self.in_dim:
            raise ValueError(f"expected [B, T, {self.in_dim}], got {x.shape}")
        batch, length, _ = x.shape
        hid = self.hidden
        h = np.zeros((batch, hid))
        c = np.zeros((batch, hid))
        steps = []
        outputs = np.zeros((batch, length, hid))
        for t in range(length):
            xt = x[:, t, :]
            z = xt @ self.wx.value + h @ self.wh.value + self.b.value
            gi = sigmoid(z[:, :hid])
            gf = sigmoid(z[:, hid:2 * hid])
            gg = np.tanh(z[:, 2 * hid:3 * hid])
            go = sigmoid(z[:, 3 * hid:])
            c_prev, h_prev = c, h
            c = gf * c_prev + gi * gg
            hc = np.tanh(c)
            h = go * hc
            outputs[:, t, :] = h
            steps.append((xt, h_prev, c_prev, gi, gf, gg, go, hc))
        cache = (steps, x.shape, return_sequence)
        return (outputs if return_sequence else h), cache

    def backward(self, cache, grad_out: np.ndarray) -> np.ndarray:
        steps, x_shape, return_sequence = cache
        batch, length, _ = x_shape
        hid = self.hidden
        dx = np.zeros(x_shape)
        dh_next = np.zeros((batch, hid))
        dc_next = np.zeros((batch, hid))
        for t in reversed(range(length)):
            xt, h_prev, c_prev, gi, gf, gg, go, hc = steps[t]
            if return_sequence:
                dh = dh_next + grad_out[:, t, :]
            else:
                dh = dh_next + grad_out if t == length - 1 else dh_next
            dc = dc_next + dh * go * (1.0 - hc * hc)
            dz = np.concatenate([
                dc * gg * gi * (1.0 - gi),
                dc * c_prev * gf * (1.0 - gf),
                dc * gi * (1.0 - gg * gg),
                dh * hc * go * (1.0 - go),
            ], axis=1)
            self.wx.grad += xt.T @ dz
            self.wh.grad += h_prev.T @ dz
            self.b.grad += dz.sum(axis=0)
            dx[:, t, :] = dz @ self.wx.value.T
            dh_next = dz @ self.wh.value.T
            dc_next = dc * gf
        return dx


class BiLSTM:
    """Forward and reversed-input LSTM passes concatenated per position.

    With return_sequence=False the two directions' final hidden states are
    concatenated instead: [B, 2*hidden].
    """

    def __init__(self, rng, in_dim: int, hidden: int, name: str = "bilstm"):
        self.hidden = hidden
        self.fwd = LSTMLayer(rng, in_dim, hidden, f"{name}.fwd")
        self.bwd = LSTMLayer(rng, in_dim, hidden, f"{name}.bwd")

    def params(self):
        return self.fwd.params() + self.bwd.params()

    def forward(self, x: np.ndarray, return_sequence: bool = True):
        out_f, cache_f = self.fwd.forward(x, return_sequence)
        out_b, cache_b = self.bwd.forward(x[:, ::-1, :], return_sequence)
        if return_sequence:
            out = np.concatenate([out_f, out_b[:, ::-1, :]], axis=2)
        else:
            out = np.concatenate([out_f, out_b], axis=1)
        return out, (cache_f, cache_b, return_sequence)

    def backward(self, cache, grad_out: np.ndarray) -> np.ndarray:
        cache_f, cache_b, return_sequence = cache
        hid = self.hidden
        if return_sequence:
            d_f = grad_out[:, :, :hid]
            d_b = grad_out[:, ::-1, hid:]
        else:
            d_f = grad_out[:, :hid]
            d_b = grad_out[:, hid:]
        dx = self.fwd.backward(cache_f, d_f)
        dx += self.bwd.backward(cache_b, d_b)[:, ::-1, :]
        return dx


class DenseLayer:
    """Affine map plus activation; weight is [out, in]."""

    def __init__(self, rng, in_dim: int, out_dim: int, activation: str = "identity",
                 name: str = "dense"):
        if activation not in ("relu", "sigmoid", "identity"):
            raise ValueError(f"unknown activation {activation!r}")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.activation = activation
        self.weight = glorot_uniform(rng, (out_dim, in_dim), in_dim, out_dim,
                                     f"{name}.weight")
        self.bias = zeros(out_dim, f"{name}.bias")

    def params(self):
        return [self.weight, self.bias]

    def forward(self, x: np.ndarray):
        if x.shape[-1] != self.in_dim:
            raise ValueError(f"expected [..., {self.in_dim}], got {x.shape}")
        pre = x @ self.weight.value.T + self.bias.value
        if self.activation == "relu":
            out = relu(pre)
        elif self.activation == "sigmoid":
            out = sigmoid(pre)
        else:
            out = pre
        return out, (x, pre, out)

    def backward(self, cache, grad_out: np.ndarray) -> np.ndarray:
        x, pre, out = cache
        if self.activation == "relu":
            dpre = grad_out * (pre > 0)
        elif self.activation == "sigmoid":
            dpre = grad_out * out * (1.0 - out)
        else:
            dpre = grad_out
        flat_x = x.reshape(-1, self.in_dim)
        flat_d = dpre.reshape(-1, self.out_dim)
        self.weight.grad += flat_d.T @ flat_x
        self.bias.grad += flat_d.sum(axis=0)
        return dpre @ self.weight.value
