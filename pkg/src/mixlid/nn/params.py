"""Parameters, initialization, and the checked array constructor."""

from __future__ import annotations

import numpy as np

TRAIN = "train"
INFER = "infer"


def as_tensor(data, dtype=np.float64) -> np.ndarray:
    """Array constructor that rejects non-finite values."""
    arr = np.asarray(data, dtype=dtype)
    if not np.all(np.isfinite(arr)):
        raise ValueError("tensor contains NaN or Inf")
    return arr


class Parameter:
    """A trainable array with a same-shaped gradient slot.

    Optimizers lazily attach first/second-moment slots (`m`, `v`).
    """

    __slots__ = ("name", "value", "grad", "m", "v")

    def __init__(self, value: np.ndarray, name: str = ""):
        self.name = name
        self.value = as_tensor(value)
        self.grad = np.zeros_like(self.value)
        self.m = None
        self.v = None

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Parameter({self.name or 'unnamed'}, shape={self.value.shape})"


def zero_grads(params) -> None:
    for p in params:
        p.zero_grad()


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int,
                   name: str = "") -> Parameter:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Parameter(rng.uniform(-limit, limit, size=shape), name)


def embedding_table(rng: np.random.Generator, vocab_size: int, dim: int,
                    name: str = "") -> Parameter:
    return Parameter(rng.uniform(-0.1, 0.1, size=(vocab_size, dim)), name)


def zeros(shape, name: str = "") -> Parameter:
    return Parameter(np.zeros(shape), name)
