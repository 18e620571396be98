"""Optimizers: bias-corrected Adam and SGD with a decaying learning rate."""

from __future__ import annotations

import numpy as np


class Adam:
    """Standard Adam with bias correction.

    Defaults lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8.  A zero gradient
    leaves parameters unchanged.
    """

    def __init__(self, params, lr: float = 0.001, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ValueError(f"lr must be > 0, got {lr}")
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1.0 - b1 ** self.t
        bias2 = 1.0 - b2 ** self.t
        for p in self.params:
            if p.m is None:
                p.m = np.zeros_like(p.value)
                p.v = np.zeros_like(p.value)
            g = p.grad
            p.m = b1 * p.m + (1.0 - b1) * g
            p.v = b2 * p.v + (1.0 - b2) * g * g
            m_hat = p.m / bias1
            v_hat = p.v / bias2
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class SgdDecay:
    """Mini-batch SGD with lr(epoch) = lr0 / (1 + decay * epoch) and L2.

    The update is theta <- theta - lr * (grad + l2 * theta).
    """

    def __init__(self, params, lr0: float = 0.015, decay: float = 0.05,
                 l2: float = 1e-8):
        if lr0 <= 0:
            raise ValueError(f"lr0 must be > 0, got {lr0}")
        if decay < 0 or l2 < 0:
            raise ValueError("decay and l2 must be >= 0")
        self.params = list(params)
        self.lr0 = lr0
        self.decay = decay
        self.l2 = l2

    def learning_rate(self, epoch: int) -> float:
        return self.lr0 / (1.0 + self.decay * epoch)

    def step(self, epoch: int):
        lr = self.learning_rate(epoch)
        for p in self.params:
            p.value -= lr * (p.grad + self.l2 * p.value)
