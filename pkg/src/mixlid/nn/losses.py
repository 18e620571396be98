"""Binary cross-entropy on sigmoid scores."""

from __future__ import annotations

import numpy as np

CLAMP_EPS = 1e-7


def bce_loss(p, y):
    """Elementwise -[y ln p + (1-y) ln(1-p)] and dL/dp.

    Predictions are clamped to [1e-7, 1 - 1e-7] before the logs; the
    gradient is taken at the clamped value.
    """
    p = np.clip(np.asarray(p, dtype=np.float64), CLAMP_EPS, 1.0 - CLAMP_EPS)
    y = np.asarray(y, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError(f"prediction/label shape mismatch: {p.shape} vs {y.shape}")
    loss = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    grad = (p - y) / (p * (1.0 - p))
    return loss, grad
