"""Central finite-difference verification of analytic gradients.

Used at 64-bit precision only; callers keep test inputs away from relu
and max-pool kinks so the numeric derivative is well-defined.
"""

from __future__ import annotations

import numpy as np

from .params import Parameter, zero_grads


def finite_difference_grads(loss_fn, params, eps: float = 1e-5):
    """Central differences of loss_fn over every coordinate of every param.

    loss_fn is a forward-only closure returning a scalar; parameter values
    are perturbed in place and restored.
    """
    grads = []
    for p in params:
        flat = p.value.ravel()
        g = np.zeros(flat.size)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            loss_plus = loss_fn()
            flat[i] = orig - eps
            loss_minus = loss_fn()
            flat[i] = orig
            g[i] = (loss_plus - loss_minus) / (2.0 * eps)
        grads.append(g.reshape(p.value.shape))
    return grads


def relative_errors(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return np.abs(analytic - numeric) / denom


def grad_check(loss_and_backward, params, eps: float = 1e-5) -> float:
    """Max relative error between analytic and finite-difference gradients.

    loss_and_backward() must run forward and backward, accumulating into
    param.grad, and return the scalar loss.  Inputs can be checked too by
    wrapping them as Parameters that the closure reads and writes grads to.
    """
    params = list(params)
    zero_grads(params)
    loss = loss_and_backward()
    if not np.isfinite(loss):
        raise ValueError("non-finite loss in gradient check")
    analytic = [p.grad.copy() for p in params]

    def forward_only():
        zero_grads(params)
        return loss_and_backward()

    numeric = finite_difference_grads(forward_only, params, eps)
    worst = 0.0
    for a, n in zip(analytic, numeric):
        if a.size:
            worst = max(worst, float(relative_errors(a, n).max()))
    return worst


def input_parameter(x) -> Parameter:
    """Wrap an input array so grad_check can perturb it like a parameter."""
    return Parameter(np.asarray(x, dtype=np.float64), "input")
