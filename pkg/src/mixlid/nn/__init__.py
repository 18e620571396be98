"""Minimal dense-tensor neural-network core with verified gradients."""

from .gradcheck import (
    finite_difference_grads,
    grad_check,
    input_parameter,
    relative_errors,
)
from .layers import (
    BiLSTM,
    Conv1DLayer,
    DenseLayer,
    EmbeddingLayer,
    LSTMLayer,
    dropout_backward,
    dropout_forward,
    max_pool1d_backward,
    max_pool1d_forward,
    relu,
    sigmoid,
)
from .losses import bce_loss
from .optim import Adam, SgdDecay
from .params import INFER, TRAIN, Parameter, as_tensor, zero_grads

__all__ = [
    "Adam",
    "BiLSTM",
    "Conv1DLayer",
    "DenseLayer",
    "EmbeddingLayer",
    "INFER",
    "LSTMLayer",
    "Parameter",
    "SgdDecay",
    "TRAIN",
    "as_tensor",
    "bce_loss",
    "dropout_backward",
    "dropout_forward",
    "finite_difference_grads",
    "grad_check",
    "input_parameter",
    "max_pool1d_backward",
    "max_pool1d_forward",
    "relative_errors",
    "relu",
    "sigmoid",
    "zero_grads",
]
