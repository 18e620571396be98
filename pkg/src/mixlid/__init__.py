"""Two-stage word-level language identification for code-mixed text.

A four-channel convolution/LSTM word scorer with threshold calibration
feeds a Bi-LSTM-CRF context tagger; both run on a small, self-contained
numerical core with finite-difference-verified gradients.
"""

__version__ = "0.1.0"
