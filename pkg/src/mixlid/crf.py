"""Exact linear-chain CRF over a small label set.

Transitions live in a [L+2, L+2] matrix whose last two rows/columns are
virtual START and STOP states; entries into START and out of STOP are
structurally never read.  All arithmetic is in log space with max-shifted
logsumexp.  Gradients of the log-partition are posterior marginals and
expected transition counts, obtained by backpropagating through the
forward recursion.
"""

from __future__ import annotations

import itertools

import numpy as np

N_LABELS = 2


def start_index(n_labels: int) -> int:
    return n_labels


def stop_index(n_labels: int) -> int:
    return n_labels + 1


def transition_shape(n_labels: int) -> tuple[int, int]:
    return (n_labels + 2, n_labels + 2)


def _logsumexp(a: np.ndarray, axis=None):
    if axis is None:
        m = float(np.max(a))
        return m + float(np.log(np.sum(np.exp(a - m))))
    m = np.max(a, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis)


def _check(emissions: np.ndarray, transitions: np.ndarray):
    emissions = np.asarray(emissions, dtype=np.float64)
    transitions = np.asarray(transitions, dtype=np.float64)
    if emissions.ndim != 2 or emissions.shape[0] < 1:
        raise ValueError(f"emissions must be [T, L] with T >= 1, got {emissions.shape}")
    n_labels = emissions.shape[1]
    if transitions.shape != transition_shape(n_labels):
        raise ValueError(
            f"transitions must be {transition_shape(n_labels)}, got {transitions.shape}")
    if not (np.all(np.isfinite(emissions)) and np.all(np.isfinite(transitions))):
        raise ValueError("non-finite CRF inputs")
    return emissions, transitions, n_labels


def crf_score(emissions, transitions, tags) -> float:
    """Unnormalized path score including START and STOP boundary terms."""
    emissions, transitions, n_labels = _check(emissions, transitions)
    tags = list(tags)
    if len(tags) != emissions.shape[0]:
        raise ValueError(f"{len(tags)} tags for {emissions.shape[0]} positions")
    start, stop = start_index(n_labels), stop_index(n_labels)
    score = transitions[start, tags[0]] + emissions[0, tags[0]]
    for t in range(1, len(tags)):
        score += transitions[tags[t - 1], tags[t]] + emissions[t, tags[t]]
    return float(score + transitions[tags[-1], stop])


def crf_log_partition(emissions, transitions):
    """logsumexp of crf_score over all label paths, via the forward recursion.

    Returns (logZ, alphas) where alphas[t] are the forward log-sums used by
    the gradient recursion.
    """
    emissions, transitions, n_labels = _check(emissions, transitions)
    start, stop = start_index(n_labels), stop_index(n_labels)
    length = emissions.shape[0]
    alphas = np.zeros((length, n_labels))
    alphas[0] = transitions[start, :n_labels] + emissions[0]
    inner = transitions[:n_labels, :n_labels]
    for t in range(1, length):
        # alpha[t, j] = LSE_i(alpha[t-1, i] + trans[i, j]) + emis[t, j]
        alphas[t] = _logsumexp(alphas[t - 1][:, None] + inner, axis=0) + emissions[t]
    log_z = float(_logsumexp(alphas[-1] + transitions[:n_labels, stop]))
    return log_z, alphas


def crf_marginals_and_transition_counts(emissions, transitions, alphas, log_z):
    """Gradients of logZ: per-position label marginals and expected
    transition counts (in the full [L+2, L+2] layout)."""
    emissions, transitions, n_labels = _check(emissions, transitions)
    start, stop = start_index(n_labels), stop_index(n_labels)
    length = emissions.shape[0]
    inner = transitions[:n_labels, :n_labels]
    marginals = np.zeros((length, n_labels))
    d_trans = np.zeros_like(transitions)

    d_alpha = np.exp(alphas[-1] + transitions[:n_labels, stop] - log_z)
    d_trans[:n_labels, stop] += d_alpha
    for t in range(length - 1, 0, -1):
        marginals[t] = d_alpha
        scores = alphas[t - 1][:, None] + inner
        posteriors = np.exp(scores - _logsumexp(scores, axis=0)[None, :])
        d_trans[:n_labels, :n_labels] += posteriors * d_alpha[None, :]
        d_alpha = posteriors @ d_alpha
    marginals[0] = d_alpha
    d_trans[start, :n_labels] += d_alpha
    return marginals, d_trans


def crf_nll(emissions, transitions, tags, grad_scale: float = 1.0):
    """Negative log-likelihood of the gold path with analytic gradients.

    Returns (loss, d_emissions, d_transitions), the gradients already
    multiplied by grad_scale.  Loss is logZ - score(gold) and never
    negative.
    """
    emissions, transitions, n_labels = _check(emissions, transitions)
    tags = list(tags)
    start, stop = start_index(n_labels), stop_index(n_labels)
    log_z, alphas = crf_log_partition(emissions, transitions)
    gold = crf_score(emissions, transitions, tags)
    loss = log_z - gold
    marginals, d_trans = crf_marginals_and_transition_counts(
        emissions, transitions, alphas, log_z)
    d_emis = marginals.copy()
    for t, y in enumerate(tags):
        d_emis[t, y] -= 1.0
    d_trans[start, tags[0]] -= 1.0
    for t in range(1, len(tags)):
        d_trans[tags[t - 1], tags[t]] -= 1.0
    d_trans[tags[-1], stop] -= 1.0
    return loss, d_emis * grad_scale, d_trans * grad_scale


def viterbi(emissions, transitions):
    """Best path by max-sum dynamic programming.

    Returns (tags, score).  Ties break toward the lower label index at
    every step of the recursion and at the final argmax.
    """
    emissions, transitions, n_labels = _check(emissions, transitions)
    start, stop = start_index(n_labels), stop_index(n_labels)
    length = emissions.shape[0]
    inner = transitions[:n_labels, :n_labels]
    delta = transitions[start, :n_labels] + emissions[0]
    backpointers = np.zeros((length, n_labels), dtype=np.int64)
    for t in range(1, length):
        scores = delta[:, None] + inner
        backpointers[t] = np.argmax(scores, axis=0)
        delta = np.max(scores, axis=0) + emissions[t]
    final = delta + transitions[:n_labels, stop]
    best_last = int(np.argmax(final))
    tags = [best_last]
    for t in range(length - 1, 0, -1):
        tags.append(int(backpointers[t, tags[-1]]))
    tags.reverse()
    return tags, float(final[best_last])


def brute_force(emissions, transitions):
    """Exhaustive enumeration oracle: (logZ, best path, best score)."""
    emissions, transitions, n_labels = _check(emissions, transitions)
    length = emissions.shape[0]
    if n_labels ** length > 10_000:
        raise ValueError(f"instance too large to enumerate: {n_labels}^{length}")
    scores = []
    best_path, best_score = None, -np.inf
    for path in itertools.product(range(n_labels), repeat=length):
        s = crf_score(emissions, transitions, path)
        scores.append(s)
        if s > best_score:
            best_path, best_score = list(path), s
    return float(_logsumexp(np.array(scores))), best_path, best_score
