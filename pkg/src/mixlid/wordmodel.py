"""The 4-channel word scorer, its stacked-LSTM baseline, and calibration.

Characters are embedded once and fed to three conv(+dropout+maxpool)
channels and one two-layer LSTM channel; the flattened channel outputs are
concatenated into a relu dense layer and a single sigmoid output.  A score
at or below the calibrated threshold reads as the native language.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .corpus import CharVocab, Corpus, LanguageTag, encode_word
from .nn import (
    INFER,
    TRAIN,
    Conv1DLayer,
    DenseLayer,
    EmbeddingLayer,
    LSTMLayer,
    bce_loss,
    dropout_backward,
    dropout_forward,
    max_pool1d_backward,
    max_pool1d_forward,
    zero_grads,
)
from .nn.optim import Adam


@dataclass(frozen=True)
class WordModelConfig:
    char_dim: int = 15
    kernel_sizes: tuple[int, ...] = (2, 3, 4)
    filters_per_channel: int = 16
    pool: int = 2
    dropout: float = 0.2
    lstm_sizes: tuple[int, ...] = (15, 25)
    dense_sizes: tuple[int, ...] = (15, 1)
    max_len: int = 15
    seed: int = 0
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 0.001

    def __post_init__(self):
        if len(self.kernel_sizes) != 3:
            raise ValueError("the word model has exactly three convolution channels")
        if tuple(self.dense_sizes) != (15, 1):
            raise ValueError("the dense head sizes are fixed at (15, 1)")
        if self.max_len < max(self.kernel_sizes):
            raise ValueError(
                f"max_len {self.max_len} shorter than the widest kernel "
                f"{max(self.kernel_sizes)}")


@dataclass(frozen=True)
class Threshold:
    """Decision rule: score <= value reads as NATIVE, above as EN."""

    value: float

    def classify(self, score: float) -> LanguageTag:
        return LanguageTag.NATIVE if score <= self.value else LanguageTag.EN


class WordModel:
    """Multichannel scorer mapping an encoded word to a score in (0, 1)."""

    kind = "word"

    def __init__(self, config: WordModelConfig, vocab: CharVocab):
        self.config = config
        self.vocab = vocab
        rng = np.random.Generator(np.random.PCG64(config.seed))
        self.embedding = EmbeddingLayer(rng, vocab.size, config.char_dim, "char_embedding")
        self.convs = [
            Conv1DLayer(rng, config.char_dim, k, config.filters_per_channel, f"conv{k}")
            for k in config.kernel_sizes
        ]
        self.lstm1 = LSTMLayer(rng, config.char_dim, config.lstm_sizes[0], "lstm1")
        self.lstm2 = LSTMLayer(rng, config.lstm_sizes[0], config.lstm_sizes[1], "lstm2")
        self.channel_widths = [
            ((config.max_len - k + 1) // config.pool) * config.filters_per_channel
            for k in config.kernel_sizes
        ] + [config.lstm_sizes[1]]
        self.dense_hidden = DenseLayer(
            rng, sum(self.channel_widths), config.dense_sizes[0], "relu", "dense_hidden")
        self.dense_out = DenseLayer(
            rng, config.dense_sizes[0], config.dense_sizes[1], "sigmoid", "dense_out")

    @property
    def feature_dim(self) -> int:
        return sum(self.channel_widths)

    def params(self):
        params = self.embedding.params()
        for conv in self.convs:
            params += conv.params()
        params += self.lstm1.params() + self.lstm2.params()
        params += self.dense_hidden.params() + self.dense_out.params()
        return params

    def forward(self, ids: np.ndarray, mode: str = INFER, rng=None):
        ids = np.asarray(ids)
        if ids.ndim != 2 or ids.shape[1] != self.config.max_len:
            raise ValueError(f"expected [B, {self.config.max_len}] ids, got {ids.shape}")
        emb, emb_cache = self.embedding.forward(ids)
        chans, chan_caches = [], []
        for conv in self.convs:
            conv_out, conv_cache = conv.forward(emb)
            drop_out, drop_cache = dropout_forward(conv_out, self.config.dropout, mode, rng)
            pool_out, pool_cache = max_pool1d_forward(drop_out, self.config.pool)
            chans.append(pool_out.reshape(ids.shape[0], -1))
            chan_caches.append((conv_cache, drop_cache, pool_cache, pool_out.shape))
        seq, l1_cache = self.lstm1.forward(emb, return_sequence=True)
        last, l2_cache = self.lstm2.forward(seq, return_sequence=False)
        features = np.concatenate(chans + [last], axis=1)
        hidden, hid_cache = self.dense_hidden.forward(features)
        out, out_cache = self.dense_out.forward(hidden)
        cache = (emb_cache, chan_caches, l1_cache, l2_cache, hid_cache, out_cache,
                 emb.shape, features)
        return out[:, 0], cache

    def features(self, ids: np.ndarray, mode: str = INFER, rng=None) -> np.ndarray:
        """The concatenated channel vector feeding the dense head."""
        _, cache = self.forward(ids, mode, rng)
        return cache[-1]

    def backward(self, cache, grad_scores: np.ndarray):
        (emb_cache, chan_caches, l1_cache, l2_cache, hid_cache, out_cache,
         emb_shape, _) = cache
        d_hidden = self.dense_out.backward(out_cache, grad_scores[:, None])
        d_features = self.dense_hidden.backward(hid_cache, d_hidden)
        d_emb = np.zeros(emb_shape)
        offset = 0
        for conv, (conv_cache, drop_cache, pool_cache, pool_shape), width in zip(
                self.convs, chan_caches, self.channel_widths):
            d_chan = d_features[:, offset:offset + width].reshape(pool_shape)
            d_drop = max_pool1d_backward(pool_cache, d_chan)
            d_conv = dropout_backward(drop_cache, d_drop)
            d_emb += conv.backward(conv_cache, d_conv)
            offset += width
        d_last = d_features[:, offset:]
        d_seq = self.lstm2.backward(l2_cache, d_last)
        d_emb += self.lstm1.backward(l1_cache, d_seq)
        self.embedding.backward(emb_cache, d_emb)

    def score_word(self, word: str) -> float:
        ids = encode_word(word, self.vocab, self.config.max_len)
        return float(self.forward(ids[None, :])[0][0])


class BaselineModel:
    """Character stacked-LSTM scorer (hidden sizes 15/35/25, sigmoid head)."""

    kind = "baseline"
    lstm_sizes = (15, 35, 25)

    def __init__(self, config: WordModelConfig, vocab: CharVocab):
        self.config = config
        self.vocab = vocab
        rng = np.random.Generator(np.random.PCG64(config.seed))
        self.embedding = EmbeddingLayer(rng, vocab.size, config.char_dim, "char_embedding")
        sizes = self.lstm_sizes
        self.lstms = [
            LSTMLayer(rng, in_dim, hidden, f"lstm{i + 1}")
            for i, (in_dim, hidden) in enumerate(
                zip((config.char_dim,) + sizes[:-1], sizes))
        ]
        self.dense_out = DenseLayer(rng, sizes[-1], 1, "sigmoid", "dense_out")

    def params(self):
        params = self.embedding.params()
        for lstm in self.lstms:
            params += lstm.params()
        return params + self.dense_out.params()

    def forward(self, ids: np.ndarray, mode: str = INFER, rng=None):
        ids = np.asarray(ids)
        if ids.ndim != 2 or ids.shape[1] != self.config.max_len:
            raise ValueError(f"expected [B, {self.config.max_len}] ids, got {ids.shape}")
        emb, emb_cache = self.embedding.forward(ids)
        caches = []
        x = emb
        for i, lstm in enumerate(self.lstms):
            last = i == len(self.lstms) - 1
            x, cache = lstm.forward(x, return_sequence=not last)
            caches.append(cache)
        out, out_cache = self.dense_out.forward(x)
        return out[:, 0], (emb_cache, caches, out_cache, emb.shape)

    def backward(self, cache, grad_scores: np.ndarray):
        emb_cache, caches, out_cache, emb_shape = cache
        grad = self.dense_out.backward(out_cache, grad_scores[:, None])
        for lstm, lstm_cache in zip(reversed(self.lstms), reversed(caches)):
            grad = lstm.backward(lstm_cache, grad)
        self.embedding.backward(emb_cache, grad)

    def score_word(self, word: str) -> float:
        ids = encode_word(word, self.vocab, self.config.max_len)
        return float(self.forward(ids[None, :])[0][0])


def build_word_model(config: WordModelConfig, vocab: CharVocab) -> WordModel:
    return WordModel(config, vocab)


def word_samples(corpus: Corpus, vocab: CharVocab, max_len: int):
    """Every tagged token occurrence (duplicates included) as (ids, labels)."""
    ids, labels = [], []
    for token in corpus.tokens():
        ids.append(encode_word(token.surface, vocab, max_len))
        labels.append(float(token.gold))
    return np.stack(ids), np.array(labels)


def score_batch(model, ids: np.ndarray, batch_size: int = 512) -> np.ndarray:
    scores = np.empty(ids.shape[0])
    for start in range(0, ids.shape[0], batch_size):
        chunk = ids[start:start + batch_size]
        scores[start:start + chunk.shape[0]] = model.forward(chunk, INFER)[0]
    return scores


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    train_acc: float
    dev_acc: float
    samples: int


@dataclass
class TrainHistory:
    epochs: list[EpochStats] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["epoch,loss,train_acc,dev_acc"]
        for row in self.epochs:
            lines.append(
                f"{row.epoch},{row.loss:.6f},{row.train_acc:.6f},{row.dev_acc:.6f}")
        return "\n".join(lines) + "\n"


def train_word_model(model, train, dev, epochs: int | None = None,
                     batch_size: int | None = None, lr: float | None = None,
                     log=None) -> TrainHistory:
    """BCE + Adam training over every token occurrence.

    `train` and `dev` are (ids, labels) pairs as produced by word_samples.
    Shuffling and dropout draw from a generator seeded off the model seed,
    so same-seed runs are identical.
    """
    cfg = model.config
    epochs = cfg.epochs if epochs is None else epochs
    batch_size = cfg.batch_size if batch_size is None else batch_size
    lr = cfg.learning_rate if lr is None else lr
    train_ids, train_labels = train
    dev_ids, dev_labels = dev
    if train_ids.shape[0] == 0 or dev_ids.shape[0] == 0:
        raise ValueError("empty training or development split")
    rng = np.random.Generator(np.random.PCG64([cfg.seed, 1]))
    params = model.params()
    optimizer = Adam(params, lr=lr)
    history = TrainHistory()
    total = train_ids.shape[0]
    for epoch in range(epochs):
        order = rng.permutation(total)
        loss_sum = 0.0
        correct = 0
        consumed = 0
        for start in range(0, total, batch_size):
            batch = order[start:start + batch_size]
            ids = train_ids[batch]
            labels = train_labels[batch]
            scores, cache = model.forward(ids, TRAIN, rng)
            losses, grad = bce_loss(scores, labels)
            zero_grads(params)
            model.backward(cache, grad / len(batch))
            optimizer.step()
            loss_sum += float(losses.sum())
            correct += int(((scores > 0.5) == (labels > 0.5)).sum())
            consumed += len(batch)
        dev_scores = score_batch(model, dev_ids)
        dev_acc = float(((dev_scores > 0.5) == (dev_labels > 0.5)).mean())
        stats = EpochStats(epoch, loss_sum / total, correct / total, dev_acc, consumed)
        history.epochs.append(stats)
        if log is not None:
            log(stats)
    return history


def calibrate_threshold(scores, labels, grid_step: float = 0.01):
    """Exhaustive threshold sweep maximizing accuracy on (scores, labels).

    Ties break toward the largest threshold.  Returns (Threshold, accuracy).
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.size == 0:
        raise ValueError("cannot calibrate on an empty score set")
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must align")
    steps = int(round(1.0 / grid_step))
    best_theta, best_acc = 0.0, -1.0
    for i in range(steps + 1):
        theta = i / steps  # exact decimal grid points, e.g. 89/100 == 0.89
        predicted = np.where(scores <= theta, int(LanguageTag.NATIVE), int(LanguageTag.EN))
        acc = float((predicted == labels).mean())
        if acc >= best_acc:
            best_theta, best_acc = theta, acc
    return Threshold(best_theta), best_acc


def classify_word(model, threshold: Threshold, word: str) -> LanguageTag:
    return threshold.classify(model.score_word(word))


def classify_encoded(model, threshold: Threshold, ids: np.ndarray) -> np.ndarray:
    """Vectorized thresholded tagging; returns an int array of LanguageTag."""
    scores = score_batch(model, ids)
    return np.where(scores <= threshold.value,
                    int(LanguageTag.NATIVE), int(LanguageTag.EN))


def build_and_train_baseline(config: WordModelConfig, vocab: CharVocab,
                             train, dev) -> tuple[BaselineModel, Threshold, TrainHistory]:
    """Baseline trained and calibrated under the word-model contracts."""
    model = BaselineModel(config, vocab)
    history = train_word_model(model, train, dev)
    dev_scores = score_batch(model, dev[0])
    threshold, _ = calibrate_threshold(dev_scores, dev[1].astype(int))
    return model, threshold, history
