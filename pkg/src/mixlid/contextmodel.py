"""Instance-level tagger: a Bi-LSTM-CRF over per-token feature vectors.

Each token contributes a 31-dim feature: the frozen word model's sigmoid
score (1 dim) concatenated with a jointly-trained bidirectional character
encoder output (30 dims).  A bidirectional LSTM over the feature sequence
projects to per-position label scores, decoded exactly by the CRF.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .corpus import CharVocab, Corpus, Instance, LanguageTag, encode_instance
from .crf import crf_nll, transition_shape, viterbi
from .nn import BiLSTM, DenseLayer, EmbeddingLayer, Parameter, zero_grads
from .nn.optim import SgdDecay
from .wordmodel import EpochStats, TrainHistory, score_batch


@dataclass(frozen=True)
class ContextModelConfig:
    char_dim: int = 30
    char_encoder_hidden: int = 15
    bilstm_hidden: int = 50
    n_labels: int = 2
    lr0: float = 0.015
    decay: float = 0.05
    l2: float = 1e-8
    batch_size: int = 16
    epochs: int = 210
    max_len: int = 15
    seed: int = 0

    @property
    def feature_dim(self) -> int:
        return 1 + 2 * self.char_encoder_hidden


class ContextModel:
    kind = "context"

    def __init__(self, config: ContextModelConfig, vocab: CharVocab):
        self.config = config
        self.vocab = vocab
        rng = np.random.Generator(np.random.PCG64(config.seed))
        self.char_embedding = EmbeddingLayer(
            rng, vocab.size, config.char_dim, "ctx_char_embedding")
        self.char_encoder = BiLSTM(
            rng, config.char_dim, config.char_encoder_hidden, "char_encoder")
        self.encoder = BiLSTM(
            rng, config.feature_dim, config.bilstm_hidden, "instance_encoder")
        self.proj = DenseLayer(
            rng, 2 * config.bilstm_hidden, config.n_labels, "identity", "emission_proj")
        self.transitions = Parameter(
            rng.uniform(-0.1, 0.1, size=transition_shape(config.n_labels)),
            "crf_transitions")

    def params(self):
        return (self.char_embedding.params() + self.char_encoder.params()
                + self.encoder.params() + self.proj.params() + [self.transitions])

    def char_features(self, token_ids: np.ndarray):
        """fe2: final bidirectional encoder states per token, [T, 2*hidden]."""
        emb, emb_cache = self.char_embedding.forward(token_ids)
        fe2, enc_cache = self.char_encoder.forward(emb, return_sequence=False)
        return fe2, (emb_cache, enc_cache)

    def forward(self, token_ids: np.ndarray, word_scores: np.ndarray):
        """Emissions [T, n_labels] for one instance.

        token_ids is [T, max_len]; word_scores is the frozen fe1 column.
        """
        word_scores = np.asarray(word_scores, dtype=np.float64)
        if token_ids.shape[0] != word_scores.shape[0]:
            raise ValueError("token/score length mismatch")
        if token_ids.shape[0] < 1:
            raise ValueError("empty instance")
        fe2, char_cache = self.char_features(token_ids)
        features = np.concatenate([word_scores[:, None], fe2], axis=1)
        encoded, enc_cache = self.encoder.forward(features[None, :, :])
        emissions, proj_cache = self.proj.forward(encoded[0])
        return emissions, (char_cache, enc_cache, proj_cache, features)

    def backward(self, cache, d_emissions: np.ndarray):
        char_cache, enc_cache, proj_cache, _ = cache
        d_encoded = self.proj.backward(proj_cache, d_emissions)
        d_features = self.encoder.backward(enc_cache, d_encoded[None, :, :])[0]
        # Column 0 is the frozen word-model score; no gradient flows back.
        d_fe2 = d_features[:, 1:]
        emb_cache, char_enc_cache = char_cache
        d_emb = self.char_encoder.backward(char_enc_cache, d_fe2)
        self.char_embedding.backward(emb_cache, d_emb)

    def nll_and_backward(self, token_ids, word_scores, gold, grad_scale=1.0):
        emissions, cache = self.forward(token_ids, word_scores)
        loss, d_emis, d_trans = crf_nll(
            emissions, self.transitions.value, gold, grad_scale)
        self.transitions.grad += d_trans
        self.backward(cache, d_emis)
        return loss, emissions

    def decode(self, token_ids, word_scores):
        emissions, _ = self.forward(token_ids, word_scores)
        tags, _ = viterbi(emissions, self.transitions.value)
        return tags


class WordScoreCache:
    """Frozen INFER scores of the word model, memoized per surface."""

    def __init__(self, word_model):
        self.word_model = word_model
        self._scores: dict[str, float] = {}

    def scores(self, surfaces: list[str]) -> np.ndarray:
        missing = sorted({s for s in surfaces if s not in self._scores})
        if missing:
            ids = encode_instance(missing, self.word_model.vocab,
                                  self.word_model.config.max_len)
            for surface, score in zip(missing, score_batch(self.word_model, ids)):
                self._scores[surface] = float(score)
        return np.array([self._scores[s] for s in surfaces])


def extract_features(instance: Instance, word_model, context_model: ContextModel,
                     score_cache: WordScoreCache | None = None) -> np.ndarray:
    """Per-token fe = (fe1, fe2) matrix of shape [T, 1 + 2*char_hidden]."""
    surfaces = instance.surfaces()
    cache = score_cache or WordScoreCache(word_model)
    fe1 = cache.scores(surfaces)
    token_ids = encode_instance(surfaces, context_model.vocab,
                                context_model.config.max_len)
    fe2, _ = context_model.char_features(token_ids)
    return np.concatenate([fe1[:, None], fe2], axis=1)


@dataclass(frozen=True)
class PreparedInstance:
    token_ids: np.ndarray
    word_scores: np.ndarray
    gold: tuple[int, ...]


def prepare_instances(corpus: Corpus, word_model, config: ContextModelConfig,
                      vocab: CharVocab,
                      score_cache: WordScoreCache | None = None) -> list[PreparedInstance]:
    cache = score_cache or WordScoreCache(word_model)
    prepared = []
    for instance in corpus.instances:
        surfaces = instance.surfaces()
        prepared.append(PreparedInstance(
            token_ids=encode_instance(surfaces, vocab, config.max_len),
            word_scores=cache.scores(surfaces),
            gold=tuple(int(t) for t in instance.gold_tags()),
        ))
    return prepared


def dev_accuracy(model: ContextModel, prepared: list[PreparedInstance]) -> float:
    correct = total = 0
    for inst in prepared:
        tags = model.decode(inst.token_ids, inst.word_scores)
        correct += sum(1 for p, g in zip(tags, inst.gold) if p == g)
        total += len(inst.gold)
    return correct / total


def train_context_model(model: ContextModel, word_model, train_corpus: Corpus,
                        dev_corpus: Corpus, epochs: int | None = None,
                        batch_size: int | None = None, log=None) -> TrainHistory:
    """Mini-batch SGD (decaying lr, L2) on the CRF likelihood.

    The word model is read-only throughout: its scores are computed once
    up front and never backpropagated into.  The parameters kept are those
    of the best dev-accuracy epoch.
    """
    if len(train_corpus) == 0 or len(dev_corpus) == 0:
        raise ValueError("empty training or development split")
    cfg = model.config
    epochs = cfg.epochs if epochs is None else epochs
    batch_size = cfg.batch_size if batch_size is None else batch_size
    score_cache = WordScoreCache(word_model)
    train_set = prepare_instances(train_corpus, word_model, cfg, model.vocab, score_cache)
    dev_set = prepare_instances(dev_corpus, word_model, cfg, model.vocab, score_cache)
    rng = np.random.Generator(np.random.PCG64([cfg.seed, 2]))
    params = model.params()
    optimizer = SgdDecay(params, lr0=cfg.lr0, decay=cfg.decay, l2=cfg.l2)
    history = TrainHistory()
    best_acc, best_values = -1.0, None
    for epoch in range(epochs):
        order = rng.permutation(len(train_set))
        loss_sum = 0.0
        correct = consumed = 0
        for start in range(0, len(order), batch_size):
            batch = order[start:start + batch_size]
            zero_grads(params)
            for index in batch:
                inst = train_set[index]
                loss, emissions = model.nll_and_backward(
                    inst.token_ids, inst.word_scores, inst.gold,
                    grad_scale=1.0 / len(batch))
                loss_sum += loss
                tags, _ = viterbi(emissions, model.transitions.value)
                correct += sum(1 for p, g in zip(tags, inst.gold) if p == g)
                consumed += len(inst.gold)
            optimizer.step(epoch)
        dev_acc = dev_accuracy(model, dev_set)
        stats = EpochStats(epoch, loss_sum / len(train_set), correct / consumed,
                           dev_acc, consumed)
        history.epochs.append(stats)
        if log is not None:
            log(stats)
        if dev_acc > best_acc:
            best_acc = dev_acc
            best_values = [p.value.copy() for p in params]
    if best_values is not None:
        for p, value in zip(params, best_values):
            p.value[...] = value
    return history


def tag_instance(model: ContextModel, word_model, surfaces: list[str],
                 score_cache: WordScoreCache | None = None) -> list[LanguageTag]:
    """Viterbi tags for one tokenized sentence."""
    if not surfaces:
        raise ValueError("empty instance")
    cache = score_cache or WordScoreCache(word_model)
    token_ids = encode_instance(surfaces, model.vocab, model.config.max_len)
    tags = model.decode(token_ids, cache.scores(surfaces))
    return [LanguageTag(t) for t in tags]
