import json

import numpy as np
import pytest

from mixlid.archive import (
    ArchiveChecksumError,
    ArchiveError,
    ArchiveVersionError,
    archives_compatible,
    load_archive,
    load_context_model,
    load_word_model,
    save_context_model,
    save_word_model,
    vocab_hash,
)
from mixlid.contextmodel import ContextModel, ContextModelConfig
from mixlid.corpus import CharVocab, LanguageTag
from mixlid.wordmodel import BaselineModel, Threshold, WordModelConfig, build_word_model

VOCAB = CharVocab({c: i + 2 for i, c in enumerate("abcdefghij")})
TAG_MAP = {"bn": LanguageTag.NATIVE, "en": LanguageTag.EN}

WORD_CFG = WordModelConfig(char_dim=4, filters_per_channel=2, lstm_sizes=(3, 4),
                           max_len=6, seed=3)
CTX_CFG = ContextModelConfig(char_dim=4, char_encoder_hidden=3, bilstm_hidden=4,
                             max_len=6, seed=4)


def test_word_round_trip_bit_identical_scores(tmp_path):
    model = build_word_model(WORD_CFG, VOCAB)
    path = tmp_path / "word.json"
    save_word_model(path, model, Threshold(0.93), TAG_MAP)
    loaded, threshold, tag_map = load_word_model(path)
    assert threshold.value == 0.93
    assert tag_map == TAG_MAP
    rng = np.random.Generator(np.random.PCG64(0))
    ids = rng.integers(0, VOCAB.size, size=(100, WORD_CFG.max_len))
    original, _ = model.forward(ids)
    restored, _ = loaded.forward(ids)
    assert np.array_equal(original, restored)


def test_baseline_round_trip(tmp_path):
    model = BaselineModel(WORD_CFG, VOCAB)
    path = tmp_path / "baseline.json"
    save_word_model(path, model, None, TAG_MAP)
    loaded, threshold, _ = load_word_model(path)
    assert isinstance(loaded, BaselineModel)
    assert threshold is None
    ids = np.zeros((3, WORD_CFG.max_len), dtype=np.int64)
    assert np.array_equal(model.forward(ids)[0], loaded.forward(ids)[0])


def test_context_round_trip_bit_identical(tmp_path):
    model = ContextModel(CTX_CFG, VOCAB)
    path = tmp_path / "context.json"
    save_context_model(path, model, TAG_MAP)
    loaded, tag_map = load_context_model(path)
    assert tag_map == TAG_MAP
    rng = np.random.Generator(np.random.PCG64(1))
    ids = rng.integers(0, VOCAB.size, size=(4, CTX_CFG.max_len))
    fe1 = rng.random(4)
    original, _ = model.forward(ids, fe1)
    restored, _ = loaded.forward(ids, fe1)
    assert np.array_equal(original, restored)
    assert np.array_equal(model.transitions.value, loaded.transitions.value)


def test_same_model_saves_identical_bytes(tmp_path):
    model = build_word_model(WORD_CFG, VOCAB)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_word_model(a, model, Threshold(0.5), TAG_MAP)
    save_word_model(b, model, Threshold(0.5), TAG_MAP)
    assert a.read_bytes() == b.read_bytes()


def test_truncated_file_fails_checksum(tmp_path):
    model = build_word_model(WORD_CFG, VOCAB)
    path = tmp_path / "word.json"
    save_word_model(path, model, None, TAG_MAP)
    data = path.read_text()
    path.write_text(data[: len(data) // 2])
    with pytest.raises(ArchiveChecksumError):
        load_word_model(path)


def test_corrupted_value_fails_checksum(tmp_path):
    model = build_word_model(WORD_CFG, VOCAB)
    path = tmp_path / "word.json"
    save_word_model(path, model, Threshold(0.5), TAG_MAP)
    body = json.loads(path.read_text())
    body["threshold"] = 0.6
    path.write_text(json.dumps(body))
    with pytest.raises(ArchiveChecksumError):
        load_word_model(path)


def test_unknown_version_rejected(tmp_path):
    model = build_word_model(WORD_CFG, VOCAB)
    path = tmp_path / "word.json"
    save_word_model(path, model, None, TAG_MAP)
    body = json.loads(path.read_text())
    body["format_version"] = 99
    path.write_text(json.dumps(body))
    with pytest.raises(ArchiveVersionError):
        load_archive(path)


def test_non_archive_json_rejected(tmp_path):
    path = tmp_path / "plain.json"
    path.write_text("{\"hello\": 1}")
    with pytest.raises(ArchiveVersionError):
        load_archive(path)


def test_wrong_kind_rejected(tmp_path):
    model = ContextModel(CTX_CFG, VOCAB)
    path = tmp_path / "context.json"
    save_context_model(path, model, TAG_MAP)
    with pytest.raises(ArchiveError, match="word-model"):
        load_word_model(path)


def test_shape_mismatch_rejected(tmp_path):
    model = build_word_model(WORD_CFG, VOCAB)
    path = tmp_path / "word.json"
    save_word_model(path, model, None, TAG_MAP)
    body = json.loads(path.read_text())
    del body["checksum"]
    entry = body["params"][0]
    entry["data"] = entry["data"][:-1]
    entry["shape"][-1] -= 1
    from mixlid.archive import save_archive
    save_archive(path, body)
    with pytest.raises(ArchiveError, match="shape"):
        load_word_model(path)


def test_vocab_hash_compatibility(tmp_path):
    word = build_word_model(WORD_CFG, VOCAB)
    context = ContextModel(CTX_CFG, VOCAB)
    word_path, ctx_path = tmp_path / "w.json", tmp_path / "c.json"
    save_word_model(word_path, word, None, TAG_MAP)
    save_context_model(ctx_path, context, TAG_MAP)
    assert archives_compatible(word_path, ctx_path)
    other_vocab = CharVocab({c: i + 2 for i, c in enumerate("xyz")})
    mismatched = ContextModel(CTX_CFG, other_vocab)
    bad_path = tmp_path / "bad.json"
    save_context_model(bad_path, mismatched, TAG_MAP)
    assert not archives_compatible(word_path, bad_path)
    assert vocab_hash(VOCAB) != vocab_hash(other_vocab)
