"""Versioned JSON model archives.

An archive is self-describing: format version, model kind, config echo,
character vocabulary, tag map, threshold (word models), and flat
row-major parameter arrays keyed by name.  Floats are serialized via
their shortest round-tripping decimal form, so loading reproduces values
bit-exactly; a SHA-256 checksum over the canonical payload guards
against truncation and corruption.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .contextmodel import ContextModel, ContextModelConfig
from .corpus import CharVocab, LanguageTag
from .wordmodel import BaselineModel, Threshold, WordModel, WordModelConfig

FORMAT_VERSION = 1


class ArchiveError(ValueError):
    pass


class ArchiveVersionError(ArchiveError):
    pass


class ArchiveChecksumError(ArchiveError):
    pass


def _canonical(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _checksum(payload: dict) -> str:
    return hashlib.sha256(_canonical(payload).encode("utf-8")).hexdigest()


def vocab_hash(vocab: CharVocab) -> str:
    return hashlib.sha256(_canonical(vocab.char_to_id).encode("utf-8")).hexdigest()


def _params_payload(model) -> list[dict]:
    entries = []
    for p in model.params():
        entries.append({
            "name": p.name,
            "shape": list(p.value.shape),
            "data": p.value.ravel().tolist(),
        })
    return entries


def _restore_params(model, entries: list[dict]):
    by_name = {p.name: p for p in model.params()}
    if sorted(by_name) != sorted(e["name"] for e in entries):
        raise ArchiveError("archive parameters do not match the model architecture")
    for entry in entries:
        param = by_name[entry["name"]]
        shape = tuple(entry["shape"])
        if shape != param.value.shape:
            raise ArchiveError(
                f"parameter {entry['name']}: archive shape {shape} "
                f"!= model shape {param.value.shape}")
        data = np.array(entry["data"], dtype=np.float64)
        if data.size != param.value.size:
            raise ArchiveError(f"parameter {entry['name']}: data length mismatch")
        param.value[...] = data.reshape(shape)


def _tag_map_payload(tag_map: dict[str, LanguageTag]) -> dict[str, int]:
    return {surface: int(tag) for surface, tag in tag_map.items()}


def _tag_map_restore(payload: dict[str, int]) -> dict[str, LanguageTag]:
    return {surface: LanguageTag(tag) for surface, tag in payload.items()}


def word_archive_payload(model, threshold: Threshold | None,
                         tag_map: dict[str, LanguageTag]) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "config": asdict(model.config),
        "vocab": model.vocab.char_to_id,
        "vocab_hash": vocab_hash(model.vocab),
        "threshold": None if threshold is None else threshold.value,
        "tag_map": _tag_map_payload(tag_map),
        "params": _params_payload(model),
    }


def context_archive_payload(model: ContextModel,
                            tag_map: dict[str, LanguageTag]) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "config": asdict(model.config),
        "vocab": model.vocab.char_to_id,
        "vocab_hash": vocab_hash(model.vocab),
        "tag_map": _tag_map_payload(tag_map),
        "params": _params_payload(model),
    }


def save_archive(path, payload: dict) -> None:
    body = dict(payload)
    body["checksum"] = _checksum(payload)
    Path(path).write_text(_canonical(body) + "\n", encoding="utf-8")


def load_archive(path) -> dict:
    try:
        body = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ArchiveChecksumError(f"unreadable or truncated archive {path}: {err}")
    if not isinstance(body, dict) or "format_version" not in body:
        raise ArchiveVersionError(f"{path} is not a model archive")
    if body["format_version"] != FORMAT_VERSION:
        raise ArchiveVersionError(
            f"unsupported archive version {body['format_version']!r} "
            f"(expected {FORMAT_VERSION})")
    stored = body.pop("checksum", None)
    if stored != _checksum(body):
        raise ArchiveChecksumError(f"checksum mismatch in {path}")
    return body


def _word_config_from(payload: dict) -> WordModelConfig:
    cfg = dict(payload)
    for key in ("kernel_sizes", "lstm_sizes", "dense_sizes"):
        cfg[key] = tuple(cfg[key])
    return WordModelConfig(**cfg)


def save_word_model(path, model, threshold: Threshold | None,
                    tag_map: dict[str, LanguageTag]) -> None:
    save_archive(path, word_archive_payload(model, threshold, tag_map))


def load_word_model(path):
    """Returns (model, threshold, tag_map); model kind word or baseline."""
    body = load_archive(path)
    if body["kind"] not in ("word", "baseline"):
        raise ArchiveError(f"expected a word-model archive, got kind {body['kind']!r}")
    config = _word_config_from(body["config"])
    vocab = CharVocab(dict(body["vocab"]))
    cls = WordModel if body["kind"] == "word" else BaselineModel
    model = cls(config, vocab)
    _restore_params(model, body["params"])
    threshold = None if body["threshold"] is None else Threshold(body["threshold"])
    return model, threshold, _tag_map_restore(body["tag_map"])


def save_context_model(path, model: ContextModel,
                       tag_map: dict[str, LanguageTag]) -> None:
    save_archive(path, context_archive_payload(model, tag_map))


def load_context_model(path):
    """Returns (model, tag_map)."""
    body = load_archive(path)
    if body["kind"] != "context":
        raise ArchiveError(f"expected a context-model archive, got kind {body['kind']!r}")
    config = ContextModelConfig(**body["config"])
    vocab = CharVocab(dict(body["vocab"]))
    model = ContextModel(config, vocab)
    _restore_params(model, body["params"])
    return model, _tag_map_restore(body["tag_map"])


def archives_compatible(word_body_or_path, context_body_or_path) -> bool:
    """Vocabulary content hashes must agree for a usable model pair."""
    def hash_of(source):
        if isinstance(source, dict):
            return source["vocab_hash"]
        return load_archive(source)["vocab_hash"]

    return hash_of(word_body_or_path) == hash_of(context_body_or_path)
