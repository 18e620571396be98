"""Corpus handling for token-tagged code-mixed text.

Corpora are TSV files: one ``surface<TAB>tag`` line per token, instances
separated by blank lines.  Exactly two language classes exist: the native
(romanized) language and English.  Tag surfaces (e.g. "bn", "hi", "en") are
mapped onto the two classes by a caller-supplied tag map.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

PAD_ID = 0
UNK_ID = 1


class LanguageTag(enum.IntEnum):
    """The two token classes.  NATIVE encodes as 0, EN as 1."""

    NATIVE = 0
    EN = 1


class Split(enum.Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


class CorpusError(ValueError):
    """Malformed corpus text or inconsistent tag map."""


@dataclass(frozen=True)
class Token:
    surface: str
    gold: LanguageTag | None = None

    def __post_init__(self):
        if not self.surface:
            raise CorpusError("empty token surface")
        if any(c.isspace() for c in self.surface):
            raise CorpusError(f"token surface contains whitespace: {self.surface!r}")


@dataclass(frozen=True)
class Instance:
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise CorpusError("instance with no tokens")

    def __len__(self):
        return len(self.tokens)

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def gold_tags(self) -> list[LanguageTag]:
        tags = [t.gold for t in self.tokens]
        if any(t is None for t in tags):
            raise CorpusError("instance has untagged tokens")
        return tags


@dataclass(frozen=True)
class Corpus:
    instances: tuple[Instance, ...]
    split: Split = Split.TRAIN

    def __len__(self):
        return len(self.instances)

    def tokens(self):
        for inst in self.instances:
            yield from inst.tokens

    def token_count(self) -> int:
        return sum(len(inst) for inst in self.instances)


def check_tag_map(tag_map: dict[str, LanguageTag]) -> dict[str, LanguageTag]:
    """A tag map must name each of the two classes exactly once."""
    if sorted(tag_map.values(), key=int) != [LanguageTag.NATIVE, LanguageTag.EN]:
        raise CorpusError(
            f"tag map must assign exactly one surface to each class, got {tag_map!r}"
        )
    return tag_map


def default_tag_map() -> dict[str, LanguageTag]:
    return {"native": LanguageTag.NATIVE, "en": LanguageTag.EN}


def tag_surface(tag_map: dict[str, LanguageTag], tag: LanguageTag) -> str:
    for surface, t in tag_map.items():
        if t == tag:
            return surface
    raise CorpusError(f"tag map has no surface for {tag}")


def parse_corpus(
    text: str,
    tag_map: dict[str, LanguageTag],
    split: Split = Split.TRAIN,
) -> Corpus:
    """Parse tagged TSV text into a Corpus.

    One token per line as ``surface<TAB>tag``; a blank line terminates an
    instance; the final instance may omit its trailing blank line.
    """
    check_tag_map(tag_map)
    instances = []
    current: list[Token] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            if current:
                instances.append(Instance(tuple(current)))
                current = []
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise CorpusError(
                f"line {lineno}: expected 2 tab-separated fields, got {len(fields)}"
            )
        surface, tag = fields[0].strip(), fields[1].strip()
        if tag not in tag_map:
            raise CorpusError(f"line {lineno}: unknown tag surface {tag!r}")
        current.append(Token(surface, tag_map[tag]))
    if current:
        instances.append(Instance(tuple(current)))
    if not instances:
        raise CorpusError("empty corpus")
    return Corpus(tuple(instances), split)


def parse_untagged(text: str) -> list[list[str]]:
    """One whitespace-tokenized sentence per line; blank lines dropped."""
    sentences = []
    for line in text.split("\n"):
        words = line.split()
        if words:
            sentences.append(words)
    return sentences


def serialize_corpus(corpus: Corpus, tag_map: dict[str, LanguageTag]) -> str:
    """Inverse of parse_corpus (modulo trailing whitespace)."""
    check_tag_map(tag_map)
    blocks = []
    for inst in corpus.instances:
        lines = [f"{t.surface}\t{tag_surface(tag_map, t.gold)}" for t in inst.tokens]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


@dataclass(frozen=True)
class CharVocab:
    """Character-to-id map with reserved PAD=0 and UNK=1 slots.

    Built from lowercased train-split text only; ids are assigned in
    codepoint order so construction is deterministic.
    """

    char_to_id: dict[str, int]

    @property
    def size(self) -> int:
        return len(self.char_to_id) + 2

    def id_of(self, char: str) -> int:
        return self.char_to_id.get(char, UNK_ID)

    def to_sorted_chars(self) -> list[str]:
        return sorted(self.char_to_id, key=self.char_to_id.get)


def build_char_vocab(corpus: Corpus, min_count: int = 1) -> CharVocab:
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    if len(corpus) == 0:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    counts: Counter[str] = Counter()
    for token in corpus.tokens():
        counts.update(token.surface.lower())
    kept = sorted(c for c, n in counts.items() if n >= min_count)
    return CharVocab({c: i + 2 for i, c in enumerate(kept)})


def encode_word(word: str, vocab: CharVocab, max_len: int) -> np.ndarray:
    """Left-aligned character ids, right-padded with PAD, truncated at max_len.

    Words are lowercased to match vocabulary construction.
    """
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    if not word:
        raise ValueError("cannot encode an empty word")
    ids = np.full(max_len, PAD_ID, dtype=np.int64)
    for i, char in enumerate(word.lower()[:max_len]):
        ids[i] = vocab.id_of(char)
    return ids


def encode_instance(surfaces: list[str], vocab: CharVocab, max_len: int) -> np.ndarray:
    return np.stack([encode_word(s, vocab, max_len) for s in surfaces])


def cmi(instance: Instance) -> float:
    """Per-utterance code-mixing index in [0, 100).

    100 * (1 - max_language_token_count / total_tokens); 0 for monolingual
    instances.  Language-independent tokens do not occur in this two-class
    setting, so the denominator is the full token count.
    """
    tags = instance.gold_tags()
    n = len(tags)
    w_max = max(sum(1 for t in tags if t == lang) for lang in LanguageTag)
    if w_max == n:
        return 0.0
    return 100.0 * (1.0 - w_max / n)


@dataclass(frozen=True)
class CorpusStats:
    instances: int
    native_tokens: int
    unique_native_tokens: int
    mean_cmi: float


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Instance/native-token counts and mean per-instance CMI.

    Unique native surfaces are counted case-folded.
    """
    if len(corpus) == 0:
        raise CorpusError("empty corpus")
    native = [t.surface.lower() for t in corpus.tokens() if t.gold == LanguageTag.NATIVE]
    mean = sum(cmi(inst) for inst in corpus.instances) / len(corpus)
    return CorpusStats(
        instances=len(corpus),
        native_tokens=len(native),
        unique_native_tokens=len(set(native)),
        mean_cmi=mean,
    )


# Synthetic corpora: two "languages" over disjoint alphabets, plus a shared
# lexicon of ambiguous surfaces whose gold tag follows the surrounding
# instance, so context is required to resolve them.
NATIVE_ALPHABET = "abcdefghijklm"
EN_ALPHABET = "nopqrstuvwxyz"


@dataclass(frozen=True)
class SynthConfig:
    """Generator knobs.  `instances` is the corpus total, split 3:1:2 into
    train/dev/test (so 6000 yields 3000/1000/2000)."""

    instances: int = 6000
    tokens_per_instance: int = 8
    ambiguity_rate: float = 0.3
    seed: int = 0
    lexicon_size: int = 300
    ambiguous_lexicon_size: int = 20
    dominant_language_rate: float = 0.7


def _random_word(rng: np.random.Generator, alphabet: str) -> str:
    length = int(rng.integers(3, 9))
    return "".join(alphabet[i] for i in rng.integers(0, len(alphabet), size=length))


def _build_lexicons(cfg: SynthConfig, rng: np.random.Generator):
    native, en = set(), set()
    while len(native) < cfg.lexicon_size:
        native.add(_random_word(rng, NATIVE_ALPHABET))
    while len(en) < cfg.lexicon_size:
        en.add(_random_word(rng, EN_ALPHABET))
    # Ambiguous surfaces mix both halves of the alphabet, so they can never
    # collide with a regular word and a character rule cannot separate them.
    ambiguous = set()
    full = NATIVE_ALPHABET + EN_ALPHABET
    while len(ambiguous) < cfg.ambiguous_lexicon_size:
        word = _random_word(rng, full)
        if any(c in NATIVE_ALPHABET for c in word) and any(c in EN_ALPHABET for c in word):
            ambiguous.add(word)
    return sorted(native), sorted(en), sorted(ambiguous)


def _synth_instance(cfg: SynthConfig, rng, lexicons) -> Instance:
    native_lex, en_lex, ambiguous_lex = lexicons
    dominant = LanguageTag(int(rng.integers(0, 2)))
    other = LanguageTag(1 - dominant)
    kinds = rng.random(cfg.tokens_per_instance) < cfg.ambiguity_rate
    langs = np.where(
        rng.random(cfg.tokens_per_instance) < cfg.dominant_language_rate,
        int(dominant),
        int(other),
    )
    # Ambiguous tokens take the majority language of the instance's regular
    # tokens, ties (and all-ambiguous instances) resolving to NATIVE.  The
    # rule is a deterministic function of the observable surfaces, so the
    # gold tag is always recoverable from context.
    regular_langs = [LanguageTag(int(l)) for l, amb in zip(langs, kinds) if not amb]
    native_count = sum(1 for l in regular_langs if l == LanguageTag.NATIVE)
    majority = (
        LanguageTag.NATIVE
        if native_count * 2 >= len(regular_langs)
        else LanguageTag.EN
    )
    tokens = []
    for ambiguous, lang in zip(kinds, langs):
        if ambiguous:
            surface = ambiguous_lex[int(rng.integers(0, len(ambiguous_lex)))]
            gold = majority
        else:
            gold = LanguageTag(int(lang))
            lex = native_lex if gold == LanguageTag.NATIVE else en_lex
            surface = lex[int(rng.integers(0, len(lex)))]
        tokens.append(Token(surface, gold))
    return Instance(tuple(tokens))


def synth_corpus(cfg: SynthConfig) -> tuple[Corpus, Corpus, Corpus]:
    """Deterministic synthetic train/dev/test corpora (3:1:2 split)."""
    if not 0.0 <= cfg.ambiguity_rate <= 1.0:
        raise ValueError(f"ambiguity_rate must be in [0, 1], got {cfg.ambiguity_rate}")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    lexicons = _build_lexicons(cfg, rng)
    n_train = cfg.instances // 2
    n_dev = cfg.instances // 6
    n_test = cfg.instances - n_train - n_dev
    splits = []
    for count, split in ((n_train, Split.TRAIN), (n_dev, Split.DEV), (n_test, Split.TEST)):
        instances = tuple(_synth_instance(cfg, rng, lexicons) for _ in range(count))
        splits.append(Corpus(instances, split))
    return splits[0], splits[1], splits[2]


def ambiguous_surfaces(corpus: Corpus) -> set[str]:
    """Surfaces observed with both gold tags in the corpus."""
    seen: dict[str, set[LanguageTag]] = {}
    for token in corpus.tokens():
        seen.setdefault(token.surface, set()).add(token.gold)
    return {s for s, tags in seen.items() if len(tags) == 2}
