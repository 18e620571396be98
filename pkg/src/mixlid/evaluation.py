"""Confusion matrices, classification metrics, model deltas, ambiguity.

The native language is the positive class.  Accuracy, precision, and
recall are percentages kept at full precision internally and truncated to
two decimals in reports; F1 is the harmonic mean of the two-decimal
precision and recall figures.  Truncation (not rounding) is the one
convention under which every reference row is reproducible from its
confusion matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_DOWN, Decimal

import numpy as np

from .corpus import Corpus, LanguageTag


def trunc2(value: float) -> float:
    return float(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_DOWN))


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[gold][pred] for the two classes, gold-major."""

    counts: tuple[tuple[int, int], tuple[int, int]]

    @classmethod
    def from_counts(cls, native_native: int, native_en: int,
                    en_native: int, en_en: int) -> "ConfusionMatrix":
        return cls(((native_native, native_en), (en_native, en_en)))

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    @property
    def trace(self) -> int:
        return self.counts[0][0] + self.counts[1][1]

    def __getitem__(self, key):
        gold, pred = key
        return self.counts[int(gold)][int(pred)]


def confusion(pred, gold) -> ConfusionMatrix:
    pred = [int(p) for p in pred]
    gold = [int(g) for g in gold]
    if len(pred) != len(gold):
        raise ValueError(f"{len(pred)} predictions for {len(gold)} gold tags")
    cells = [[0, 0], [0, 0]]
    for p, g in zip(pred, gold):
        cells[g][p] += 1
    return ConfusionMatrix(tuple(tuple(row) for row in cells))


@dataclass(frozen=True)
class Metrics:
    """Percentages; None marks a zero-denominator (undefined) cell."""

    accuracy: float
    precision: float | None
    recall: float | None
    f1: float | None

    def cells(self):
        return {"accuracy": self.accuracy, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


def metrics(cm: ConfusionMatrix) -> Metrics:
    if cm.total == 0:
        raise ValueError("empty confusion matrix")
    tp = cm[LanguageTag.NATIVE, LanguageTag.NATIVE]
    fn = cm[LanguageTag.NATIVE, LanguageTag.EN]
    fp = cm[LanguageTag.EN, LanguageTag.NATIVE]
    accuracy = 100.0 * cm.trace / cm.total
    precision = 100.0 * tp / (tp + fp) if tp + fp > 0 else None
    recall = 100.0 * tp / (tp + fn) if tp + fn > 0 else None
    if precision is None or recall is None:
        f1 = None
    else:
        p2, r2 = trunc2(precision), trunc2(recall)
        f1 = 2.0 * p2 * r2 / (p2 + r2) if p2 + r2 > 0 else None
    return Metrics(accuracy, precision, recall, f1)


@dataclass(frozen=True)
class CellCheck:
    cell: str
    computed: float | None
    reference: float
    consistent: bool


def check_against_reference(computed: Metrics, reference: tuple[float, float, float, float],
                            tolerance: float = 0.01) -> list[CellCheck]:
    """Compare a metrics row against published reference figures.

    A cell is consistent when the recomputed value falls within the
    tolerance of the reference; inconsistent cells are flagged, not
    silently adopted.
    """
    checks = []
    for (name, value), ref in zip(computed.cells().items(), reference):
        consistent = value is not None and abs(value - ref) <= tolerance + 1e-9
        checks.append(CellCheck(name, value, ref, consistent))
    return checks


@dataclass(frozen=True)
class DeltaReport:
    """Token partition by (word correct?, context correct?)."""

    both_correct: tuple[str, ...]
    context_only: tuple[str, ...]
    word_only: tuple[str, ...]
    both_wrong: tuple[str, ...]
    class_gains: dict[LanguageTag, int]

    @property
    def cell_counts(self):
        return (len(self.both_correct), len(self.context_only),
                len(self.word_only), len(self.both_wrong))


def compare_models(word_preds, context_preds, gold, surfaces) -> DeltaReport:
    lengths = {len(word_preds), len(context_preds), len(gold), len(surfaces)}
    if len(lengths) != 1:
        raise ValueError("misaligned prediction/gold/surface sequences")
    cells = {(True, True): [], (False, True): [], (True, False): [], (False, False): []}
    gains = {LanguageTag.NATIVE: 0, LanguageTag.EN: 0}
    for wp, cp, g, surface in zip(word_preds, context_preds, gold, surfaces):
        word_ok = int(wp) == int(g)
        context_ok = int(cp) == int(g)
        cells[(word_ok, context_ok)].append(surface)
        gains[LanguageTag(int(g))] += int(context_ok) - int(word_ok)
    return DeltaReport(
        both_correct=tuple(cells[(True, True)]),
        context_only=tuple(cells[(False, True)]),
        word_only=tuple(cells[(True, False)]),
        both_wrong=tuple(cells[(False, False)]),
        class_gains=gains,
    )


@dataclass(frozen=True)
class SurfaceAmbiguity:
    surface: str
    occurrences: int
    records: tuple[tuple[int, int, int], ...]  # (gold, word pred, context pred)
    word_correct: int
    context_correct: int

    @property
    def word_wrong(self) -> int:
        return self.occurrences - self.word_correct

    @property
    def context_wrong(self) -> int:
        return self.occurrences - self.context_correct


@dataclass(frozen=True)
class AmbiguityReport:
    """Per-surface tallies for forms carrying both gold tags in the corpus."""

    surfaces: tuple[SurfaceAmbiguity, ...]

    @property
    def word_correct(self) -> int:
        return sum(s.word_correct for s in self.surfaces)

    @property
    def context_correct(self) -> int:
        return sum(s.context_correct for s in self.surfaces)

    @property
    def occurrences(self) -> int:
        return sum(s.occurrences for s in self.surfaces)


def ambiguity_report(corpus: Corpus, word_preds, context_preds) -> AmbiguityReport:
    tokens = list(corpus.tokens())
    if len(tokens) != len(word_preds) or len(tokens) != len(context_preds):
        raise ValueError("predictions do not align with the corpus tokens")
    by_surface: dict[str, list[tuple[int, int, int]]] = {}
    gold_tags: dict[str, set[int]] = {}
    for token, wp, cp in zip(tokens, word_preds, context_preds):
        record = (int(token.gold), int(wp), int(cp))
        by_surface.setdefault(token.surface, []).append(record)
        gold_tags.setdefault(token.surface, set()).add(int(token.gold))
    surfaces = []
    for surface in sorted(by_surface):
        if len(gold_tags[surface]) != 2:
            continue
        records = tuple(by_surface[surface])
        surfaces.append(SurfaceAmbiguity(
            surface=surface,
            occurrences=len(records),
            records=records,
            word_correct=sum(1 for g, w, _ in records if w == g),
            context_correct=sum(1 for g, _, c in records if c == g),
        ))
    return AmbiguityReport(tuple(surfaces))


def _format_cell(value: float | None) -> str:
    return "undef" if value is None else f"{trunc2(value):.2f}"


def render_metrics_table(rows: dict[str, Metrics]) -> str:
    width = max(len(name) for name in rows) + 2
    lines = [f"{'':<{width}}Acc     Prec    Rec     F1"]
    for name, m in rows.items():
        cells = "  ".join(f"{_format_cell(v):>6}" for v in m.cells().values())
        lines.append(f"{name:<{width}}{cells}")
    return "\n".join(lines)


def render_confusion(cm: ConfusionMatrix, native_name: str = "native",
                     en_name: str = "en") -> str:
    """Predicted classes as rows, gold classes as columns."""
    names = (native_name, en_name)
    width = max(10, max(len(n) for n in names) + 2)
    corner = "pred\\gold"
    header = f"{corner:<{width}}" + "".join(f"{n:>10}" for n in names)
    lines = [header]
    for pred in (0, 1):
        row = [cm[gold, pred] for gold in (0, 1)]
        lines.append(f"{names[pred]:<{width}}" + "".join(f"{c:>10}" for c in row))
    return "\n".join(lines)


def metrics_csv(rows: dict[str, Metrics]) -> str:
    lines = ["model,accuracy,precision,recall,f1"]
    for name, m in rows.items():
        cells = ",".join(_format_cell(v) for v in m.cells().values())
        lines.append(f"{name},{cells}")
    return "\n".join(lines) + "\n"
