"""Command-line pipeline: synth, stats, train-word, calibrate,
train-context, tag, evaluate.

Data goes to stdout, diagnostics to stderr; every command is
deterministic given (config, seed, inputs).  Training commands write a
history CSV and a rendered curve figure next to the model archive;
evaluate writes a metrics CSV and confusion/metrics figures next to the
plain-text report.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import archive as ar
from .contextmodel import (
    ContextModel,
    ContextModelConfig,
    WordScoreCache,
    tag_instance,
    train_context_model,
)
from .corpus import (
    Corpus,
    CorpusError,
    LanguageTag,
    Split,
    SynthConfig,
    build_char_vocab,
    check_tag_map,
    corpus_stats,
    default_tag_map,
    parse_corpus,
    parse_untagged,
    serialize_corpus,
    synth_corpus,
    tag_surface,
)
from .evaluation import (
    ambiguity_report,
    compare_models,
    confusion,
    metrics,
    metrics_csv,
    render_confusion,
    render_metrics_table,
)
from .wordmodel import (
    BaselineModel,
    WordModelConfig,
    build_word_model,
    calibrate_threshold,
    classify_encoded,
    score_batch,
    train_word_model,
    word_samples,
)


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    word: WordModelConfig = field(default_factory=WordModelConfig)
    context: ContextModelConfig = field(default_factory=ContextModelConfig)
    tag_map: dict[str, LanguageTag] = field(default_factory=default_tag_map)

    def to_json(self) -> str:
        payload = {
            "seed": self.seed,
            "word": asdict(self.word),
            "context": asdict(self.context),
            "tag_map": {tag_surface(self.tag_map, t): t.name.lower()
                        for t in LanguageTag},
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def parse_tag_map(spec: str) -> dict[str, LanguageTag]:
    """`native=bn,en=en` maps the two class roles onto tag surfaces."""
    roles = {"native": LanguageTag.NATIVE, "en": LanguageTag.EN}
    mapping = {}
    for part in spec.split(","):
        role, _, surface = part.partition("=")
        role = role.strip().lower()
        if role not in roles or not surface:
            raise CorpusError(f"bad tag-map entry {part!r} (expected role=surface)")
        mapping[surface.strip()] = roles[role]
    return check_tag_map(mapping)


def resolve_config(args) -> PipelineConfig:
    """Defaults, then --config file, then explicit CLI flags."""
    word_kw, context_kw = {}, {}
    seed = 0
    tag_map = default_tag_map()
    config_path = getattr(args, "config", None)
    if config_path:
        body = json.loads(Path(config_path).read_text(encoding="utf-8"))
        seed = body.get("seed", seed)
        word_kw.update(body.get("word", {}))
        context_kw.update(body.get("context", {}))
        if "tag_map" in body:
            tag_map = parse_tag_map(
                ",".join(f"{role}={surface}"
                         for surface, role in body["tag_map"].items()))
    if getattr(args, "seed", None) is not None:
        seed = args.seed
        word_kw["seed"] = seed
        context_kw["seed"] = seed
    else:
        word_kw.setdefault("seed", seed)
        context_kw.setdefault("seed", seed)
    if getattr(args, "epochs", None) is not None:
        word_kw["epochs"] = args.epochs
        context_kw["epochs"] = args.epochs
    if getattr(args, "batch_size", None) is not None:
        word_kw["batch_size"] = args.batch_size
        context_kw["batch_size"] = args.batch_size
    if getattr(args, "tag_map", None):
        tag_map = parse_tag_map(args.tag_map)
    for key in ("kernel_sizes", "lstm_sizes", "dense_sizes"):
        if key in word_kw:
            word_kw[key] = tuple(word_kw[key])
    return PipelineConfig(seed=seed, word=WordModelConfig(**word_kw),
                          context=ContextModelConfig(**context_kw), tag_map=tag_map)


def print_config_and_exit(config: PipelineConfig) -> int:
    print(config.to_json())
    return 0


def read_corpus(path, tag_map, split: Split) -> Corpus:
    text = Path(path).read_text(encoding="utf-8")
    return parse_corpus(text, tag_map, split)


def out_dir(args) -> Path:
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def info(message: str) -> None:
    print(message, file=sys.stderr)


def cmd_synth(args) -> int:
    config = resolve_config(args)
    if args.print_config:
        return print_config_and_exit(config)
    synth_cfg = SynthConfig(instances=args.instances,
                            tokens_per_instance=args.tokens,
                            ambiguity_rate=args.ambiguity,
                            seed=config.seed)
    train, dev, test = synth_corpus(synth_cfg)
    target = out_dir(args)
    print("split\tinstances\tnative_tokens\tunique_native_tokens\tmean_cmi")
    for corpus, name in ((train, "train"), (dev, "dev"), (test, "test")):
        (target / f"{name}.tsv").write_text(
            serialize_corpus(corpus, config.tag_map), encoding="utf-8")
        stats = corpus_stats(corpus)
        print(f"{name}\t{stats.instances}\t{stats.native_tokens}"
              f"\t{stats.unique_native_tokens}\t{stats.mean_cmi:.2f}")
    info(f"wrote train/dev/test TSV to {target}")
    return 0


def cmd_stats(args) -> int:
    config = resolve_config(args)
    if args.print_config:
        return print_config_and_exit(config)
    corpus = read_corpus(args.corpus, config.tag_map, Split.TRAIN)
    stats = corpus_stats(corpus)
    print("instances\tnative_tokens\tunique_native_tokens\tmean_cmi")
    print(f"{stats.instances}\t{stats.native_tokens}"
          f"\t{stats.unique_native_tokens}\t{stats.mean_cmi:.2f}")
    return 0


def cmd_train_word(args) -> int:
    config = resolve_config(args)
    if args.print_config:
        return print_config_and_exit(config)
    train = read_corpus(args.train, config.tag_map, Split.TRAIN)
    dev = read_corpus(args.dev, config.tag_map, Split.DEV)
    vocab = build_char_vocab(train)
    cfg = config.word
    if args.architecture == "stacked-lstm":
        model = BaselineModel(cfg, vocab)
    else:
        model = build_word_model(cfg, vocab)
    samples = word_samples(train, vocab, cfg.max_len)
    dev_set = word_samples(dev, vocab, cfg.max_len)
    info(f"training {model.kind} model on {samples[0].shape[0]} tokens "
         f"({cfg.epochs} epochs, batch {cfg.batch_size})")
    history = train_word_model(
        model, samples, dev_set,
        log=lambda row: info(f"epoch {row.epoch}: loss={row.loss:.4f} "
                             f"train_acc={row.train_acc:.4f} dev_acc={row.dev_acc:.4f}"))
    target = out_dir(args)
    archive_path = target / f"{model.kind}_model.json"
    ar.save_word_model(archive_path, model, None, config.tag_map)
    (target / f"{model.kind}_history.csv").write_text(history.to_csv(), encoding="utf-8")
    from .plots import save_history_figure
    save_history_figure(history, target / f"{model.kind}_history.png",
                        f"{model.kind} model")
    print(f"final dev accuracy: {100.0 * history.epochs[-1].dev_acc:.2f}%")
    info(f"wrote {archive_path}")
    return 0


def cmd_calibrate(args) -> int:
    config = resolve_config(args)
    if args.print_config:
        return print_config_and_exit(config)
    model, _, tag_map = ar.load_word_model(args.word_model)
    dev = read_corpus(args.dev, tag_map, Split.DEV)
    ids, labels = word_samples(dev, model.vocab, model.config.max_len)
    scores = score_batch(model, ids)
    threshold, accuracy = calibrate_threshold(scores, labels.astype(int))
    target = Path(args.out) if args.out else Path(args.word_model)
    ar.save_word_model(target, model, threshold, tag_map)
    print(f"threshold: {threshold.value:.2f}")
    print(f"dev accuracy at threshold: {100.0 * accuracy:.2f}%")
    info(f"wrote {target}")
    return 0


def cmd_train_context(args) -> int:
    config = resolve_config(args)
    if args.print_config:
        return print_config_and_exit(config)
    word_model, _, tag_map = ar.load_word_model(args.word_model)
    train = read_corpus(args.train, tag_map, Split.TRAIN)
    dev = read_corpus(args.dev, tag_map, Split.DEV)
    cfg = config.context
    model = ContextModel(cfg, word_model.vocab)
    info(f"training context model on {len(train)} instances "
         f"({cfg.epochs} epochs, batch {cfg.batch_size})")
    history = train_context_model(
        model, word_model, train, dev,
        log=lambda row: info(f"epoch {row.epoch}: loss={row.loss:.4f} "
                             f"train_acc={row.train_acc:.4f} dev_acc={row.dev_acc:.4f}"))
    target = out_dir(args)
    archive_path = target / "context_model.json"
    ar.save_context_model(archive_path, model, tag_map)
    (target / "context_history.csv").write_text(history.to_csv(), encoding="utf-8")
    from .plots import save_history_figure
    save_history_figure(history, target / "context_history.png", "context model")
    best = max(row.dev_acc for row in history.epochs)
    print(f"best dev accuracy: {100.0 * best:.2f}%")
    info(f"wrote {archive_path}")
    return 0


def load_model_pair(args):
    word_model, threshold, tag_map = ar.load_word_model(args.word_model)
    context_model, _ = ar.load_context_model(args.context_model)
    if not ar.archives_compatible(args.word_model, args.context_model):
        raise ar.ArchiveError(
            "word and context archives were built on different vocabularies")
    return word_model, threshold, context_model, tag_map


def cmd_tag(args) -> int:
    config = resolve_config(args)
    if args.print_config:
        return print_config_and_exit(config)
    word_model, _, context_model, tag_map = load_model_pair(args)
    if args.input:
        text = Path(args.input).read_text(encoding="utf-8")
    else:
        text = sys.stdin.read()
    cache = WordScoreCache(word_model)
    blocks = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        words = line.split()
        if not words:
            info(f"warning: skipping empty line {lineno}")
            continue
        tags = tag_instance(context_model, word_model, words, cache)
        if blocks:
            print()
        for word, tag in zip(words, tags):
            print(f"{word}\t{tag_surface(tag_map, tag)}")
        blocks += 1
    if blocks == 0:
        raise CorpusError("no sentences in input")
    return 0


def cmd_evaluate(args) -> int:
    config = resolve_config(args)
    if args.print_config:
        return print_config_and_exit(config)
    word_model, threshold, context_model, tag_map = load_model_pair(args)
    if threshold is None:
        raise ar.ArchiveError(
            "word archive has no calibrated threshold; run calibrate first")
    test = read_corpus(args.test, tag_map, Split.TEST)
    surfaces = [t.surface for t in test.tokens()]
    gold = [int(t.gold) for t in test.tokens()]
    ids, _ = word_samples(test, word_model.vocab, word_model.config.max_len)
    word_preds = classify_encoded(word_model, threshold, ids).tolist()
    cache = WordScoreCache(word_model)
    context_preds = []
    for instance in test.instances:
        tags = tag_instance(context_model, word_model, instance.surfaces(), cache)
        context_preds.extend(int(t) for t in tags)
    native_name = tag_surface(tag_map, LanguageTag.NATIVE)
    en_name = tag_surface(tag_map, LanguageTag.EN)
    word_cm = confusion(word_preds, gold)
    context_cm = confusion(context_preds, gold)
    rows = {"word model": metrics(word_cm), "context model": metrics(context_cm)}
    delta = compare_models(word_preds, context_preds, gold, surfaces)
    ambiguity = ambiguity_report(test, word_preds, context_preds)

    lines = [render_metrics_table(rows), ""]
    lines += [f"confusion ({name})\n" + render_confusion(cm, native_name, en_name)
              for name, cm in (("word model", word_cm), ("context model", context_cm))]
    counts = delta.cell_counts
    lines.append("")
    lines.append(f"agreement: both_correct={counts[0]} context_only={counts[1]} "
                 f"word_only={counts[2]} both_wrong={counts[3]}")
    gains = ", ".join(f"{tag_surface(tag_map, t)}: {delta.class_gains[t]:+d}"
                      for t in LanguageTag)
    lines.append(f"context-over-word gains by class: {gains}")
    fixed = sorted(set(delta.context_only))[:10]
    if fixed:
        lines.append("tokens fixed by context: " + " ".join(fixed))
    lines.append("")
    lines.append(f"ambiguous surfaces (both gold tags): {len(ambiguity.surfaces)}; "
                 f"occurrences: {ambiguity.occurrences}")
    if ambiguity.occurrences:
        lines.append(f"word model correct on ambiguous: {ambiguity.word_correct}")
        lines.append(f"context model correct on ambiguous: {ambiguity.context_correct}")
    report = "\n".join(lines) + "\n"
    print(report, end="")

    target = out_dir(args)
    (target / "report.txt").write_text(report, encoding="utf-8")
    (target / "metrics.csv").write_text(metrics_csv(rows), encoding="utf-8")
    from .plots import save_confusion_figure, save_metrics_figure
    save_confusion_figure({"word model": word_cm, "context model": context_cm},
                          target / "confusion.png", native_name, en_name)
    save_metrics_figure(rows, target / "metrics.png")
    info(f"wrote report and figures to {target}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixlid",
        description="Two-stage word and context language tagger for code-mixed text.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, seeded=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--tag-map", help="role=surface pairs, e.g. native=bn,en=en")
        p.add_argument("--print-config", action="store_true",
                       help="print the resolved configuration and exit")
        if seeded:
            p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("synth", help="generate a synthetic code-mixed corpus")
    common(p)
    p.add_argument("--out", required=True)
    p.add_argument("--instances", type=int, default=6000,
                   help="total instances, split 3:1:2 into train/dev/test")
    p.add_argument("--tokens", type=int, default=8)
    p.add_argument("--ambiguity", type=float, default=0.3)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("stats", help="corpus statistics (token counts, mean CMI)")
    common(p)
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train-word", help="train and save the word-level scorer")
    common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--architecture", choices=("multichannel", "stacked-lstm"),
                   default="multichannel")
    p.set_defaults(func=cmd_train_word)

    p = sub.add_parser("calibrate", help="pick the score threshold on dev data")
    common(p)
    p.add_argument("--word-model", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--out", help="output archive (default: update in place)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("train-context", help="train and save the Bi-LSTM-CRF tagger")
    common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--word-model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.set_defaults(func=cmd_train_context)

    p = sub.add_parser("tag", help="tag plain-text sentences (one per line)")
    common(p)
    p.add_argument("--word-model", required=True)
    p.add_argument("--context-model", required=True)
    p.add_argument("--input", help="input file (default: stdin)")
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("evaluate", help="score both models on a tagged test set")
    common(p)
    p.add_argument("--word-model", required=True)
    p.add_argument("--context-model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as err:
        print(f"error: missing file: {err.filename}", file=sys.stderr)
        return 1
    except (CorpusError, ar.ArchiveError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
