import json
from pathlib import Path

import pytest

from mixlid.cli import main, parse_tag_map
from mixlid.corpus import CorpusError, LanguageTag


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Tiny corpus plus trained word/context archives shared by CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    config = {
        "seed": 13,
        "word": {"char_dim": 6, "filters_per_channel": 4, "lstm_sizes": [4, 6],
                 "max_len": 10, "epochs": 3, "batch_size": 32,
                 "learning_rate": 0.01},
        "context": {"char_dim": 6, "char_encoder_hidden": 4, "bilstm_hidden": 8,
                    "max_len": 10, "epochs": 3, "lr0": 0.1, "batch_size": 8},
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config))
    data = root / "data"
    assert main(["synth", "--out", str(data), "--instances", "120", "--tokens", "4",
                 "--ambiguity", "0.2", "--seed", "13"]) == 0
    models = root / "models"
    assert main(["train-word", "--train", str(data / "train.tsv"),
                 "--dev", str(data / "dev.tsv"), "--out", str(models),
                 "--config", str(config_path)]) == 0
    assert main(["calibrate", "--word-model", str(models / "word_model.json"),
                 "--dev", str(data / "dev.tsv")]) == 0
    assert main(["train-context", "--train", str(data / "train.tsv"),
                 "--dev", str(data / "dev.tsv"),
                 "--word-model", str(models / "word_model.json"),
                 "--out", str(models), "--config", str(config_path)]) == 0
    return {"root": root, "data": data, "models": models, "config": config_path}


def test_parse_tag_map():
    mapping = parse_tag_map("native=bn,en=en")
    assert mapping == {"bn": LanguageTag.NATIVE, "en": LanguageTag.EN}
    with pytest.raises(CorpusError):
        parse_tag_map("native=bn")
    with pytest.raises(CorpusError):
        parse_tag_map("nativebn,en=en")


def test_synth_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["synth", "--out", str(out), "--instances", "60",
                     "--tokens", "4", "--ambiguity", "0.4", "--seed", "3"]) == 0
    for name in ("train.tsv", "dev.tsv", "test.tsv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_synth_prints_stats_table(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path / "s"), "--instances", "60",
                 "--tokens", "4", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    lines = out.strip().split("\n")
    assert lines[0].startswith("split\tinstances")
    assert len(lines) == 4


def test_stats_command_hand_computed(tmp_path, capsys):
    corpus = tmp_path / "c.tsv"
    # Two instances: all-native (cmi 0) and a 1/1 split (cmi 50); mean 25.
    corpus.write_text("aam\tbn\njam\tbn\n\nkathal\tbn\ntraffic\ten\n")
    assert main(["stats", "--corpus", str(corpus), "--tag-map",
                 "native=bn,en=en"]) == 0
    out = capsys.readouterr().out.strip().split("\n")
    assert out[-1] == "2\t3\t3\t25.00"


def test_stats_unknown_tag_gives_error_exit(tmp_path, capsys):
    corpus = tmp_path / "c.tsv"
    corpus.write_text("aam\tbn\n")
    assert main(["stats", "--corpus", str(corpus)]) == 1
    assert "unknown tag" in capsys.readouterr().err


def test_missing_train_file_exit_code(tmp_path, capsys):
    missing = tmp_path / "nope.tsv"
    assert main(["train-word", "--train", str(missing), "--dev", str(missing),
                 "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert "nope.tsv" in err


def test_train_word_outputs(workspace, capsys):
    models = workspace["models"]
    assert (models / "word_model.json").exists()
    assert (models / "word_history.csv").exists()
    assert (models / "word_history.png").exists()
    history = (models / "word_history.csv").read_text().strip().split("\n")
    assert history[0] == "epoch,loss,train_acc,dev_acc"
    assert len(history) == 4


def test_calibrate_stores_threshold(workspace):
    body = json.loads((workspace["models"] / "word_model.json").read_text())
    assert body["threshold"] is not None
    assert 0.0 <= body["threshold"] <= 1.0


def test_train_context_outputs(workspace):
    models = workspace["models"]
    assert (models / "context_model.json").exists()
    assert (models / "context_history.csv").exists()
    assert (models / "context_history.png").exists()


def test_same_seed_byte_identical_archives(workspace, tmp_path):
    data = workspace["data"]
    config = workspace["config"]
    outs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert main(["train-word", "--train", str(data / "train.tsv"),
                     "--dev", str(data / "dev.tsv"), "--out", str(out),
                     "--config", str(config)]) == 0
        outs.append(out)
    a = (outs[0] / "word_model.json").read_bytes()
    b = (outs[1] / "word_model.json").read_bytes()
    assert a == b


def test_tag_command_shapes(workspace, tmp_path, capsys):
    models = workspace["models"]
    source = tmp_path / "input.txt"
    source.write_text("aam jam\n\nzoos spur\n")
    assert main(["tag", "--word-model", str(models / "word_model.json"),
                 "--context-model", str(models / "context_model.json"),
                 "--input", str(source)]) == 0
    captured = capsys.readouterr()
    blocks = captured.out.strip().split("\n\n")
    assert len(blocks) == 2
    for block, words in zip(blocks, (["aam", "jam"], ["zoos", "spur"])):
        lines = block.split("\n")
        assert len(lines) == len(words)
        for line, word in zip(lines, words):
            surface, tag = line.split("\t")
            assert surface == word
            assert tag in ("native", "en")
    assert "skipping empty line 2" in captured.err


def test_tag_rejects_empty_input(workspace, tmp_path, capsys):
    models = workspace["models"]
    source = tmp_path / "blank.txt"
    source.write_text("\n\n")
    assert main(["tag", "--word-model", str(models / "word_model.json"),
                 "--context-model", str(models / "context_model.json"),
                 "--input", str(source)]) == 1
    assert "no sentences" in capsys.readouterr().err


def test_tag_rejects_vocab_mismatch(workspace, tmp_path, capsys):
    # A context model trained on a different corpus has a different vocab.
    other = tmp_path / "other"
    data2 = tmp_path / "data2"
    assert main(["synth", "--out", str(data2), "--instances", "60",
                 "--tokens", "3", "--seed", "77"]) == 0
    assert main(["train-word", "--train", str(data2 / "train.tsv"),
                 "--dev", str(data2 / "dev.tsv"), "--out", str(other),
                 "--config", str(workspace["config"])]) == 0
    assert main(["train-context", "--train", str(data2 / "train.tsv"),
                 "--dev", str(data2 / "dev.tsv"),
                 "--word-model", str(other / "word_model.json"),
                 "--out", str(other), "--config", str(workspace["config"])]) == 0
    capsys.readouterr()
    code = main(["tag", "--word-model", str(workspace["models"] / "word_model.json"),
                 "--context-model", str(other / "context_model.json"),
                 "--input", "/dev/null"])
    assert code == 1
    assert "vocabular" in capsys.readouterr().err


def test_evaluate_outputs(workspace, tmp_path, capsys):
    models = workspace["models"]
    report_dir = tmp_path / "report"
    assert main(["evaluate", "--word-model", str(models / "word_model.json"),
                 "--context-model", str(models / "context_model.json"),
                 "--test", str(workspace["data"] / "test.tsv"),
                 "--out", str(report_dir)]) == 0
    out = capsys.readouterr().out
    assert "Acc" in out and "word model" in out and "context model" in out
    assert "pred\\gold" in out
    assert "ambiguous surfaces" in out
    for name in ("report.txt", "metrics.csv", "confusion.png", "metrics.png"):
        assert (report_dir / name).exists()
    csv_lines = (report_dir / "metrics.csv").read_text().strip().split("\n")
    assert csv_lines[0] == "model,accuracy,precision,recall,f1"
    assert len(csv_lines) == 3


def test_print_config(capsys):
    assert main(["train-word", "--train", "x", "--dev", "y", "--out", "z",
                 "--print-config", "--seed", "42"]) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["seed"] == 42
    assert body["word"]["seed"] == 42
    assert body["word"]["epochs"] == 30
    assert body["word"]["batch_size"] == 64
    assert body["word"]["dropout"] == 0.2
    assert body["context"]["epochs"] == 210
    assert body["context"]["batch_size"] == 16
    assert body["context"]["lr0"] == 0.015
    assert body["context"]["decay"] == 0.05
    assert body["context"]["l2"] == 1e-8


def test_tag_map_flag_changes_output_surfaces(workspace, tmp_path, capsys):
    data = tmp_path / "bn"
    assert main(["synth", "--out", str(data), "--instances", "60", "--tokens", "3",
                 "--seed", "5", "--tag-map", "native=bn,en=en"]) == 0
    text = (data / "train.tsv").read_text()
    assert "\tbn" in text and "\ten" in text and "\tnative" not in text
