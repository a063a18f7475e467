import json
import math
import os
import random

import pytest

import fnd

DATA_DIR = os.environ.get("FND_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", ".."))


def golden_rows():
    path = os.path.join(DATA_DIR, "tests", "fixtures", "cleaning_golden.tsv")
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n").split("\t", 1) for line in f if line.strip() and not line.startswith("#")]


def test_clean_text_golden_rows():
    for before, after in golden_rows()[:4]:
        cleaned, _ = fnd.clean_text(before)
        assert cleaned == after


def test_clean_text_options_and_report():
    cleaned, report = fnd.clean_text("كوفيد19 في البيت!!", stopwords=["في"])
    assert cleaned == "كوفيد البيت"
    assert report["digits"] == 2
    assert report["stopwords"] == 1
    kept, _ = fnd.clean_text("كوفيد19", remove_digits=False)
    assert kept == "كوفيد19"
    with pytest.raises(fnd.ValidationError):
        fnd.clean_text("x", repeat_threshold=1)


def test_vocab_encode_round_trip(tmp_path):
    vocab = fnd.train_vocab(["اب اب اب"], vocab_size=8, min_frequency=2)
    assert vocab.tokens[5:] == ["##ب", "ا", "اب"]
    ids, mask = vocab.encode("اب ق", max_len=6)
    assert ids == [2, 7, 1, 3, 0, 0]
    assert mask == [1, 1, 1, 1, 0, 0]
    path = tmp_path / "vocab.txt"
    vocab.save(path)
    assert fnd.Vocabulary.load(path).tokens == vocab.tokens
    assert fnd.oov_rate(["اب ق"], vocab) == 0.5


def test_split_and_metrics():
    docs = fnd.synthetic_corpus(n=100, seed=3)
    assert len(docs) == 100
    train, test = fnd.split_train_test(docs, train_fraction=0.8, seed=1)
    assert len(train) == 80 and len(test) == 20
    assert {d["id"] for d in train}.isdisjoint(d["id"] for d in test)

    rng = random.Random(0)
    pred = [rng.randint(0, 1) for _ in range(500)]
    truth = [rng.randint(0, 1) for _ in range(500)]
    m = fnd.metrics(pred, truth)
    tp = sum(p == 0 and t == 0 for p, t in zip(pred, truth))
    fp = sum(p == 0 and t == 1 for p, t in zip(pred, truth))
    assert m["tp"] == tp and m["fp"] == fp
    assert abs(m["precision"] - tp / (tp + fp)) < 1e-12
    assert fnd.metrics([1, 1], [1, 1])["precision"] is None
    assert abs(fnd.f1_score(0.994, 0.983) - 0.989) <= 0.0015


def test_softmax():
    rows = fnd.softmax([[0.0, 0.0], [1000.0, 1001.0]])
    assert rows[0] == [0.5, 0.5]
    assert math.isclose(sum(rows[1]), 1.0)


def test_run_cli(tmp_path):
    out = tmp_path / "c.jsonl"
    assert fnd.run_cli(["synth", "--n", "30", "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 30
    assert set(json.loads(lines[0])) >= {"id", "text", "label"}
    assert fnd.run_cli(["synth"]) == 2
