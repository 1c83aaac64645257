import json

import pytest

from cptcoder.cli import main


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "claims.jsonl"
    rc = main(
        [
            "gen-data",
            "--providers", "4",
            "--icds", "15",
            "--cpts", "20",
            "--claims", "250",
            "--drop", "0.02",
            "--add", "0.05",
            "--swap", "0.2",
            "--seed", "3",
            "--out", str(data),
        ]
    )
    assert rc == 0
    return root, data


def test_gen_data_outputs(corpus):
    root, data = corpus
    assert data.exists()
    assert data.with_suffix(".jsonl.truth").exists()
    assert data.with_suffix(".jsonl.rules").exists()
    first = json.loads(data.read_text().splitlines()[0])
    assert {"claim_id", "provider_id", "age", "gender", "icds", "cpts"} <= set(first)


def test_gen_data_deterministic(corpus, tmp_path):
    root, data = corpus
    again = tmp_path / "again.jsonl"
    main(
        [
            "gen-data",
            "--providers", "4", "--icds", "15", "--cpts", "20", "--claims", "250",
            "--drop", "0.02", "--add", "0.05", "--swap", "0.2", "--seed", "3",
            "--out", str(again),
        ]
    )
    assert again.read_bytes() == data.read_bytes()


def test_train_bayes_and_evaluate(corpus, capsys):
    root, data = corpus
    model = root / "model.bayes"
    assert main(["train-bayes", "--data", str(data), "--alpha", "1.0",
                 "--min-cpt-count", "2", "--out", str(model)]) == 0
    report = root / "bayes.json"
    rc = main(
        [
            "evaluate", "--data", str(data), "--model", str(model), "--method", "bayes",
            "--k", "1,3", "--rules", str(data.with_suffix(".jsonl.rules")),
            "--out", str(report),
        ]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "recall@3" in out
    doc = json.loads(report.read_text())
    assert doc["methods"][0]["method"] == "bayes"
    assert 0.0 <= doc["methods"][0]["recall_at_k"]["3"] <= 1.0


def test_mine_rules_and_evaluate(corpus):
    root, data = corpus
    model = root / "model.apriori"
    assert main(["mine-rules", "--data", str(data), "--min-support", "0.01",
                 "--min-confidence", "0.2", "--out", str(model)]) == 0
    assert model.exists()
    rc = main(["evaluate", "--data", str(data), "--model", str(model),
               "--method", "apriori", "--k", "3"])
    assert rc == 0


def test_train_nn_suggest_roundtrip(corpus, capsys):
    root, data = corpus
    model = root / "model.nnm"
    rc = main(
        [
            "train-nn", "--data", str(data), "--val-fraction", "0.1",
            "--dc", "4", "--dp", "4", "--hidden", "16,16,8",
            "--lr", "1e-3", "--batch", "32", "--epochs", "3",
            "--seed", "0", "--min-cpt-count", "2", "--out", str(model),
        ]
    )
    assert rc == 0
    assert model.exists()
    capsys.readouterr()

    first = json.loads(data.read_text().splitlines()[0])
    rc = main(
        [
            "suggest", "--model", str(model), "--method", "nn",
            "--rules", str(data.with_suffix(".jsonl.rules")),
            "--provider", first["provider_id"],
            "--age", str(first["age"]), "--gender", first["gender"],
            "--icd", first["icds"][0], "--k", "3",
        ]
    )
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["suggestions"]) <= 3
    for s in doc["suggestions"]:
        assert 0.0 < s["score"] < 1.0


def test_suggest_stdin(corpus, capsys, monkeypatch):
    import io

    root, data = corpus
    model = root / "model.bayes"
    first = json.loads(data.read_text().splitlines()[0])
    request = {
        "provider_id": first["provider_id"],
        "age": first["age"],
        "gender": first["gender"],
        "icds": first["icds"],
        "k": 2,
    }
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(request)))
    rc = main(["suggest", "--model", str(model), "--method", "bayes", "--stdin"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["suggestions"]) <= 2


def test_suggest_requires_icd(corpus):
    root, _ = corpus
    rc = main(["suggest", "--model", str(root / "model.bayes"), "--method", "bayes"])
    assert rc == 2


def test_serve_requires_registry(tmp_path):
    assert main(["serve", "--port", "9"]) == 2
    empty = tmp_path / "reg"
    empty.mkdir()
    rc = main(["serve", "--registry", str(empty), "--store", str(tmp_path / "s.jsonl")])
    assert rc == 1
