"""Acceptance suite: one test per release criterion, at pinned tolerances.

The synthetic-recovery and method-ordering tests train the full model on a
50k-claim generated corpus and take several minutes; everything else is
fast. Run with -s to see the per-criterion summary lines.
"""

import math
import time
from itertools import combinations

import numpy as np
import pytest
from fastapi.testclient import TestClient

import cptcoder.nn as nn
from cptcoder import apriori, bayes
from cptcoder.apriori import DIAG, PROC, Item
from cptcoder.dataset import build_vocabs, load_claims, make_claim, split
from cptcoder.evaluate import (
    apriori_suggester,
    bayes_suggester,
    evaluate,
    nn_suggester,
    oracle_suggester,
    precision_recall_at_k,
    render_table,
)
from cptcoder.nn.net import _forward_arrays
from cptcoder.rules import AgeGenderRule, filter_predictions, save_rules
from cptcoder.service import ServiceConfig, create_app
from cptcoder.synthgen import SyntheticSpec, generate_synthetic

from conftest import random_toy_batch, random_toy_model

CORPUS_SPEC = SyntheticSpec(
    n_providers=40,
    n_icds=500,
    n_cpts=300,
    n_claims=50_000,
    noise_drop=0.05,
    noise_add=0.05,
    provider_swap=0.2,
    seed=20240501,
)
SPLIT_SEED = 7
VAL_SEED = 8
NN_DIMS = nn.Dims(d_c=8, d_p=32, hidden=(512, 512, 256))
NN_HYPER = nn.TrainHyper(learning_rate=1e-3, batch_size=256, epochs=120, seed=0)
EVAL_K = 3
TRAIN_BUDGET_SECONDS = 30 * 60


def _report(line: str) -> None:
    print(f"\n[acceptance] {line}")


# ----------------------------------------------------------------------
# shared heavy fixtures: one corpus, one trained model per session
# ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def corpus():
    claims, truth = generate_synthetic(CORPUS_SPEC)
    train_all, test_claims = split(claims, 0.2, SPLIT_SEED)
    vocabs = build_vocabs(train_all, min_cpt_count=5)
    return {
        "claims": claims,
        "truth": truth,
        "train": train_all,
        "test": test_claims,
        "vocabs": vocabs,
        "label_space": set(vocabs.cpt_labels),
    }


@pytest.fixture(scope="module")
def ceiling(corpus):
    report = evaluate(
        oracle_suggester(corpus["truth"]),
        corpus["test"],
        [EVAL_K],
        corpus["truth"].rules,
        corpus["label_space"],
        method="ceiling",
    )
    return report.recall_at_k[EVAL_K]


@pytest.fixture(scope="module")
def trained_nn(corpus):
    train_claims, val_claims = split(corpus["train"], 0.05, VAL_SEED)
    started = time.perf_counter()
    model, history = nn.train(train_claims, val_claims, corpus["vocabs"], NN_DIMS, NN_HYPER)
    seconds = time.perf_counter() - started
    return {"model": model, "history": history, "train_seconds": seconds}


@pytest.fixture(scope="module")
def method_reports(corpus, trained_nn):
    test_claims = corpus["test"]
    rules = corpus["truth"].rules
    space = corpus["label_space"]
    reports = {
        "nn": evaluate(
            nn_suggester(trained_nn["model"]), test_claims, [EVAL_K], rules, space, "nn"
        ),
        "bayes": evaluate(
            bayes_suggester(bayes.fit(corpus["train"], corpus["vocabs"], alpha=1.0)),
            test_claims,
            [EVAL_K],
            rules,
            space,
            "bayes",
        ),
        "apriori": evaluate(
            apriori_suggester(apriori.mine_rules(corpus["train"], 0.001, 0.2)),
            test_claims,
            [EVAL_K],
            rules,
            space,
            "apriori",
        ),
    }
    return reports


# ----------------------------------------------------------------------
# criterion: gradient check
# ----------------------------------------------------------------------


def test_gradient_check_against_finite_differences():
    rng = np.random.default_rng(902)
    step = 1e-3
    n_models = 20
    worst = 0.0
    started = time.perf_counter()
    checked = 0
    while checked < n_models:
        model = random_toy_model(rng, max_labels=5, max_dim=4).astype(np.float64)
        batch, targets = random_toy_batch(rng, model, max_batch=3)
        if _relu_margin(model, batch) <= 5 * step:
            continue  # resample: a pre-activation this close to the ReLU kink
            # makes the two-sided quotient meaningless for any implementation
        checked += 1
        _, grads = nn.backward(model, batch, targets)

        def loss_of():
            logits, _ = _forward_arrays(model, batch.icd_idx, batch.icd_counts, batch.providers)
            return nn.loss(logits, targets)

        for name, tensor in model.tensors().items():
            fd = np.zeros_like(tensor)
            it = np.nditer(tensor, flags=["multi_index"])
            for _ in it:
                ix = it.multi_index
                orig = tensor[ix]
                tensor[ix] = orig + step
                up = loss_of()
                tensor[ix] = orig - step
                down = loss_of()
                tensor[ix] = orig
                fd[ix] = (up - down) / (2 * step)
            g = grads[name]
            rel = np.linalg.norm(g - fd) / max(np.linalg.norm(g), np.linalg.norm(fd), 1e-12)
            assert rel < 1e-4, f"{name}: relative error {rel:.3e}"
            worst = max(worst, rel)
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"gradient check took {elapsed:.1f}s"
    _report(f"gradient check: {n_models} toy models, worst rel err {worst:.2e}, {elapsed:.1f}s")


def _relu_margin(model, batch):
    from cptcoder.nn import kernels

    pooled = kernels.pool_chars_forward(model.char_embed, batch.icd_idx, batch.icd_counts)
    h = np.concatenate([pooled, model.provider_embed[batch.providers]], axis=1)
    margin = np.inf
    for w, b in zip(model.weights[:3], model.biases[:3]):
        a = h @ w + b
        margin = min(margin, float(np.abs(a).min()))
        h = np.maximum(a, 0)
    return margin


# ----------------------------------------------------------------------
# criterion: loss identity at zero logits
# ----------------------------------------------------------------------


def test_loss_identity_zero_logits():
    rng = np.random.default_rng(11)
    worst = 0.0
    for label_count in (1, 2, 5, 37, 300):
        for _ in range(5):
            targets = (rng.random(label_count) < rng.random()).astype(np.float64)
            got = nn.loss(np.zeros(label_count, dtype=np.float32), targets)
            err = abs(got - label_count * math.log(2.0))
            assert err < 1e-6
            worst = max(worst, err)
    _report(f"loss identity: |loss - C*ln2| <= {worst:.2e} over label counts 1..300")


# ----------------------------------------------------------------------
# criteria: synthetic recovery + method ordering (shared corpus/training)
# ----------------------------------------------------------------------


def test_synthetic_recovery_reaches_ceiling_fraction(corpus, trained_nn, ceiling, method_reports):
    recall = method_reports["nn"].recall_at_k[EVAL_K]
    seconds = trained_nn["train_seconds"]
    _report(
        f"synthetic recovery: nn recall@3 {recall:.4f} vs ceiling {ceiling:.4f} "
        f"(ratio {recall / ceiling:.4f}); training {seconds / 60:.1f} min"
    )
    assert seconds < TRAIN_BUDGET_SECONDS, f"training took {seconds / 60:.1f} min"
    assert recall >= 0.90 * ceiling


def test_method_ordering_matches_comparison_table(method_reports, ceiling):
    r = {m: rep.recall_at_k[EVAL_K] for m, rep in method_reports.items()}
    _report(
        "method ordering: "
        + "  ".join(f"{m} {v:.4f}" for m, v in r.items())
        + f"  (ceiling {ceiling:.4f})\n"
        + render_table(list(method_reports.values()), [EVAL_K])
    )
    assert r["nn"] >= r["bayes"] >= r["apriori"]


# ----------------------------------------------------------------------
# criterion: apriori equals exhaustive enumeration
# ----------------------------------------------------------------------


def _brute_force_frequent(claims, min_support):
    transactions = [set(apriori.claim_items(c)) for c in claims]
    n = len(transactions)
    threshold = max(1, math.ceil(min_support * n))
    universe = sorted({i for t in transactions for i in t})
    out = {}
    for size in range(1, len(universe) + 1):
        for combo in combinations(universe, size):
            count = sum(1 for t in transactions if set(combo) <= t)
            if count >= threshold:
                out[combo] = count
    return out


def test_apriori_oracle_equivalence():
    rng = np.random.default_rng(501)
    icd_pool = [f"A{i:02d}" for i in range(5)]
    cpt_pool = [f"{11111 + i}" for i in range(5)]
    for trial in range(100):
        n_claims = int(rng.integers(2, 65))
        claims = []
        for i in range(n_claims):
            icds = list(rng.choice(icd_pool, size=int(rng.integers(1, 4)), replace=False))
            cpts = list(rng.choice(cpt_pool, size=int(rng.integers(1, 4)), replace=False))
            claims.append(make_claim(f"c{i}", "p", 30, "M", icds, cpts))
        min_support = float(rng.uniform(0.05, 0.7))
        mined = {fs.items: fs.support_count for fs in apriori.mine_frequent(claims, min_support)}
        assert mined == _brute_force_frequent(claims, min_support), f"trial {trial}"

    # pinned fixture: D:A -> P:X conf 2/3 and D:B -> P:Y conf 1.0
    toy = [
        make_claim("t1", "p", 30, "M", ["A00"], ["11111"]),
        make_claim("t2", "p", 30, "M", ["A00"], ["11111"]),
        make_claim("t3", "p", 30, "M", ["A00", "B00"], ["22222"]),
        make_claim("t4", "p", 30, "M", ["B00"], ["22222"]),
    ]
    ruleset = apriori.mine_rules(toy, 0.5, 0.2)
    by_ant = {r.antecedent: r for r in ruleset.rules}
    assert by_ant[(Item(DIAG, "A00"),)].consequent == (Item(PROC, "11111"),)
    assert by_ant[(Item(DIAG, "A00"),)].confidence == pytest.approx(2 / 3)
    assert by_ant[(Item(DIAG, "B00"),)].confidence == 1.0
    _report("apriori oracle: 100 random datasets bitwise-equal to enumeration; fixture ok")


# ----------------------------------------------------------------------
# criterion: bayes equals single-pass tallies
# ----------------------------------------------------------------------


def test_bayes_oracle_equivalence():
    from collections import defaultdict

    rng = np.random.default_rng(601)
    icd_pool = [f"B{i:02d}" for i in range(12)]
    cpt_pool = [f"{20000 + i}" for i in range(9)]
    for trial in range(100):
        n_claims = int(rng.integers(4, 1001))
        claims = []
        for i in range(n_claims):
            icds = list(rng.choice(icd_pool, size=int(rng.integers(1, 4)), replace=False))
            cpts = list(rng.choice(cpt_pool, size=int(rng.integers(1, 4)), replace=False))
            claims.append(
                make_claim(
                    f"c{i}",
                    f"p{int(rng.integers(4))}",
                    int(rng.integers(0, 121)),
                    "M" if rng.random() < 0.5 else "F",
                    icds,
                    cpts,
                )
            )
        vocabs = build_vocabs(claims, min_cpt_count=1)
        model = bayes.fit(claims, vocabs)
        prior = defaultdict(int)
        icd_tally = defaultdict(int)
        gender_tally = defaultdict(int)
        age_tally = defaultdict(int)
        for claim in claims:
            for cpt in claim.cpts:
                prior[cpt] += 1
                gender_tally[(claim.gender, cpt)] += 1
                age_tally[(bayes.age_bucket(claim.age), cpt)] += 1
                for code in claim.icds:
                    icd_tally[(code.text, cpt)] += 1
        for j, label in enumerate(model.labels):
            assert model.prior[j] == prior[label], f"trial {trial}"
            for g, gi in bayes.GENDER_ROWS.items():
                assert model.gender_counts[gi, j] == gender_tally[(g, label)]
            for b in range(len(bayes.AGE_BUCKETS)):
                assert model.age_counts[b, j] == age_tally[(b, label)]
            for text, row in model.icd_index.items():
                assert model.icd_counts[row, j] == icd_tally[(text, label)]

    # pinned fixture: corpus {(A->X), (A->X), (B->Y), (A->Y)}, query {A} ranks X first
    X, Y = "11111", "22222"
    fixture = [
        make_claim("1", "p", 30, "M", ["A00"], [X]),
        make_claim("2", "p", 30, "M", ["A00"], [X]),
        make_claim("3", "p", 30, "M", ["B00"], [Y]),
        make_claim("4", "p", 30, "M", ["A00"], [Y]),
    ]
    model = bayes.fit(fixture, build_vocabs(fixture, min_cpt_count=1))
    preds = bayes.predict_topk(model, (["A00"], 30, "M"), 2)
    assert [c for c, _ in preds] == [X, Y]
    _report("bayes oracle: 100 random corpora equal single-pass tallies; fixture ranks X > Y")


# ----------------------------------------------------------------------
# criterion: metric correctness
# ----------------------------------------------------------------------


def test_metric_correctness_against_brute_force():
    rng = np.random.default_rng(701)
    universe = [f"{30000 + i}" for i in range(20)]
    for trial in range(1000):
        n_pred = int(rng.integers(0, 15))
        predicted = list(rng.permutation(universe))[:n_pred]
        truth = set(rng.choice(universe, size=int(rng.integers(1, 8)), replace=False))
        k = int(rng.integers(1, 12))
        p, r = precision_recall_at_k(predicted, truth, k)
        hits = 0
        for code in predicted[:k]:
            if code in truth:
                hits += 1
        assert p == hits / k and r == hits / len(truth), f"trial {trial}"
    p, r = precision_recall_at_k(["a", "b", "c"], {"a", "d"}, 3)
    assert (p, r) == (1 / 3, 1 / 2)
    _report("metrics: 1000 randomized triples match brute-force counting; fixture (1/3, 1/2)")


# ----------------------------------------------------------------------
# criterion: rules filter soundness + idempotence
# ----------------------------------------------------------------------


def test_rules_filter_soundness_and_idempotence():
    rng = np.random.default_rng(801)
    sexes = ("M", "F", "A")
    for _ in range(500):
        codes = [f"{40000 + i}" for i in range(int(rng.integers(1, 12)))]
        rules = {}
        for code in codes:
            if rng.random() < 0.7:
                lo = int(rng.integers(0, 100))
                rules[code] = AgeGenderRule(
                    code, sexes[rng.integers(3)], lo, int(rng.integers(lo, 121))
                )
        preds = [(c, float(rng.random())) for c in codes]
        age = int(rng.integers(0, 121))
        gender = "M" if rng.random() < 0.5 else "F"
        kept = filter_predictions(preds, age, gender, rules)
        for cpt, _ in kept:
            assert cpt not in rules or rules[cpt].allows(age, gender)
        assert filter_predictions(kept, age, gender, rules) == kept
        it = iter(preds)
        assert all(entry in it for entry in kept)  # order-preserving subsequence
    _report("rules filter: soundness + idempotence on 500 randomized cases")


# ----------------------------------------------------------------------
# criterion: serialization, permutation invariance, history reproducibility
# ----------------------------------------------------------------------


def test_serialization_and_determinism(corpus, tmp_path):
    claims = corpus["train"][:2000]
    vocabs = build_vocabs(claims, min_cpt_count=2)
    dims = nn.Dims(d_c=4, d_p=8, hidden=(32, 32, 16))
    hyper = nn.TrainHyper(epochs=4, batch_size=128, seed=13)
    model, history = nn.train(claims, claims[:200], vocabs, dims, hyper)

    path = tmp_path / "model.nnm"
    nn.save_model(model, path)
    back = nn.load_model(path)
    for a, b in zip(model.tensors().values(), back.tensors().values()):
        assert np.array_equal(a, b)

    multi = next(c for c in corpus["test"] if len(c.icds) >= 3)
    shuffled = make_claim(
        multi.claim_id,
        multi.provider_id,
        multi.age,
        multi.gender,
        list(reversed([c.text for c in multi.icds])),
        list(multi.cpts),
    )
    za = nn.forward(back, nn.featurize_claim(multi, vocabs))
    zb = nn.forward(back, nn.featurize_claim(shuffled, vocabs))
    assert np.array_equal(za, zb)

    model2, history2 = nn.train(claims, claims[:200], vocabs, dims, hyper)
    assert history == history2  # float-exact per-epoch losses
    for a, b in zip(model.tensors().values(), model2.tensors().values()):
        assert np.array_equal(a, b)
    _report("serialization: bit-exact round trip, permutation-invariant logits, exact history")


# ----------------------------------------------------------------------
# criterion: service contract
# ----------------------------------------------------------------------


def test_service_contract(corpus, trained_nn, tmp_path):
    registry = tmp_path / "registry"
    registry.mkdir()
    nn.save_model(trained_nn["model"], registry / "model.nnm")
    rules_path = tmp_path / "filter.rules"
    save_rules(corpus["truth"].rules, rules_path)
    store_path = tmp_path / "store.jsonl"
    config = ServiceConfig(
        registry_dir=registry, store_path=store_path, rules_path=rules_path
    )
    rules = corpus["truth"].rules
    with TestClient(create_app(config)) as client:
        n_checked = 0
        draft_ids = set()
        for claim in corpus["test"][:50]:
            body = {
                "provider_id": claim.provider_id,
                "age": claim.age,
                "gender": claim.gender,
                "icds": [c.text for c in claim.icds],
                "k": 3,
                "method": "nn",
            }
            resp = client.post("/v1/suggest", json=body)
            assert resp.status_code == 200
            doc = resp.json()
            scores = [s["score"] for s in doc["suggestions"]]
            assert scores == sorted(scores, reverse=True)
            for s in doc["suggestions"]:
                rule = rules.get(s["cpt"])
                assert rule is None or rule.allows(claim.age, claim.gender)
            n_checked += 1
            if doc["suggestions"]:
                draft = dict(body, accepted=[{"cpt": s["cpt"], "score": s["score"]}
                                             for s in doc["suggestions"][:2]])
                draft.pop("k")
                draft.pop("method")
                resp = client.post("/v1/claims", json=draft)
                assert resp.status_code == 200
                draft_ids.add(resp.json()["draft_id"])
    stored = load_claims(store_path)
    assert {c.claim_id for c in stored} == draft_ids
    assert len(draft_ids) == n_checked
    _report(
        f"service contract: {n_checked} suggest calls rule-compliant and sorted; "
        f"{len(stored)} drafts re-ingested via load_claims"
    )
