"""Count-based probabilistic predictor.

Scores each procedure label by log prior plus naive per-factor
log-likelihoods for the claim's diagnoses, gender, and age bucket, all
Laplace smoothed. Counts come from a single pass over training claims, so
fitting is order independent and persists exactly as integers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Claim, EmptyDatasetError, NoLabelsError, Vocabularies

# bucket boundaries chosen around common pediatric/adult/geriatric cutoffs
AGE_BUCKETS = ((0, 1), (2, 11), (12, 17), (18, 39), (40, 64), (65, 120))
GENDER_ROWS = {"M": 0, "F": 1}


def age_bucket(age: int) -> int:
    for i, (lo, hi) in enumerate(AGE_BUCKETS):
        if lo <= age <= hi:
            return i
    return len(AGE_BUCKETS) - 1


@dataclass
class BayesModel:
    """Integer count tables over (label, factor) pairs plus the smoothing constant."""

    labels: tuple[str, ...]
    alpha: float
    icd_vocab: tuple[str, ...]
    prior: np.ndarray  # (L,) label occurrence counts
    total_pairs: int  # sum of prior
    icd_counts: np.ndarray  # (V, L)
    gender_counts: np.ndarray  # (2, L)
    age_counts: np.ndarray  # (6, L)

    def __post_init__(self):
        self.label_index = {c: i for i, c in enumerate(self.labels)}
        self.icd_index = {c: i for i, c in enumerate(self.icd_vocab)}
        self.icd_totals = self.icd_counts.sum(axis=0)

    @property
    def label_count(self) -> int:
        return len(self.labels)


def fit(train_claims, vocabs: Vocabularies, alpha: float = 1.0) -> BayesModel:
    """Tally priors and per-factor conditional counts from training claims."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    train_claims = list(train_claims)
    if not train_claims:
        raise EmptyDatasetError("no training claims")
    labels = vocabs.cpt_labels
    if not labels:
        raise NoLabelsError("empty label space")
    label_index = vocabs.label_index

    icd_vocab = sorted({c.text for claim in train_claims for c in claim.icds})
    icd_index = {c: i for i, c in enumerate(icd_vocab)}

    n_labels = len(labels)
    prior = np.zeros(n_labels, dtype=np.int64)
    icd_counts = np.zeros((len(icd_vocab), n_labels), dtype=np.int64)
    gender_counts = np.zeros((2, n_labels), dtype=np.int64)
    age_counts = np.zeros((len(AGE_BUCKETS), n_labels), dtype=np.int64)

    for claim in train_claims:
        rows = [label_index[c] for c in claim.cpts if c in label_index]
        if not rows:
            continue
        g = GENDER_ROWS[claim.gender]
        b = age_bucket(claim.age)
        for l in rows:
            prior[l] += 1
            gender_counts[g, l] += 1
            age_counts[b, l] += 1
            for code in claim.icds:
                icd_counts[icd_index[code.text], l] += 1

    return BayesModel(
        labels=labels,
        alpha=float(alpha),
        icd_vocab=tuple(icd_vocab),
        prior=prior,
        total_pairs=int(prior.sum()),
        icd_counts=icd_counts,
        gender_counts=gender_counts,
        age_counts=age_counts,
    )


def score(model: BayesModel, icd_texts, age: int, gender: str) -> np.ndarray:
    """Laplace-smoothed log-score per label; finite for any query.

    Diagnoses never seen in training contribute the uninformative constant
    log(1/V) to every label, so they cannot change the ranking.
    """
    a = model.alpha
    n_labels = model.label_count
    v = len(model.icd_vocab)
    prior = model.prior.astype(np.float64)

    s = np.log(prior + a) - np.log(model.total_pairs + a * n_labels)
    for text in icd_texts:
        row = model.icd_index.get(text)
        if row is None:
            s += np.log(a) - np.log(a * v)
        else:
            s += np.log(model.icd_counts[row] + a) - np.log(model.icd_totals + a * v)
    g = GENDER_ROWS[gender]
    s += np.log(model.gender_counts[g] + a) - np.log(prior + a * 2)
    b = age_bucket(age)
    s += np.log(model.age_counts[b] + a) - np.log(prior + a * len(AGE_BUCKETS))
    return s


def predict_topk(model: BayesModel, claim_like, k: int) -> list[tuple[str, float]]:
    """Top-k labels by log-score; reported scores are softmax-normalized for display."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if isinstance(claim_like, Claim):
        icds = [c.text for c in claim_like.icds]
        age, gender = claim_like.age, claim_like.gender
    else:
        icds, age, gender = claim_like
    scores = score(model, icds, age, gender)
    shifted = np.exp(scores - scores.max())
    display = shifted / shifted.sum()
    order = np.argsort(-scores, kind="stable")[:k]
    return [(model.labels[i], float(display[i])) for i in order]


def save_bayes(model: BayesModel, path) -> None:
    """Tab-separated integer count tables; round-trips exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# cptcoder bayes counts v1\n")
        fh.write(f"alpha\t{model.alpha!r}\n")
        fh.write("labels\t" + "\t".join(model.labels) + "\n")
        fh.write("icds\t" + "\t".join(model.icd_vocab) + "\n")
        fh.write("prior\t" + "\t".join(str(x) for x in model.prior) + "\n")
        for i, code in enumerate(model.icd_vocab):
            fh.write(f"icd\t{code}\t" + "\t".join(str(x) for x in model.icd_counts[i]) + "\n")
        for name, row in zip(("M", "F"), model.gender_counts):
            fh.write(f"gender\t{name}\t" + "\t".join(str(x) for x in row) + "\n")
        for i, row in enumerate(model.age_counts):
            fh.write(f"age\t{i}\t" + "\t".join(str(x) for x in row) + "\n")


def load_bayes(path) -> BayesModel:
    alpha = None
    labels: tuple[str, ...] | None = None
    icd_vocab: tuple[str, ...] = ()
    prior = None
    icd_rows: dict[str, list[int]] = {}
    gender_rows: dict[str, list[int]] = {}
    age_rows: dict[int, list[int]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            kind = parts[0]
            if kind == "alpha":
                alpha = float(parts[1])
            elif kind == "labels":
                labels = tuple(parts[1:])
            elif kind == "icds":
                icd_vocab = tuple(parts[1:])
            elif kind == "prior":
                prior = np.array([int(x) for x in parts[1:]], dtype=np.int64)
            elif kind == "icd":
                icd_rows[parts[1]] = [int(x) for x in parts[2:]]
            elif kind == "gender":
                gender_rows[parts[1]] = [int(x) for x in parts[2:]]
            elif kind == "age":
                age_rows[int(parts[1])] = [int(x) for x in parts[2:]]
            else:
                raise ValueError(f"{path}: unknown record kind {kind!r}")
    if alpha is None or labels is None or prior is None:
        raise ValueError(f"{path}: incomplete count table")
    n_labels = len(labels)
    icd_counts = np.zeros((len(icd_vocab), n_labels), dtype=np.int64)
    for i, code in enumerate(icd_vocab):
        icd_counts[i] = icd_rows[code]
    gender_counts = np.array([gender_rows["M"], gender_rows["F"]], dtype=np.int64)
    age_counts = np.array([age_rows[i] for i in range(len(AGE_BUCKETS))], dtype=np.int64)
    return BayesModel(
        labels=labels,
        alpha=alpha,
        icd_vocab=icd_vocab,
        prior=prior,
        total_pairs=int(prior.sum()),
        icd_counts=icd_counts,
        gender_counts=gender_counts,
        age_counts=age_counts,
    )
