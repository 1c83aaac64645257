"""Precision@K / recall@K evaluation and the method comparison harness.

Every predictor is adapted to one interface: suggest(claim, k) returning a
ranked list of (cpt, score). The harness mirrors the serving path: ask for
2k candidates, apply the age/gender filter, truncate to k, then
macro-average per-claim metrics. Claims whose true codes fall entirely
outside the label space are skipped and counted.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from . import apriori as apriori_mod
from . import bayes as bayes_mod
from . import nn
from .dataset import Claim
from .rules import AgeGenderRule, filter_predictions
from .synthgen import GroundTruth


class EmptyTruthError(ValueError):
    pass


def precision_recall_at_k(predicted, truth: set, k: int) -> tuple[float, float]:
    """hits/k and hits/|truth| over the first k predictions.

    Rankings shorter than k keep k as the precision denominator (missing
    slots count as misses).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not truth:
        raise EmptyTruthError("truth set is empty; caller must skip such claims")
    hits = len(set(predicted[:k]) & truth)
    return hits / k, hits / len(truth)


@dataclass
class MethodReport:
    method: str
    precision_at_k: dict[int, float] = field(default_factory=dict)
    recall_at_k: dict[int, float] = field(default_factory=dict)
    n_claims: int = 0
    n_skipped: int = 0
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "precision_at_k": {str(k): v for k, v in sorted(self.precision_at_k.items())},
            "recall_at_k": {str(k): v for k, v in sorted(self.recall_at_k.items())},
            "n_claims": self.n_claims,
            "n_skipped": self.n_skipped,
            "wall_time": self.wall_time,
        }


def evaluate(
    suggest_fn,
    claims,
    ks,
    rules: dict[str, AgeGenderRule] | None,
    label_space: set[str],
    method: str = "",
) -> MethodReport:
    """Macro-averaged precision/recall at each K for one predictor."""
    ks = sorted(set(ks))
    if not ks or ks[0] < 1:
        raise ValueError("ks must be positive integers")
    rules = rules or {}
    started = time.perf_counter()
    p_sums = {k: 0.0 for k in ks}
    r_sums = {k: 0.0 for k in ks}
    n_used = 0
    n_skipped = 0
    for claim in claims:
        truth = set(claim.cpts) & label_space
        if not truth:
            n_skipped += 1
            continue
        n_used += 1
        for k in ks:
            raw = suggest_fn(claim, 2 * k)
            kept = filter_predictions(raw, claim.age, claim.gender, rules)[:k]
            p, r = precision_recall_at_k([c for c, _ in kept], truth, k)
            p_sums[k] += p
            r_sums[k] += r
    report = MethodReport(method=method, n_claims=n_used, n_skipped=n_skipped)
    if n_used:
        report.precision_at_k = {k: p_sums[k] / n_used for k in ks}
        report.recall_at_k = {k: r_sums[k] / n_used for k in ks}
    else:
        report.precision_at_k = {k: 0.0 for k in ks}
        report.recall_at_k = {k: 0.0 for k in ks}
    report.wall_time = time.perf_counter() - started
    return report


def nn_suggester(model: nn.ModelParams):
    def suggest(claim: Claim, k: int):
        return nn.predict_topk(model, nn.featurize_claim(claim, model.vocabs), k)

    return suggest


def bayes_suggester(model: bayes_mod.BayesModel):
    def suggest(claim: Claim, k: int):
        return bayes_mod.predict_topk(model, claim, k)

    return suggest


def apriori_suggester(ruleset: apriori_mod.RuleSet):
    def suggest(claim: Claim, k: int):
        return apriori_mod.predict(ruleset, [c.text for c in claim.icds], k)

    return suggest


def oracle_suggester(truth: GroundTruth):
    """The generator's own maps as a predictor: the recovery ceiling."""

    def suggest(claim: Claim, k: int):
        ranked = truth.union_for(claim.provider_id, [c.text for c in claim.icds])
        return [(cpt, float(n)) for cpt, n in ranked[:k]]

    return suggest


def render_table(reports, ks) -> str:
    """Plain-text comparison table, one row per method."""
    ks = sorted(set(ks))
    header = ["method".ljust(10)]
    for k in ks:
        header.append(f"recall@{k}".rjust(10))
    for k in ks:
        header.append(f"prec@{k}".rjust(10))
    header.append("claims".rjust(8))
    header.append("skipped".rjust(8))
    header.append("seconds".rjust(9))
    lines = ["  ".join(header)]
    for rep in reports:
        row = [rep.method.ljust(10)]
        for k in ks:
            row.append(f"{rep.recall_at_k.get(k, 0.0):.4f}".rjust(10))
        for k in ks:
            row.append(f"{rep.precision_at_k.get(k, 0.0):.4f}".rjust(10))
        row.append(str(rep.n_claims).rjust(8))
        row.append(str(rep.n_skipped).rjust(8))
        row.append(f"{rep.wall_time:.2f}".rjust(9))
        lines.append("  ".join(row))
    return "\n".join(lines)


def save_report(reports, ks, path) -> None:
    doc = {"ks": sorted(set(ks)), "methods": [r.to_dict() for r in reports]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
