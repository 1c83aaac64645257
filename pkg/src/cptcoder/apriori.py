"""Frequent-itemset mining over claims and rule-based procedure prediction.

Items are (kind, code) pairs: "D" for a diagnosis, "P" for a procedure.
Mining is classic level-wise candidate generation (join on the shared
prefix, prune by downward closure, count per pass). Each frequent itemset
mixing both kinds yields one rule: all its diagnoses imply all its
procedures, with confidence support(itemset)/support(diagnosis part).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple

from .dataset import Claim, EmptyDatasetError

DIAG = "D"
PROC = "P"


class Item(NamedTuple):
    kind: str  # DIAG or PROC; DIAG sorts first
    code: str


class MissingSubsetSupportError(Exception):
    """An antecedent's support was not mined; violates downward closure."""


@dataclass(frozen=True)
class FrequentItemset:
    items: tuple[Item, ...]  # sorted
    support_count: int
    support: float


@dataclass(frozen=True)
class Rule:
    antecedent: tuple[Item, ...]  # diagnosis items, sorted
    consequent: tuple[Item, ...]  # procedure items, sorted
    support: float
    confidence: float


@dataclass
class RuleSet:
    rules: tuple[Rule, ...]
    min_support: float
    min_confidence: float
    _by_antecedent: dict = field(init=False, repr=False)
    _max_antecedent: int = field(init=False, repr=False)

    def __post_init__(self):
        index: dict[tuple[Item, ...], list[Rule]] = {}
        for rule in self.rules:
            index.setdefault(rule.antecedent, []).append(rule)
        self._by_antecedent = index
        self._max_antecedent = max((len(r.antecedent) for r in self.rules), default=0)


def claim_items(claim: Claim) -> tuple[Item, ...]:
    items = [Item(DIAG, c.text) for c in claim.icds] + [Item(PROC, c) for c in claim.cpts]
    return tuple(sorted(items))


def mine_frequent(claims, min_support: float) -> list[FrequentItemset]:
    """All itemsets with support_count >= ceil(min_support * N), sorted by (size, items)."""
    if not 0 < min_support <= 1:
        raise ValueError(f"min_support must be in (0, 1], got {min_support}")
    claims = list(claims)
    if not claims:
        raise EmptyDatasetError("no claims to mine")
    transactions = [frozenset(claim_items(c)) for c in claims]
    n = len(transactions)
    threshold = max(1, math.ceil(min_support * n))

    counts: dict[tuple[Item, ...], int] = {}
    for t in transactions:
        for item in t:
            key = (item,)
            counts[key] = counts.get(key, 0) + 1
    frequent: dict[tuple[Item, ...], int] = {
        k: c for k, c in counts.items() if c >= threshold
    }
    level = sorted(frequent)
    single_frequent = {k[0] for k in level}
    # keep only frequent items per transaction; supersets of infrequent items can't qualify
    filtered = [sorted(t & single_frequent) for t in transactions]

    k = 2
    while level:
        if k == 2:
            # every pair of frequent singletons is a valid candidate, so count
            # observed pairs directly instead of materializing the cross product
            pair_counts: dict[tuple[Item, ...], int] = {}
            for items in filtered:
                for pair in combinations(items, 2):
                    pair_counts[pair] = pair_counts.get(pair, 0) + 1
            new = {key: c for key, c in pair_counts.items() if c >= threshold}
        else:
            candidates = _gen_candidates(level, k)
            if not candidates:
                break
            cand_counts = dict.fromkeys(candidates, 0)
            for items in filtered:
                if len(items) < k:
                    continue
                for combo in combinations(items, k):
                    if combo in cand_counts:
                        cand_counts[combo] += 1
            new = {key: c for key, c in cand_counts.items() if c >= threshold}
        if not new:
            break
        frequent.update(new)
        level = sorted(new)
        k += 1

    return [
        FrequentItemset(items=key, support_count=c, support=c / n)
        for key, c in sorted(frequent.items(), key=lambda kv: (len(kv[0]), kv[0]))
    ]


def _gen_candidates(prev_level: list[tuple[Item, ...]], k: int) -> set[tuple[Item, ...]]:
    """Join (k-1)-itemsets sharing a (k-2)-prefix, then prune by downward closure."""
    prev = set(prev_level)
    out: set[tuple[Item, ...]] = set()
    for i, a in enumerate(prev_level):
        for b in prev_level[i + 1 :]:
            if a[: k - 2] != b[: k - 2]:
                break  # sorted level: once prefixes diverge, later ones diverge too
            cand = a + (b[-1],)
            if all(cand[:j] + cand[j + 1 :] in prev for j in range(k)):
                out.add(cand)
    return out


def derive_rules(itemsets, min_confidence: float) -> RuleSet:
    """One rule per mixed itemset: (all diagnoses) -> (all procedures)."""
    if not 0 < min_confidence <= 1:
        raise ValueError(f"min_confidence must be in (0, 1], got {min_confidence}")
    support_of = {fs.items: fs for fs in itemsets}
    rules: list[Rule] = []
    for fs in itemsets:
        diag = tuple(i for i in fs.items if i.kind == DIAG)
        proc = tuple(i for i in fs.items if i.kind == PROC)
        if not diag or not proc:
            continue
        base = support_of.get(diag)
        if base is None:
            raise MissingSubsetSupportError(f"no support recorded for antecedent {diag}")
        confidence = fs.support_count / base.support_count
        if confidence >= min_confidence:
            rules.append(
                Rule(antecedent=diag, consequent=proc, support=fs.support, confidence=confidence)
            )
    rules.sort(key=lambda r: (r.antecedent, r.consequent))
    return RuleSet(rules=tuple(rules), min_support=0.0, min_confidence=min_confidence)


def mine_rules(claims, min_support: float, min_confidence: float) -> RuleSet:
    itemsets = mine_frequent(claims, min_support)
    ruleset = derive_rules(itemsets, min_confidence)
    return RuleSet(
        rules=ruleset.rules, min_support=min_support, min_confidence=min_confidence
    )


def predict(ruleset: RuleSet, icd_texts, k: int) -> list[tuple[str, float]]:
    """Best-match prediction: larger matched antecedents first, then confidence.

    Walks matching rules in (antecedent size desc, confidence desc,
    consequent lex) order, emitting unseen procedure codes until k are
    collected; each code keeps the confidence of the rule that introduced it.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    query = frozenset(Item(DIAG, t) for t in icd_texts)
    matching: list[Rule] = []
    max_size = min(len(query), ruleset._max_antecedent)
    for size in range(1, max_size + 1):
        for combo in combinations(sorted(query), size):
            matching.extend(ruleset._by_antecedent.get(combo, ()))
    matching.sort(key=lambda r: (-len(r.antecedent), -r.confidence, r.consequent))

    out: list[tuple[str, float]] = []
    seen: set[str] = set()
    for rule in matching:
        for item in rule.consequent:
            if item.code not in seen:
                seen.add(item.code)
                out.append((item.code, rule.confidence))
                if len(out) == k:
                    return out
    return out


def consequent_codes(ruleset: RuleSet) -> set[str]:
    """Every procedure code the ruleset can emit (its effective label space)."""
    return {item.code for rule in ruleset.rules for item in rule.consequent}


def save_rules(ruleset: RuleSet, path) -> None:
    """One rule per line: `D:a;D:b -> P:x;P:y support=S confidence=C`."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# cptcoder apriori rules v1\n")
        fh.write(
            f"# min_support={ruleset.min_support!r} min_confidence={ruleset.min_confidence!r}\n"
        )
        for r in ruleset.rules:
            ant = ";".join(f"{i.kind}:{i.code}" for i in r.antecedent)
            cons = ";".join(f"{i.kind}:{i.code}" for i in r.consequent)
            fh.write(f"{ant} -> {cons} support={r.support!r} confidence={r.confidence!r}\n")


def load_rules(path) -> RuleSet:
    rules: list[Rule] = []
    min_support = 0.0
    min_confidence = 0.0
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line.lstrip("# ").split():
                    if token.startswith("min_support="):
                        min_support = float(token.split("=", 1)[1])
                    elif token.startswith("min_confidence="):
                        min_confidence = float(token.split("=", 1)[1])
                continue
            try:
                lhs, rhs = line.split(" -> ")
                rhs_items, support_tok, conf_tok = rhs.rsplit(" ", 2)
                antecedent = tuple(Item(*p.split(":", 1)) for p in lhs.split(";"))
                consequent = tuple(Item(*p.split(":", 1)) for p in rhs_items.split(";"))
                support = float(support_tok.split("=", 1)[1])
                confidence = float(conf_tok.split("=", 1)[1])
            except ValueError as exc:
                raise ValueError(f"{path}: bad rule on line {line_no}: {line!r}") from exc
            rules.append(Rule(antecedent, consequent, support, confidence))
    return RuleSet(rules=tuple(rules), min_support=min_support, min_confidence=min_confidence)
