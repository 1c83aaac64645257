"""Claim records: data model, line-delimited file ingestion, splitting, vocabularies.

A claims file holds one JSON object per line with fields claim_id,
provider_id, payer_id (optional), age, gender ("M"/"F"), icds, cpts.
Unknown fields are ignored, so enriched records (e.g. accepted drafts from
the service) re-ingest cleanly as training data.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .codes import IcdCode, InvalidCodeError, normalize_cpt, normalize_icd

MAX_ICDS_PER_CLAIM = 12
MAX_AGE = 120
GENDERS = ("M", "F")


class DatasetError(Exception):
    pass


class ParseError(DatasetError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class EmptyDatasetError(DatasetError):
    pass


class TooFewClaimsError(DatasetError):
    pass


class NoLabelsError(DatasetError):
    pass


@dataclass(frozen=True)
class Claim:
    """One encounter: demographics plus deduplicated diagnosis and procedure codes.

    `icds` and `cpts` are kept sorted so every downstream computation sees a
    canonical order.
    """

    claim_id: str
    provider_id: str
    age: int
    gender: str
    icds: tuple[IcdCode, ...]
    cpts: tuple[str, ...]
    payer_id: str | None = None


def make_claim(
    claim_id: str,
    provider_id: str,
    age: int,
    gender: str,
    icds,
    cpts,
    payer_id: str | None = None,
    allow_empty_cpts: bool = False,
) -> Claim:
    """Validate and canonicalize raw claim fields; raises ValueError on violations."""
    if not claim_id:
        raise ValueError("claim_id is required")
    if not provider_id:
        raise ValueError("provider_id is required")
    if not isinstance(age, int) or not 0 <= age <= MAX_AGE:
        raise ValueError(f"age {age!r} outside 0..{MAX_AGE}")
    if gender not in GENDERS:
        raise ValueError(f"gender must be M or F, got {gender!r}")
    norm_icds = sorted({c if isinstance(c, IcdCode) else normalize_icd(c) for c in icds})
    if not norm_icds:
        raise ValueError("empty diagnosis set")
    if len(norm_icds) > MAX_ICDS_PER_CLAIM:
        raise ValueError(f"more than {MAX_ICDS_PER_CLAIM} diagnosis codes")
    norm_cpts = sorted({normalize_cpt(c) for c in cpts})
    if not norm_cpts and not allow_empty_cpts:
        raise ValueError("empty procedure set")
    return Claim(
        claim_id=claim_id,
        provider_id=provider_id,
        age=age,
        gender=gender,
        icds=tuple(norm_icds),
        cpts=tuple(norm_cpts),
        payer_id=payer_id,
    )


def claim_to_dict(claim: Claim) -> dict:
    out = {
        "claim_id": claim.claim_id,
        "provider_id": claim.provider_id,
        "age": claim.age,
        "gender": claim.gender,
        "icds": [c.text for c in claim.icds],
        "cpts": list(claim.cpts),
    }
    if claim.payer_id is not None:
        out["payer_id"] = claim.payer_id
    return out


def _claim_from_dict(obj: dict, line_no: int) -> Claim:
    for key in ("claim_id", "provider_id", "age", "gender", "icds", "cpts"):
        if key not in obj:
            raise ParseError(line_no, f"missing field {key!r}")
    age = obj["age"]
    if isinstance(age, bool) or not isinstance(age, int):
        raise ParseError(line_no, f"age must be an integer, got {age!r}")
    try:
        return make_claim(
            claim_id=str(obj["claim_id"]),
            provider_id=str(obj["provider_id"]),
            age=age,
            gender=obj["gender"],
            icds=obj["icds"],
            cpts=obj["cpts"],
            payer_id=None if obj.get("payer_id") is None else str(obj["payer_id"]),
        )
    except (ValueError, InvalidCodeError) as exc:
        raise ParseError(line_no, str(exc)) from exc


def load_claims(path) -> list[Claim]:
    """Parse a line-delimited claims file; malformed lines raise ParseError."""
    claims = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ParseError(line_no, "record is not an object")
            claims.append(_claim_from_dict(obj, line_no))
    if not claims:
        raise EmptyDatasetError(f"no claims in {path}")
    return claims


def save_claims(claims, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for claim in claims:
            fh.write(json.dumps(claim_to_dict(claim), sort_keys=True) + "\n")


def split(claims, test_fraction: float, seed: int) -> tuple[list[Claim], list[Claim]]:
    """Deterministic shuffled partition; |test| = round(test_fraction * N).

    round() is Python's banker's rounding (half to even).
    """
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    claims = list(claims)
    if len(claims) < 2:
        raise TooFewClaimsError(f"need at least 2 claims, got {len(claims)}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(claims))
    n_test = round(test_fraction * len(claims))
    test = [claims[i] for i in order[:n_test]]
    train = [claims[i] for i in order[n_test:]]
    return train, test


@dataclass(frozen=True)
class Vocabularies:
    """Label space and provider index derived from a training set.

    Label order is deterministic: descending training frequency with
    lexicographic tie-break. Providers are indexed in first-appearance
    order; the row after the last provider is reserved for unknowns.
    """

    cpt_labels: tuple[str, ...]
    providers: tuple[str, ...]
    icd_count: int
    label_index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)
    provider_index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if not self.label_index:
            object.__setattr__(
                self, "label_index", {c: i for i, c in enumerate(self.cpt_labels)}
            )
        if not self.provider_index:
            object.__setattr__(
                self, "provider_index", {p: i for i, p in enumerate(self.providers)}
            )

    @property
    def label_count(self) -> int:
        return len(self.cpt_labels)

    @property
    def provider_count(self) -> int:
        return len(self.providers)

    @property
    def unk_provider_index(self) -> int:
        return len(self.providers)

    def provider_row(self, provider_id: str) -> int:
        return self.provider_index.get(provider_id, self.unk_provider_index)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update("\x1f".join(self.cpt_labels).encode("utf-8"))
        h.update(b"\x00")
        h.update("\x1f".join(self.providers).encode("utf-8"))
        return h.hexdigest()


def build_vocabs(train, min_cpt_count: int = 5) -> Vocabularies:
    """Construct the label space and provider index from training claims."""
    train = list(train)
    if not train:
        raise EmptyDatasetError("no training claims")
    counts = Counter()
    providers: list[str] = []
    seen_providers = set()
    icds = set()
    for claim in train:
        counts.update(claim.cpts)
        if claim.provider_id not in seen_providers:
            seen_providers.add(claim.provider_id)
            providers.append(claim.provider_id)
        icds.update(c.text for c in claim.icds)
    labels = sorted(
        (c for c, n in counts.items() if n >= min_cpt_count),
        key=lambda c: (-counts[c], c),
    )
    if not labels:
        raise NoLabelsError(f"no procedure code occurs at least {min_cpt_count} times")
    return Vocabularies(
        cpt_labels=tuple(labels), providers=tuple(providers), icd_count=len(icds)
    )
