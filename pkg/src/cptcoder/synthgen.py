"""Synthetic claims generator with a planted diagnosis -> procedure ground truth.

Stands in for a real historical corpus. Every synthetic diagnosis code is
assigned 1-3 procedure codes (the base map); each provider deviates from
the base map on a configurable fraction of diagnoses by substituting a
provider-specific alternative. Claims are emitted as the union of the
provider's mapped procedures over the claim's diagnoses, with per-code
drop noise and uniform add noise on top.

Diagnosis popularity is Zipf-distributed (real coding corpora are heavily
skewed): a handful of diagnoses dominate the claim stream while the tail
occurs only a few dozen times, which is exactly the regime that separates
count-based prediction from support-thresholded rule mining.

Age/gender rules are assigned to the whole procedure universe, but only
codes outside the mapped pool get restrictive rules; noise-added codes are
resampled until they respect the claim's demographics. This keeps every
emitted claim consistent with the emitted rule file while preserving exact
map recovery in the noiseless case.

The generator is fully deterministic under `SyntheticSpec.seed`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .dataset import Claim, make_claim
from .rules import AgeGenderRule, save_rules

_DIGITS = "0123456789"
_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
_ALNUM = _LETTERS + _DIGITS

ZIPF_EXPONENT = 0.9  # skew of diagnosis popularity

# templates for restricted codes; unrestricted is ("A", 0, 120)
_RESTRICTIVE_TEMPLATES = (
    ("F", 12, 55),
    ("M", 18, 120),
    ("F", 0, 120),
    ("M", 0, 120),
    ("A", 0, 2),
    ("A", 0, 17),
    ("A", 18, 120),
    ("A", 40, 120),
    ("A", 65, 120),
)


class InvalidSpecError(ValueError):
    pass


@dataclass(frozen=True)
class SyntheticSpec:
    n_providers: int
    n_icds: int
    n_cpts: int
    n_claims: int
    noise_drop: float = 0.0
    noise_add: float = 0.0
    provider_swap: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        for name in ("n_providers", "n_icds", "n_cpts", "n_claims"):
            if getattr(self, name) < 1:
                raise InvalidSpecError(f"{name} must be >= 1")
        if self.n_cpts > 90000:
            raise InvalidSpecError("n_cpts must be <= 90000")
        for name in ("noise_drop", "noise_add", "provider_swap"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidSpecError(f"{name} must be in [0, 1]")


@dataclass
class GroundTruth:
    """The generator's planted maps, used for recovery ceilings and replay."""

    base_map: dict[str, tuple[str, ...]]
    provider_overrides: dict[str, dict[str, tuple[str, ...]]]
    rules: dict[str, AgeGenderRule]

    def mapped_cpts(self, provider_id: str, icd_text: str) -> tuple[str, ...]:
        override = self.provider_overrides.get(provider_id)
        if override is not None and icd_text in override:
            return override[icd_text]
        return self.base_map.get(icd_text, ())

    def union_for(self, provider_id: str, icd_texts) -> list[tuple[str, int]]:
        """Mapped procedures for a claim, ranked by how many diagnoses imply each."""
        counts = Counter()
        for text in icd_texts:
            counts.update(self.mapped_cpts(provider_id, text))
        return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def _gen_icd_codes(rng: np.random.Generator, n: int) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []
    while len(out) < n:
        first = _LETTERS[rng.integers(26)]
        body = "".join(_DIGITS[i] for i in rng.integers(10, size=2))
        extra = "".join(_ALNUM[i] for i in rng.integers(36, size=rng.integers(0, 5)))
        code = first + body + extra
        if code not in seen:
            seen.add(code)
            out.append(code)
    return out


def _gen_cpt_codes(rng: np.random.Generator, n: int) -> list[str]:
    values = rng.choice(90000, size=n, replace=False) + 10000
    return [str(v) for v in values]


def _assign_rules(rng: np.random.Generator, cpts: list[str]) -> tuple[dict, list[str]]:
    """Give every code a rule; restrict about a quarter, keeping >= 4 open codes."""
    n = len(cpts)
    n_restricted = min(n // 4, max(0, n - 4))
    restricted_pos = set(rng.choice(n, size=n_restricted, replace=False).tolist())
    rules: dict[str, AgeGenderRule] = {}
    open_pool: list[str] = []
    for pos, cpt in enumerate(cpts):
        if pos in restricted_pos:
            sex, lo, hi = _RESTRICTIVE_TEMPLATES[rng.integers(len(_RESTRICTIVE_TEMPLATES))]
            rules[cpt] = AgeGenderRule(cpt, sex, lo, hi)
        else:
            rules[cpt] = AgeGenderRule(cpt, "A", 0, 120)
            open_pool.append(cpt)
    return rules, open_pool


def generate_synthetic(spec: SyntheticSpec) -> tuple[list[Claim], GroundTruth]:
    """Generate claims plus the ground truth that produced them."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)

    icds = _gen_icd_codes(rng, spec.n_icds)
    cpts = _gen_cpt_codes(rng, spec.n_cpts)
    providers = [f"p{i:04d}" for i in range(spec.n_providers)]
    rules, open_pool = _assign_rules(rng, cpts)

    base_map: dict[str, tuple[str, ...]] = {}
    for icd in icds:
        m = int(rng.integers(1, min(3, len(open_pool)) + 1))
        chosen = rng.choice(len(open_pool), size=m, replace=False)
        base_map[icd] = tuple(sorted(open_pool[i] for i in chosen))

    provider_overrides: dict[str, dict[str, tuple[str, ...]]] = {}
    can_swap = len(open_pool) > 3  # alternative must differ from all mapped codes
    for provider in providers:
        override: dict[str, tuple[str, ...]] = {}
        for icd in icds:
            if can_swap and rng.random() < spec.provider_swap:
                mapped = list(base_map[icd])
                slot = int(rng.integers(len(mapped)))
                alt = open_pool[int(rng.integers(len(open_pool)))]
                while alt in mapped:
                    alt = open_pool[int(rng.integers(len(open_pool)))]
                mapped[slot] = alt
                override[icd] = tuple(sorted(mapped))
        if override:
            provider_overrides[provider] = override

    truth = GroundTruth(base_map=base_map, provider_overrides=provider_overrides, rules=rules)

    icd_weights = 1.0 / np.arange(1, spec.n_icds + 1, dtype=np.float64) ** ZIPF_EXPONENT
    icd_weights /= icd_weights.sum()

    claims: list[Claim] = []
    max_icds = min(4, spec.n_icds)
    for i in range(spec.n_claims):
        provider = providers[int(rng.integers(spec.n_providers))]
        n_icd = int(rng.integers(1, max_icds + 1))
        claim_icds = sorted(
            icds[j] for j in rng.choice(spec.n_icds, size=n_icd, replace=False, p=icd_weights)
        )
        age = int(rng.integers(0, 101))
        gender = "M" if rng.random() < 0.5 else "F"

        union = sorted({c for icd in claim_icds for c in truth.mapped_cpts(provider, icd)})
        kept = [c for c in union if rng.random() >= spec.noise_drop]
        if union and not kept:
            # drop noise must not empty a claim; keep one mapped code
            kept = [union[int(rng.integers(len(union)))]]
        if rng.random() < spec.noise_add:
            extra = cpts[int(rng.integers(spec.n_cpts))]
            while not rules[extra].allows(age, gender):
                extra = cpts[int(rng.integers(spec.n_cpts))]
            kept.append(extra)

        claims.append(
            make_claim(
                claim_id=f"s{i:06d}",
                provider_id=provider,
                age=age,
                gender=gender,
                icds=claim_icds,
                cpts=kept,
            )
        )
    return claims, truth


def write_ground_truth(truth: GroundTruth, path) -> None:
    """Sidecar format: `map`, `provider`, and `rule` lines, space separated."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# synthetic ground truth v1\n")
        fh.write("# map ICD CPT...  |  provider ID ICD CPT...  |  rule CPT SEX MIN MAX\n")
        for icd in sorted(truth.base_map):
            fh.write(f"map {icd} {' '.join(truth.base_map[icd])}\n")
        for provider in sorted(truth.provider_overrides):
            override = truth.provider_overrides[provider]
            for icd in sorted(override):
                fh.write(f"provider {provider} {icd} {' '.join(override[icd])}\n")
        for cpt in sorted(truth.rules):
            r = truth.rules[cpt]
            fh.write(f"rule {cpt} {r.sex} {r.min_age} {r.max_age}\n")


def read_ground_truth(path) -> GroundTruth:
    base_map: dict[str, tuple[str, ...]] = {}
    provider_overrides: dict[str, dict[str, tuple[str, ...]]] = {}
    rules: dict[str, AgeGenderRule] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            kind = parts[0]
            if kind == "map" and len(parts) >= 3:
                base_map[parts[1]] = tuple(parts[2:])
            elif kind == "provider" and len(parts) >= 4:
                provider_overrides.setdefault(parts[1], {})[parts[2]] = tuple(parts[3:])
            elif kind == "rule" and len(parts) == 5:
                rules[parts[1]] = AgeGenderRule(parts[1], parts[2], int(parts[3]), int(parts[4]))
            else:
                raise ValueError(f"{path}: bad ground-truth line {line_no}: {line!r}")
    return GroundTruth(base_map=base_map, provider_overrides=provider_overrides, rules=rules)


def write_rules_file(truth: GroundTruth, path) -> None:
    """Emit the generator's age/gender rules in the filter's file format."""
    save_rules(truth.rules, path)
