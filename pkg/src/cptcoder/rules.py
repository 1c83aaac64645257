"""Age/gender post-filter applied to predicted procedure codes.

Rules live in a plain text file (one `cpt,sex,min_age,max_age` line per
code, `#` comments allowed, sex in {M, F, A}) so clinical policy stays
editable without touching code. Codes absent from the file are
unconstrained.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .codes import InvalidCodeError, normalize_cpt

log = logging.getLogger(__name__)

SEXES = ("M", "F", "A")


class RulesParseError(Exception):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


@dataclass(frozen=True)
class AgeGenderRule:
    cpt: str
    sex: str  # "M", "F", or "A" (any)
    min_age: int
    max_age: int

    def allows(self, age: int, gender: str) -> bool:
        if self.sex != "A" and gender != self.sex:
            return False
        return self.min_age <= age <= self.max_age


def load_rules(path) -> dict[str, AgeGenderRule]:
    """Parse a rules file into a map cpt -> rule; last definition wins on duplicates."""
    rules: dict[str, AgeGenderRule] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 4:
                raise RulesParseError(line_no, f"expected 4 fields, got {len(parts)}")
            try:
                cpt = normalize_cpt(parts[0])
            except InvalidCodeError as exc:
                raise RulesParseError(line_no, str(exc)) from exc
            sex = parts[1].upper()
            if sex not in SEXES:
                raise RulesParseError(line_no, f"sex must be M, F or A, got {parts[1]!r}")
            try:
                min_age, max_age = int(parts[2]), int(parts[3])
            except ValueError as exc:
                raise RulesParseError(line_no, f"bad age bounds: {exc}") from exc
            if not 0 <= min_age <= max_age <= 120:
                raise RulesParseError(
                    line_no, f"need 0 <= min_age <= max_age <= 120, got {min_age}..{max_age}"
                )
            if cpt in rules:
                log.warning("rules line %d redefines %s; keeping the later rule", line_no, cpt)
            rules[cpt] = AgeGenderRule(cpt, sex, min_age, max_age)
    return rules


def save_rules(rules: dict[str, AgeGenderRule], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# cpt,sex,min_age,max_age\n")
        for cpt in sorted(rules):
            r = rules[cpt]
            fh.write(f"{r.cpt},{r.sex},{r.min_age},{r.max_age}\n")


def filter_predictions(predictions, age: int, gender: str, rules: dict[str, AgeGenderRule]):
    """Drop (cpt, score) entries whose rule rejects (age, gender); order preserved."""
    return [
        (cpt, score)
        for cpt, score in predictions
        if cpt not in rules or rules[cpt].allows(age, gender)
    ]
