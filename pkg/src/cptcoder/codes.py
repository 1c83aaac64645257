"""Normalization and integer encoding of diagnosis (ICD-10) and procedure (CPT) codes.

Diagnosis codes are treated as opaque strings of 3-7 characters: one letter
followed by letters/digits. Each character position maps to an integer in
0..35 (A-Z then 0-9); positions past the end of a short code carry the
reserved PAD index 36, which gets its own learned embedding row downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

ICD_MIN_LEN = 3
ICD_MAX_LEN = 7
PAD_INDEX = 36
CHAR_VOCAB_SIZE = 37  # A-Z -> 0..25, 0-9 -> 26..35, PAD -> 36
CPT_LEN = 5

_ALNUM = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789")


class InvalidCodeError(ValueError):
    """A diagnosis or procedure code failed validation.

    `reason` is one of: "empty", "multiple-dots", "bad-length",
    "bad-first-char", "bad-char".
    """

    def __init__(self, reason: str, raw: str, message: str):
        super().__init__(message)
        self.reason = reason
        self.raw = raw


@dataclass(frozen=True, order=True)
class IcdCode:
    """A normalized diagnosis code: uppercase, dot removed, length 3-7."""

    text: str

    @property
    def indices(self) -> tuple[int, ...]:
        return icd_indices(self)


def char_index(ch: str) -> int:
    """Map a single character to its embedding index (A-Z -> 0..25, 0-9 -> 26..35)."""
    if len(ch) != 1:
        raise InvalidCodeError("bad-char", ch, f"expected a single character, got {ch!r}")
    if "A" <= ch <= "Z":
        return ord(ch) - ord("A")
    if "0" <= ch <= "9":
        return 26 + ord(ch) - ord("0")
    raise InvalidCodeError("bad-char", ch, f"character {ch!r} is not A-Z or 0-9")


def index_char(index: int) -> str:
    """Inverse of char_index for non-PAD indices."""
    if 0 <= index <= 25:
        return chr(ord("A") + index)
    if 26 <= index <= 35:
        return chr(ord("0") + index - 26)
    raise ValueError(f"index {index} does not correspond to a character")


def normalize_icd(raw: str) -> IcdCode:
    """Normalize a raw diagnosis code string.

    Uppercases, strips at most one '.', and validates the 3-7 character
    letter-then-alphanumerics shape. Raises InvalidCodeError otherwise.
    """
    text = raw.strip().upper()
    if not text:
        raise InvalidCodeError("empty", raw, "empty diagnosis code")
    if text.count(".") > 1:
        raise InvalidCodeError("multiple-dots", raw, f"more than one dot in {raw!r}")
    text = text.replace(".", "")
    if not ICD_MIN_LEN <= len(text) <= ICD_MAX_LEN:
        raise InvalidCodeError(
            "bad-length", raw, f"{raw!r} normalizes to {len(text)} characters, need 3-7"
        )
    if not "A" <= text[0] <= "Z":
        raise InvalidCodeError("bad-first-char", raw, f"{raw!r} must start with a letter")
    for ch in text[1:]:
        if ch not in _ALNUM:
            raise InvalidCodeError("bad-char", raw, f"invalid character {ch!r} in {raw!r}")
    return IcdCode(text)


def icd_indices(code: IcdCode) -> tuple[int, ...]:
    """Fixed-width character indices for a diagnosis code, PAD-filled to 7."""
    idx = [char_index(ch) for ch in code.text]
    idx.extend([PAD_INDEX] * (ICD_MAX_LEN - len(idx)))
    return tuple(idx)


def icd_from_indices(indices) -> str:
    """Rebuild the code text from its index vector (non-PAD prefix)."""
    chars = []
    for i in indices:
        if i == PAD_INDEX:
            break
        chars.append(index_char(int(i)))
    return "".join(chars)


def normalize_cpt(raw: str) -> str:
    """Validate and normalize a procedure code: exactly 5 alphanumerics, uppercased."""
    text = raw.strip().upper()
    if not text:
        raise InvalidCodeError("empty", raw, "empty procedure code")
    if len(text) != CPT_LEN:
        raise InvalidCodeError("bad-length", raw, f"procedure code {raw!r} must have 5 characters")
    for ch in text:
        if ch not in _ALNUM:
            raise InvalidCodeError("bad-char", raw, f"invalid character {ch!r} in {raw!r}")
    return text
