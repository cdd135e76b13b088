"""Regex PII detectors: emails, phone numbers, government IDs, financial identifiers."""

from __future__ import annotations

import re
from dataclasses import dataclass

EMAIL = "email"
PHONE = "phone"
GOVERNMENT_ID = "government_id"
FINANCIAL = "financial"

DROP_COUNT = 3

_EMAIL_RE = re.compile(r"(?<![\w.+-])[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}(?![\w-])")
_PHONE_RE = re.compile(r"(?<![\w+])(?:\+\d{1,3}[\s.-]?)?(?:\(\d{1,4}\)[\s.-]?)?\d{2,4}(?:[\s.-]\d{2,4}){1,4}(?![\w-])")
_CARD_RE = re.compile(r"(?<!\d)(?:\d[ -]?){12,18}\d(?!\d)")
_IBAN_RE = re.compile(r"\b[A-Z]{2}\d{2}(?: ?[A-Z0-9]{4}){2,7}(?: ?[A-Z0-9]{1,3})?\b")

DEFAULT_ID_PATTERNS = {
    "us_ssn": r"\b\d{3}-\d{2}-\d{4}\b",
    "uk_nino": r"\b[A-CEGHJ-PR-TW-Z]{2}\s?\d{2}\s?\d{2}\s?\d{2}\s?[A-D]\b",
}


@dataclass(frozen=True)
class PIIFinding:
    category: str
    span: tuple[int, int]  # UTF-8 byte offsets, end exclusive
    detector: str = ""


def _luhn(digits: str) -> bool:
    total = 0
    for i, ch in enumerate(reversed(digits)):
        d = int(ch)
        if i % 2:
            d = d * 2 - 9 if d > 4 else d * 2
        total += d
    return total % 10 == 0


def _iban_ok(s: str) -> bool:
    s = s.replace(" ", "")
    if not 15 <= len(s) <= 34:
        return False
    moved = s[4:] + s[:4]
    return int("".join(str(int(c, 36)) for c in moved)) % 97 == 1


def _byte_offsets(text: str) -> list[int]:
    out = [0]
    for ch in text:
        out.append(out[-1] + len(ch.encode("utf-8")))
    return out


def pii_scan(text: str, id_patterns: dict[str, str] | None = None) -> list[PIIFinding]:
    """Return non-overlapping findings, higher-priority categories winning overlaps."""
    raw: list[tuple[int, int, int, str, str]] = []  # (priority, start, end, category, detector)
    for name, pat in (id_patterns if id_patterns is not None else DEFAULT_ID_PATTERNS).items():
        for m in re.finditer(pat, text):
            raw.append((0, m.start(), m.end(), GOVERNMENT_ID, name))
    for m in _CARD_RE.finditer(text):
        digits = re.sub(r"\D", "", m.group())
        if 13 <= len(digits) <= 19 and _luhn(digits):
            raw.append((1, m.start(), m.end(), FINANCIAL, "card"))
    for m in _IBAN_RE.finditer(text):
        if _iban_ok(m.group()):
            raw.append((1, m.start(), m.end(), FINANCIAL, "iban"))
    for m in _EMAIL_RE.finditer(text):
        raw.append((2, m.start(), m.end(), EMAIL, "email"))
    for m in _PHONE_RE.finditer(text):
        n_digits = sum(ch.isdigit() for ch in m.group())
        if 7 <= n_digits <= 15:
            raw.append((3, m.start(), m.end(), PHONE, "phone"))

    taken: list[tuple[int, int]] = []
    kept = []
    for prio, s, e, cat, det in sorted(raw, key=lambda r: (r[0], r[1], -r[2])):
        if any(s < te and ts < e for ts, te in taken):
            continue
        taken.append((s, e))
        kept.append((s, e, cat, det))
    offs = _byte_offsets(text)
    return [PIIFinding(cat, (offs[s], offs[e]), det) for s, e, cat, det in sorted(kept)]


def pii_blocks(findings: list[PIIFinding]) -> bool:
    return len(findings) >= DROP_COUNT or any(f.category == GOVERNMENT_ID for f in findings)
