"""Page-level quality gate: perplexity, annotation reliability, PII."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..align import AnnotatedPage
from ..docmodel.kinds import Provenance
from .kn import perplexity, tokenize
from .langid import LanguageIdentifier, TrigramLanguageIdentifier
from .pii import PIIFinding, pii_blocks, pii_scan

DEFAULT_TAU = 120.0
DEFAULT_RHO = 0.6
BLANK_FRACTION_MAX = 0.98
NATIVE_CONFIDENCES = frozenset(p.confidence for p in Provenance if p.is_native_signal)


class Verdict(str, Enum):
    KEEP = "keep"
    DROP_PERPLEXITY = "drop_perplexity"
    DROP_RELIABILITY = "drop_reliability"
    DROP_PII = "drop_pii"


@dataclass
class PageQuality:
    language: str
    lang_confidence: float
    perplexity: float | None  # None when no model was available for the language
    reliability: float
    pii_findings: list[PIIFinding] = field(default_factory=list)
    verdict: Verdict = Verdict.KEEP
    visual_anomaly: bool = False

    def to_dict(self) -> dict:
        return {
            "language": self.language,
            "lang_confidence": self.lang_confidence,
            "perplexity": self.perplexity,
            "reliability": self.reliability,
            "pii_findings": [{"category": f.category, "span": list(f.span)} for f in self.pii_findings],
            "verdict": self.verdict.value,
            "visual_anomaly": self.visual_anomaly,
        }


def reliability_score(page: AnnotatedPage) -> float:
    """Share of characters in components whose kind came from markup, not heuristics."""
    total = native = 0
    for c in page.components:
        n = len(c.text)
        total += n
        if c.provenance_confidence in NATIVE_CONFIDENCES:
            native += n
    return native / total if total else 0.0


def blank_fraction(pixels: np.ndarray, white_min: int = 250) -> float:
    """Fraction of (near-)white pixels in an RGB page."""
    if pixels.size == 0:
        return 1.0
    white = pixels[..., 0] >= white_min
    for ch in range(1, pixels.shape[-1]):
        white &= pixels[..., ch] >= white_min
    return float(white.mean())


def verdict_for(ppl: float | None, reliability: float, findings: list[PIIFinding],
                tau: float = DEFAULT_TAU, rho: float = DEFAULT_RHO,
                visual_anomaly: bool = False) -> Verdict:
    """Checks run perplexity, reliability, PII; the first failing gate names the verdict."""
    if ppl is not None and not ppl <= tau:
        return Verdict.DROP_PERPLEXITY
    if reliability < rho or visual_anomaly:
        return Verdict.DROP_RELIABILITY
    if pii_blocks(findings):
        return Verdict.DROP_PII
    return Verdict.KEEP


def gate_page(page: AnnotatedPage, model, tau: float = DEFAULT_TAU, rho: float = DEFAULT_RHO,
              identifier: LanguageIdentifier | None = None, pixels: np.ndarray | None = None,
              blank_max: float = BLANK_FRACTION_MAX) -> PageQuality:
    """Gate one page. ``model`` may be None, in which case the perplexity check is skipped."""
    text = page.text
    identifier = identifier or _default_identifier()
    lang, conf = identifier.identify(text) if text.strip() else (page.language or "und", 0.0)
    ppl = None
    if model is not None and text:
        ppl = perplexity(model, tokenize(text))
        if not (ppl > 0 and math.isfinite(ppl)):
            raise ValueError(f"perplexity out of range: {ppl}")
    rel = reliability_score(page)
    findings = pii_scan(text)
    anomaly = pixels is not None and blank_fraction(pixels) > blank_max
    return PageQuality(lang, conf, ppl, rel, findings, verdict_for(ppl, rel, findings, tau, rho, anomaly), anomaly)


_IDENTIFIER: TrigramLanguageIdentifier | None = None


def _default_identifier() -> TrigramLanguageIdentifier:
    global _IDENTIFIER
    if _IDENTIFIER is None:
        _IDENTIFIER = TrigramLanguageIdentifier.default()
    return _IDENTIFIER
