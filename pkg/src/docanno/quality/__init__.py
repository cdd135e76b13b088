from .gate import (
    BLANK_FRACTION_MAX,
    DEFAULT_RHO,
    DEFAULT_TAU,
    PageQuality,
    Verdict,
    blank_fraction,
    gate_page,
    reliability_score,
    verdict_for,
)
from .kn import BOS, MAGIC, UNK, KneserNeyModel, LMError, perplexity, tokenize, train_kn
from .langid import LanguageIdentifier, TrigramLanguageIdentifier, trigram_profile
from .pii import EMAIL, FINANCIAL, GOVERNMENT_ID, PHONE, PIIFinding, pii_blocks, pii_scan
