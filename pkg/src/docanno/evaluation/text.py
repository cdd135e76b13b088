"""Edit distances and text normalization."""

from __future__ import annotations

import re
import unicodedata


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance over code points (bit-parallel, Hyyrö's variant of Myers)."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    m = len(b)
    if m == 0:
        return len(a)
    peq: dict[str, int] = {}
    for i, ch in enumerate(b):
        peq[ch] = peq.get(ch, 0) | (1 << i)
    mask = (1 << m) - 1
    last = 1 << (m - 1)
    pv, mv, score = mask, 0, m
    for ch in a:
        eq = peq.get(ch, 0)
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = mv | ~(xh | pv)
        mh = pv & xh
        if ph & last:
            score += 1
        elif mh & last:
            score -= 1
        ph = (ph << 1) | 1
        mh = mh << 1
        pv = (mh | ~(xv | ph)) & mask
        mv = ph & xv & mask
    return score


def sequence_levenshtein(a, b) -> int:
    """Plain DP edit distance over arbitrary hashable sequences."""
    a, b = list(a), list(b)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def ned(p: str, g: str) -> float:
    """Normalized edit similarity: 1 - D / max(len). Both empty gives 1.0."""
    n = max(len(p), len(g))
    if n == 0:
        return 1.0
    return 1.0 - levenshtein(p, g) / n


def sequence_ned(p, g) -> float:
    p, g = list(p), list(g)
    n = max(len(p), len(g))
    return 1.0 if n == 0 else 1.0 - sequence_levenshtein(p, g) / n


# common LaTeX commands rendered to Unicode before comparison
LATEX_TO_UNICODE = {
    r"\alpha": "α", r"\beta": "β", r"\gamma": "γ", r"\delta": "δ", r"\epsilon": "ε", r"\varepsilon": "ε",
    r"\zeta": "ζ", r"\eta": "η", r"\theta": "θ", r"\iota": "ι", r"\kappa": "κ", r"\lambda": "λ",
    r"\mu": "μ", r"\nu": "ν", r"\xi": "ξ", r"\pi": "π", r"\rho": "ρ", r"\sigma": "σ", r"\tau": "τ",
    r"\upsilon": "υ", r"\phi": "φ", r"\varphi": "φ", r"\chi": "χ", r"\psi": "ψ", r"\omega": "ω",
    r"\Gamma": "Γ", r"\Delta": "Δ", r"\Theta": "Θ", r"\Lambda": "Λ", r"\Xi": "Ξ", r"\Pi": "Π",
    r"\Sigma": "Σ", r"\Phi": "Φ", r"\Psi": "Ψ", r"\Omega": "Ω",
    r"\times": "×", r"\div": "÷", r"\pm": "±", r"\mp": "∓", r"\cdot": "·", r"\leq": "≤", r"\le": "≤",
    r"\geq": "≥", r"\ge": "≥", r"\neq": "≠", r"\ne": "≠", r"\approx": "≈", r"\equiv": "≡", r"\sim": "∼",
    r"\infty": "∞", r"\partial": "∂", r"\nabla": "∇", r"\sum": "∑", r"\prod": "∏", r"\int": "∫",
    r"\sqrt": "√", r"\rightarrow": "→", r"\to": "→", r"\leftarrow": "←", r"\Rightarrow": "⇒",
    r"\Leftarrow": "⇐", r"\leftrightarrow": "↔", r"\in": "∈", r"\notin": "∉", r"\subset": "⊂",
    r"\subseteq": "⊆", r"\cup": "∪", r"\cap": "∩", r"\forall": "∀", r"\exists": "∃", r"\emptyset": "∅",
    r"\degree": "°", r"\circ": "∘", r"\ldots": "…", r"\cdots": "⋯", r"\%": "%", r"\$": "$", r"\&": "&",
}
_LATEX_RE = re.compile("|".join(re.escape(k) + (r"(?![A-Za-z])" if k[-1].isalpha() else "")
                                for k in sorted(LATEX_TO_UNICODE, key=len, reverse=True)))
_INLINE_MATH_RE = re.compile(r"(?<!\$)\$([^$\n]+)\$(?!\$)|\\\((.+?)\\\)")


def latex_to_unicode(text: str) -> str:
    return _LATEX_RE.sub(lambda m: LATEX_TO_UNICODE[m.group()], text)


def normalize_inline_math(text: str) -> str:
    """Replace inline ``$...$`` / ``\\(...\\)`` spans by their Unicode rendering."""
    return _INLINE_MATH_RE.sub(lambda m: latex_to_unicode(m.group(1) or m.group(2)), text)


def normalize_text(text: str) -> str:
    return " ".join(unicodedata.normalize("NFC", text).split())


def normalize_formula(text: str) -> str:
    return "".join(text.split())
