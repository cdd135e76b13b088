from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import docanno.quality.gate as gate_mod
from docanno.align import AnnotatedPage, PageComponent
from docanno.docmodel import ComponentKind
from docanno.quality import (
    EMAIL,
    FINANCIAL,
    GOVERNMENT_ID,
    PHONE,
    UNK,
    KneserNeyModel,
    LMError,
    TrigramLanguageIdentifier,
    Verdict,
    blank_fraction,
    gate_page,
    perplexity,
    pii_blocks,
    pii_scan,
    reliability_score,
    tokenize,
    train_kn,
    verdict_for,
)

from oracles import ReferenceKN, perplexity_direct

ENGLISH = ("the quick brown fox jumps over the lazy dog while the farmer counts the sheep in the "
           "morning and the children walk to school along the river road past the old mill")


class UniformModel:
    order = 2

    def __init__(self, v):
        self.v = v

    def prob(self, token, context):
        return 1.0 / self.v


def page_of(*parts):
    """parts: (text, provenance confidence) per component."""
    comps = [PageComponent(ComponentKind.TEXT, (0, 10 * i, 100, 10 * i + 9), t, conf, i, i)
             for i, (t, conf) in enumerate(parts)]
    return AnnotatedPage(comps, (612.0, 792.0), "en")


# -- Kneser-Ney --------------------------------------------------------------------


def test_kn_matches_reference_implementation():
    rng = random.Random(3)
    corpus = ["".join(rng.choice("abcde") for _ in range(rng.randint(5, 40))) for _ in range(30)]
    model = train_kn([tokenize(s) for s in corpus])
    ref = ReferenceKN([list(s) for s in corpus])
    for _ in range(200):
        ctx = [rng.choice("abcdez") for _ in range(rng.randint(0, 6))]
        w = rng.choice("abcdez")
        assert model.prob(w, ctx) == pytest.approx(ref.prob(w, ctx), rel=1e-12)


def test_abab_predicts_b_after_a():
    model = train_kn([tokenize("abab" * 20)] * 5)
    assert model.prob("b", list("baba")) > 0.95
    assert model.prob("a", list("baba")) < 0.05


def test_single_token_corpus_dominates():
    model = train_kn([["x"] * 30])
    assert model.prob("x", ["x"] * 4) > 0.9


def test_normalization_at_random_contexts():
    rng = random.Random(11)
    model = train_kn([tokenize(ENGLISH)])
    vocab = sorted(model.vocabulary)
    for _ in range(100):
        ctx = [rng.choice(vocab + ["Q"]) for _ in range(rng.randint(0, 4))]
        total = sum(model.prob(v, ctx) for v in vocab) + model.prob(UNK, ctx)
        assert abs(total - 1.0) <= 1e-9


def test_order_and_corpus_errors():
    with pytest.raises(LMError):
        train_kn([list("abc")], order=1)
    with pytest.raises(LMError):
        train_kn([])
    with pytest.raises(LMError):
        train_kn([[], []])
    with pytest.raises(LMError):
        perplexity(train_kn([list("abc")]), [])


def test_uniform_model_perplexity_is_vocab_size():
    assert perplexity(UniformModel(10), list("anything at all")) == pytest.approx(10.0, rel=1e-12)


def test_in_domain_beats_out_of_domain():
    model = train_kn([tokenize("abab" * 20)] * 5)
    ref = ReferenceKN([list("abab" * 20)] * 5)
    for text in ("abab", "zzzz"):
        pad = ["<s>"] * 4 + list(text)
        want = perplexity_direct(ref.prob(pad[i], pad[i - 4:i]) for i in range(4, len(pad)))
        assert perplexity(model, list(text)) == pytest.approx(want, rel=1e-12)
    assert perplexity(model, list("abab")) < perplexity(model, list("zzzz"))


@pytest.mark.parametrize("seed", range(5))
def test_training_text_beats_shuffles(seed):
    tokens = tokenize(ENGLISH)
    model = train_kn([tokens])
    base = perplexity(model, tokens)
    rng = random.Random(seed)
    for _ in range(10):
        shuffled = list(tokens)
        rng.shuffle(shuffled)
        assert base <= perplexity(model, shuffled)


def test_model_serialization(tmp_path):
    model = train_kn([tokenize(ENGLISH), tokenize("ça va très bien")])
    path = tmp_path / "en.knlm"
    model.save(path)
    assert path.read_bytes().startswith(b"KNLM1")
    again = KneserNeyModel.load(path)
    text = tokenize("the river is quiet")
    assert perplexity(again, text) == perplexity(model, text)
    with pytest.raises(LMError):
        KneserNeyModel.from_bytes(b"nope")
    with pytest.raises(LMError):
        KneserNeyModel.from_bytes(b"KNLM1\ngarbage")


# -- reliability ---------------------------------------------------------------------


def test_reliability_examples():
    assert reliability_score(page_of(("a" * 80, 1.0), ("b" * 20, 0.5))) == pytest.approx(0.8)
    assert reliability_score(page_of(("a" * 59, 0.8), ("b" * 41, 0.5))) == pytest.approx(0.59)
    assert reliability_score(page_of()) == 0.0
    assert reliability_score(page_of(("", 1.0))) == 0.0


def test_reliability_verdicts():
    assert verdict_for(50.0, 0.8, []) is Verdict.KEEP
    assert verdict_for(50.0, 0.59, []) is Verdict.DROP_RELIABILITY
    assert verdict_for(50.0, 0.6, []) is Verdict.KEEP
    assert verdict_for(50.0, 0.0, []) is Verdict.DROP_RELIABILITY


@given(st.integers(0, 200), st.integers(0, 200), st.integers(1, 50))
@settings(max_examples=200, deadline=None)
def test_reliability_bounded_and_monotone(native, heuristic, extra):
    r = reliability_score(page_of(("n" * native, 1.0), ("h" * heuristic, 0.5)))
    assert 0.0 <= r <= 1.0
    more = reliability_score(page_of(("n" * (native + extra), 0.8), ("h" * heuristic, 0.5)))
    assert more >= r


# -- PII -------------------------------------------------------------------------------


def test_pii_email():
    (f,) = pii_scan("contact a@b.com")
    assert (f.category, f.span) == (EMAIL, (8, 15))


def test_pii_spans_are_utf8_bytes():
    (f,) = pii_scan("é a@b.com")
    assert f.span == (3, 10)


def test_pii_plain_prose():
    assert pii_scan("The committee met on Tuesday to review the budget.") == []


def test_pii_categories():
    cats = {f.category for f in pii_scan("call +1 415 555 0100 or pay 4111 1111 1111 1111, ssn 123-45-6789")}
    assert cats == {PHONE, FINANCIAL, GOVERNMENT_ID}
    # invalid Luhn is not a card
    assert all(f.category != FINANCIAL for f in pii_scan("4111 1111 1111 1112"))


def test_pii_drop_rules():
    three = pii_scan("a@x.org b@y.org c@z.org")
    assert len(three) == 3 and pii_blocks(three)
    assert not pii_blocks(pii_scan("a@x.org b@y.org"))
    assert pii_blocks(pii_scan("id 123-45-6789"))
    assert verdict_for(10.0, 1.0, three) is Verdict.DROP_PII


def test_pii_configurable_ids():
    found = pii_scan("badge ZX-0042", {"badge": r"ZX-\d{4}"})
    assert [(f.category, f.detector) for f in found] == [(GOVERNMENT_ID, "badge")]


# -- gate ------------------------------------------------------------------------------


class ConstantModel:
    order = 2

    def __init__(self, ppl):
        self.p = 1.0 / ppl

    def prob(self, token, context):
        return self.p


@pytest.mark.parametrize("ppl,rel,verdict", [
    (119.9, 0.9, Verdict.KEEP),
    (120.1, 0.9, Verdict.DROP_PERPLEXITY),
    (50.0, 0.5, Verdict.DROP_RELIABILITY),
])
def test_gate_examples(ppl, rel, verdict):
    native = round(rel * 100)
    page = page_of(("n" * native, 1.0), ("h" * (100 - native), 0.5))
    q = gate_page(page, ConstantModel(ppl))
    assert q.perplexity == pytest.approx(ppl, rel=1e-9)
    assert q.verdict is verdict


def test_gate_boundary_exactly_tau_keeps(monkeypatch):
    monkeypatch.setattr(gate_mod, "perplexity", lambda model, tokens: 120.0)
    assert gate_page(page_of(("text", 1.0)), object()).verdict is Verdict.KEEP
    monkeypatch.setattr(gate_mod, "perplexity", lambda model, tokens: math.nextafter(120.0, 200.0))
    assert gate_page(page_of(("text", 1.0)), object()).verdict is Verdict.DROP_PERPLEXITY


def test_gate_without_model_skips_perplexity():
    q = gate_page(page_of(("plain words", 1.0)), None)
    assert q.perplexity is None and q.verdict is Verdict.KEEP


def test_gate_rejects_bad_perplexity(monkeypatch):
    monkeypatch.setattr(gate_mod, "perplexity", lambda model, tokens: float("nan"))
    with pytest.raises(ValueError):
        gate_page(page_of(("x", 1.0)), object())


def test_gate_blank_page_anomaly():
    white = np.full((100, 100, 3), 255, np.uint8)
    q = gate_page(page_of(("words here", 1.0)), None, pixels=white)
    assert q.visual_anomaly and q.verdict is Verdict.DROP_RELIABILITY
    inked = white.copy()
    inked[:10] = 0
    assert blank_fraction(inked) == pytest.approx(0.9)
    assert gate_page(page_of(("words here", 1.0)), None, pixels=inked).verdict is Verdict.KEEP


def test_verdict_precedence():
    emails = pii_scan("a@x.org b@y.org c@z.org")
    assert verdict_for(500.0, 0.1, emails) is Verdict.DROP_PERPLEXITY
    assert verdict_for(5.0, 0.1, emails) is Verdict.DROP_RELIABILITY


def test_gate_is_pure():
    page = page_of(("the farmer counts the sheep", 1.0), ("x@y.org", 0.5))
    model = train_kn([tokenize(ENGLISH)])
    assert gate_page(page, model).to_dict() == gate_page(page, model).to_dict()


# -- language id -----------------------------------------------------------------------


def test_default_language_id():
    ident = TrigramLanguageIdentifier.default()
    assert ident.identify(ENGLISH)[0] == "en"
    lang, conf = ident.identify("der Hund und die Katze sind in dem Haus mit der Mutter")
    assert lang == "de" and 0.0 < conf <= 1.0


def test_custom_language_profiles():
    ident = TrigramLanguageIdentifier.from_samples({"aa": "aaaa aaaa", "bb": "bbbb bbbb"})
    assert ident.identify("bbb")[0] == "bb"
    with pytest.raises(ValueError):
        TrigramLanguageIdentifier({})
