"""Language identification contract and a character-trigram default."""

from __future__ import annotations

import math
from collections import Counter
from typing import Protocol

# short seed texts (UDHR article 1 and similar) for the built-in profiles
SEED_TEXTS = {
    "en": "All human beings are born free and equal in dignity and rights. They are endowed with reason "
          "and conscience and should act towards one another in a spirit of brotherhood. The report "
          "describes the results of the annual survey and the plans for the next year.",
    "fr": "Tous les êtres humains naissent libres et égaux en dignité et en droits. Ils sont doués de "
          "raison et de conscience et doivent agir les uns envers les autres dans un esprit de fraternité. "
          "Le rapport décrit les résultats de l'enquête annuelle et les projets pour l'année prochaine.",
    "de": "Alle Menschen sind frei und gleich an Würde und Rechten geboren. Sie sind mit Vernunft und "
          "Gewissen begabt und sollen einander im Geist der Brüderlichkeit begegnen. Der Bericht "
          "beschreibt die Ergebnisse der jährlichen Umfrage und die Pläne für das nächste Jahr.",
    "es": "Todos los seres humanos nacen libres e iguales en dignidad y derechos y, dotados como están "
          "de razón y conciencia, deben comportarse fraternalmente los unos con los otros. El informe "
          "describe los resultados de la encuesta anual y los planes para el próximo año.",
    "it": "Tutti gli esseri umani nascono liberi ed eguali in dignità e diritti. Essi sono dotati di "
          "ragione e di coscienza e devono agire gli uni verso gli altri in spirito di fratellanza. "
          "La relazione descrive i risultati dell'indagine annuale e i piani per il prossimo anno.",
    "pt": "Todos os seres humanos nascem livres e iguais em dignidade e em direitos. Dotados de razão "
          "e de consciência, devem agir uns para com os outros em espírito de fraternidade. O relatório "
          "descreve os resultados do inquérito anual e os planos para o próximo ano.",
    "nl": "Alle mensen worden vrij en gelijk in waardigheid en rechten geboren. Zij zijn begiftigd met "
          "verstand en geweten, en behoren zich jegens elkander in een geest van broederschap te "
          "gedragen. Het verslag beschrijft de resultaten van het jaarlijkse onderzoek.",
    "ru": "Все люди рождаются свободными и равными в своем достоинстве и правах. Они наделены разумом "
          "и совестью и должны поступать в отношении друг друга в духе братства. В отчете описаны "
          "результаты ежегодного опроса и планы на следующий год.",
    "ar": "يولد جميع الناس أحرارا متساوين في الكرامة والحقوق. وقد وهبوا عقلا وضميرا وعليهم أن يعامل "
          "بعضهم بعضا بروح الإخاء. يصف التقرير نتائج المسح السنوي والخطط للعام المقبل.",
    "he": "כל בני האדם נולדו בני חורין ושווים בערכם ובזכויותיהם. כולם חוננו בתבונה ובמצפון, לפיכך "
          "חובה עליהם לנהוג איש ברעהו ברוח של אחווה. הדוח מתאר את תוצאות הסקר השנתי והתוכניות לשנה הבאה.",
    "fa": "تمام افراد بشر آزاد به دنیا می‌آیند و از لحاظ حیثیت و حقوق با هم برابرند. همه دارای عقل و "
          "وجدان هستند و باید نسبت به یکدیگر با روح برادری رفتار کنند. گزارش نتایج نظرسنجی سالانه را شرح می‌دهد.",
    "ur": "تمام انسان آزاد اور حقوق و عزت کے اعتبار سے برابر پیدا ہوئے ہیں۔ انہیں ضمیر اور عقل ودیعت "
          "ہوئی ہے۔ اس لئے انہیں ایک دوسرے کے ساتھ بھائی چارے کا سلوک کرنا چاہیئے۔ رپورٹ سالانہ سروے کے نتائج بیان کرتی ہے۔",
    "zh": "人人生而自由，在尊严和权利上一律平等。他们赋有理性和良心，并应以兄弟关系的精神相对待。"
          "报告描述了年度调查的结果和明年的计划。",
    "th": "มนุษย์ทั้งหลายเกิดมามีอิสระและเสมอภาคกันในเกียรติศักดิ์และสิทธิ ต่างมีเหตุผลและมโนธรรม "
          "และควรปฏิบัติต่อกันด้วยเจตนารมณ์แห่งภราดรภาพ รายงานอธิบายผลการสำรวจประจำปี",
}


class LanguageIdentifier(Protocol):
    def identify(self, text: str) -> tuple[str, float]:
        """Return (language code, confidence in [0, 1])."""


def trigram_profile(text: str) -> Counter:
    padded = f"  {text.lower()}  "
    return Counter(padded[i:i + 3] for i in range(len(padded) - 2))


def _cosine(a: Counter, b: Counter) -> float:
    if not a or not b:
        return 0.0
    dot = sum(v * b.get(k, 0) for k, v in a.items())
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    return dot / (na * nb)


class TrigramLanguageIdentifier:
    """Cosine similarity of character-trigram counts against per-language profiles."""

    def __init__(self, profiles: dict[str, Counter]):
        if not profiles:
            raise ValueError("at least one language profile is required")
        self.profiles = profiles

    @classmethod
    def from_samples(cls, samples: dict[str, str]) -> "TrigramLanguageIdentifier":
        return cls({lang: trigram_profile(text) for lang, text in samples.items()})

    @classmethod
    def default(cls) -> "TrigramLanguageIdentifier":
        return cls.from_samples(SEED_TEXTS)

    def identify(self, text: str) -> tuple[str, float]:
        prof = trigram_profile(text)
        scores = sorted(((_cosine(prof, p), lang) for lang, p in self.profiles.items()), key=lambda s: (-s[0], s[1]))
        best, lang = scores[0]
        return lang, best
