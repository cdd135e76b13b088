"""Interpolated Kneser-Ney n-gram language model over character tokens."""

from __future__ import annotations

import json
import math
import zlib
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

MAGIC = b"KNLM1"
DEFAULT_ORDER = 5
DEFAULT_DISCOUNT = 0.75
BOS = "<s>"
UNK = "<unk>"


class LMError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    """Character-level tokens; script-agnostic."""
    return list(text)


class KneserNeyModel:
    """Interpolated KN with one absolute discount at every level.

    The highest level uses raw counts, lower levels continuation counts (the
    number of distinct left extensions). The unigram level interpolates with a
    uniform distribution over the vocabulary plus one unknown slot, so every
    conditional distribution sums to one.
    """

    def __init__(self, order: int, discount: float, vocabulary: set[str],
                 counts: list[dict[tuple[str, ...], int]]):
        if order < 2:
            raise LMError(f"order must be >= 2, got {order}")
        if not 0 < discount < 1:
            raise LMError("discount must lie in (0, 1)")
        self.order = order
        self.discount = discount
        self.vocabulary = set(vocabulary)
        # counts[k-1] holds k-gram counts (raw for k == order, continuation otherwise)
        self.counts = counts
        self._ctx_total: list[dict[tuple[str, ...], int]] = []
        self._ctx_types: list[dict[tuple[str, ...], int]] = []
        for table in counts:
            total: dict[tuple[str, ...], int] = defaultdict(int)
            types: dict[tuple[str, ...], int] = defaultdict(int)
            for gram, c in table.items():
                total[gram[:-1]] += c
                types[gram[:-1]] += 1
            self._ctx_total.append(dict(total))
            self._ctx_types.append(dict(types))
        self._uniform = 1.0 / (len(self.vocabulary) + 1)

    # -- training ------------------------------------------------------------

    @classmethod
    def train(cls, corpus: Iterable[Sequence[str]], order: int = DEFAULT_ORDER,
              discount: float = DEFAULT_DISCOUNT) -> "KneserNeyModel":
        if order < 2:
            raise LMError(f"order must be >= 2, got {order}")
        top: dict[tuple[str, ...], int] = defaultdict(int)
        vocab: set[str] = set()
        n_seq = 0
        for seq in corpus:
            seq = list(seq)
            if not seq:
                continue
            n_seq += 1
            vocab.update(seq)
            padded = [BOS] * (order - 1) + seq
            for i in range(order - 1, len(padded)):
                top[tuple(padded[i - order + 1:i + 1])] += 1
        if n_seq == 0:
            raise LMError("cannot train on an empty corpus")
        counts: list[dict[tuple[str, ...], int]] = [dict() for _ in range(order)]
        counts[order - 1] = dict(top)
        for k in range(order - 1, 0, -1):
            cont: dict[tuple[str, ...], int] = defaultdict(int)
            for gram in counts[k]:
                cont[gram[1:]] += 1
            counts[k - 1] = dict(cont)
        return cls(order, discount, vocab, counts)

    # -- scoring -------------------------------------------------------------

    def prob(self, token: str, context: Sequence[str]) -> float:
        """P(token | context); out-of-vocabulary tokens score as the unknown slot."""
        ctx = tuple(context)[-(self.order - 1):] if self.order > 1 else ()
        if len(ctx) < self.order - 1:
            ctx = (BOS,) * (self.order - 1 - len(ctx)) + ctx
        word = token if token in self.vocabulary else UNK
        return self._prob(word, ctx, self.order)

    def _prob(self, word: str, ctx: tuple[str, ...], level: int) -> float:
        d = self.discount
        if level == 1:
            total = self._ctx_total[0].get((), 0)
            lower = self._uniform
            if total == 0:
                return lower
            c = self.counts[0].get((word,), 0)
            return max(c - d, 0.0) / total + d * self._ctx_types[0][()] / total * lower
        h = ctx[len(ctx) - (level - 1):]
        lower = self._prob(word, ctx, level - 1)
        total = self._ctx_total[level - 1].get(h, 0)
        if total == 0:
            return lower
        c = self.counts[level - 1].get(h + (word,), 0)
        return max(c - d, 0.0) / total + d * self._ctx_types[level - 1][h] / total * lower

    def logprob_sequence(self, tokens: Sequence[str]) -> float:
        padded = [BOS] * (self.order - 1) + list(tokens)
        return sum(
            math.log(self.prob(padded[i], padded[i - self.order + 1:i]))
            for i in range(self.order - 1, len(padded))
        )

    # -- persistence ---------------------------------------------------------

    def to_bytes(self) -> bytes:
        payload = {
            "order": self.order,
            "discount": self.discount,
            "vocabulary": sorted(self.vocabulary),
            "counts": [[[list(g), c] for g, c in sorted(t.items())] for t in self.counts],
        }
        return MAGIC + b"\n" + zlib.compress(json.dumps(payload, ensure_ascii=False).encode("utf-8"), 9)

    @classmethod
    def from_bytes(cls, data: bytes) -> "KneserNeyModel":
        if not data.startswith(MAGIC + b"\n"):
            raise LMError("not a KNLM1 model file")
        try:
            payload = json.loads(zlib.decompress(data[len(MAGIC) + 1:]).decode("utf-8"))
        except (zlib.error, json.JSONDecodeError) as exc:
            raise LMError(f"corrupt model payload: {exc}") from exc
        counts = [{tuple(g): c for g, c in table} for table in payload["counts"]]
        return cls(payload["order"], payload["discount"], set(payload["vocabulary"]), counts)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "KneserNeyModel":
        return cls.from_bytes(Path(path).read_bytes())


def train_kn(corpus: Iterable[Sequence[str]], order: int = DEFAULT_ORDER,
             discount: float = DEFAULT_DISCOUNT) -> KneserNeyModel:
    return KneserNeyModel.train(corpus, order, discount)


def perplexity(model, tokens: Sequence[str]) -> float:
    """exp of the mean negative log-probability per token.

    ``model`` only needs ``prob(token, context)`` and ``order``.
    """
    tokens = list(tokens)
    if not tokens:
        raise LMError("perplexity of empty text is undefined")
    order = getattr(model, "order", 2)
    padded = [BOS] * (order - 1) + tokens
    nll = 0.0
    for i in range(order - 1, len(padded)):
        nll -= math.log(model.prob(padded[i], padded[max(0, i - order + 1):i]))
    return math.exp(nll / len(tokens))
