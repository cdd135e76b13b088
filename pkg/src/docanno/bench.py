"""Page features, k-means, difficulty scores, and difficulty-stratified sampling."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .align import AnnotatedPage, box_area
from .docmodel.kinds import GRAPHIC_KINDS, ComponentKind

KIND_FEATURES = tuple(k.value for k in ComponentKind)
FEATURE_NAMES = KIND_FEATURES + ("density", "font_variety", "image_ratio", "text_length")
SQ_INCH_PT = 72.0 * 72.0
MAX_ITER = 100
TERCILES = ("easy", "medium", "hard")
DEFAULT_CAP = 100

DEFAULT_WEIGHTS = {"table": 3.0, "formula": 4.0, "chart": 4.0, "density": 2.0, "font_variety": 1.0,
                   "image_ratio": 1.0}
OTHER_WEIGHT = 0.5


@dataclass(frozen=True)
class PageFeatures:
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} features, got {len(self.values)}")
        if any(v < 0 for v in self.values):
            raise ValueError("features are non-negative")

    @classmethod
    def from_mapping(cls, m: dict[str, float]) -> "PageFeatures":
        unknown = set(m) - set(FEATURE_NAMES)
        if unknown:
            raise ValueError(f"unknown features: {sorted(unknown)}")
        return cls(tuple(float(m.get(n, 0.0)) for n in FEATURE_NAMES))

    def __getitem__(self, name: str) -> float:
        return self.values[FEATURE_NAMES.index(name)]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


def page_features(page: AnnotatedPage) -> PageFeatures:
    if not page.components:
        return PageFeatures((0.0,) * len(FEATURE_NAMES))
    counts = dict.fromkeys(KIND_FEATURES, 0.0)
    for c in page.components:
        counts[c.kind.value] += 1
    area_in2 = page.page_size_pt[0] * page.page_size_pt[1] / SQ_INCH_PT
    page_area = page.page_size_pt[0] * page.page_size_pt[1]
    fonts = {round(c.font_size_pt, 2) for c in page.components if c.font_size_pt}
    image = sum(box_area(c.bbox_pt) for c in page.components if c.kind in GRAPHIC_KINDS)
    chars = sum(len(c.text) for c in page.components)
    extra = (len(page.components) / area_in2, float(len(fonts)), min(image / page_area, 1.0), chars / area_in2)
    return PageFeatures(tuple(counts[k] for k in KIND_FEATURES) + extra)


@dataclass
class DifficultyWeights:
    weights: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    other: float = OTHER_WEIGHT

    def __post_init__(self):
        if any(w < 0 for w in self.weights.values()) or self.other < 0:
            raise ValueError("weights must be non-negative")
        unknown = set(self.weights) - set(FEATURE_NAMES)
        if unknown:
            raise ValueError(f"unknown features: {sorted(unknown)}")

    def vector(self) -> np.ndarray:
        return np.asarray([self.weights.get(n, self.other) for n in FEATURE_NAMES], dtype=np.float64)

    def scaled(self, factor: float) -> "DifficultyWeights":
        return DifficultyWeights({k: v * factor for k, v in self.weights.items()}, self.other * factor)


def raw_difficulty(features: PageFeatures, weights: DifficultyWeights | None = None) -> float:
    return float(features.as_array() @ (weights or DifficultyWeights()).vector())


def difficulty(pool: Sequence[PageFeatures], weights: DifficultyWeights | None = None) -> list[float]:
    """Weighted scores min-max normalized over the pool (a flat pool scores 0)."""
    if not pool:
        return []
    raw = np.asarray([raw_difficulty(f, weights) for f in pool])
    lo, hi = raw.min(), raw.max()
    if hi == lo:
        return [0.0] * len(pool)
    return ((raw - lo) / (hi - lo)).tolist()


def kmeans(features: Sequence[PageFeatures] | np.ndarray, k: int, seed: int, max_iter: int = MAX_ITER) -> list[int]:
    """Lloyd iterations from a seeded farthest-first start."""
    X = np.asarray([f.values if isinstance(f, PageFeatures) else f for f in features], dtype=np.float64)
    n = len(X)
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    rng = random.Random(seed)
    centers_idx = [rng.randrange(n)]
    mind = ((X - X[centers_idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(mind))  # first maximum on ties
        centers_idx.append(nxt)
        mind = np.minimum(mind, ((X - X[nxt]) ** 2).sum(axis=1))
    centers = X[centers_idx].copy()
    assign = None
    for _ in range(max_iter):
        d = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(d, axis=1)
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        for c in range(k):
            members = X[assign == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    return assign.tolist()


@dataclass(frozen=True)
class Candidate:
    page_id: str
    language: str
    difficulty: float
    cluster: int = 0


@dataclass(frozen=True)
class ManifestRow:
    page_id: str
    language: str
    tercile: str
    cluster: int
    difficulty: float

    def to_json(self) -> str:
        return json.dumps({"page_id": self.page_id, "language": self.language, "tercile": self.tercile,
                           "cluster": self.cluster, "difficulty": self.difficulty}, sort_keys=True,
                          ensure_ascii=False)


def _quotas(cap: int) -> tuple[int, int, int]:
    # remainder goes one page per tercile, hardest first, so counts differ by at most one
    base, rem = divmod(cap, 3)
    return base, base + (rem == 2), base + (rem >= 1)


def _round_robin(items: list[Candidate], quota: int, rng: random.Random) -> list[Candidate]:
    by_cluster: dict[int, list[Candidate]] = {}
    for c in items:
        by_cluster.setdefault(c.cluster, []).append(c)
    queues = []
    for cid in sorted(by_cluster):
        q = sorted(by_cluster[cid], key=lambda c: c.page_id)
        rng.shuffle(q)
        queues.append(q)
    out: list[Candidate] = []
    while len(out) < quota and any(queues):
        for q in queues:
            if q and len(out) < quota:
                out.append(q.pop(0))
    return out


def stratified_sample(pages: Iterable[Candidate], per_lang_cap: int = DEFAULT_CAP, seed: int = 0) -> list[ManifestRow]:
    """Per language: rank into difficulty terciles and draw cap/3 from each (remainder to hard)."""
    pools: dict[str, list[Candidate]] = {}
    for p in pages:
        pools.setdefault(p.language, []).append(p)
    manifest: list[ManifestRow] = []
    for lang in sorted(pools):
        pool = sorted(pools[lang], key=lambda c: (c.difficulty, c.page_id))
        n = len(pool)
        cut1, cut2 = n // 3, 2 * n // 3
        bins = [pool[:cut1], pool[cut1:cut2], pool[cut2:]]
        if n <= per_lang_cap:
            chosen = [list(b) for b in bins]
        else:
            quotas = list(_quotas(per_lang_cap))
            # shortfall in one tercile moves to the next harder one, then back
            for t in range(3):
                short = quotas[t] - len(bins[t])
                if short > 0:
                    quotas[t] -= short
                    quotas[(t + 1) % 3] += short
            chosen = [_round_robin(b, q, random.Random(f"{seed}:{lang}:{t}"))
                      for t, (b, q) in enumerate(zip(bins, quotas))]
        for t, picked in enumerate(chosen):
            for c in picked:
                manifest.append(ManifestRow(c.page_id, lang, TERCILES[t], c.cluster, c.difficulty))
    return manifest


def manifest_jsonl(rows: Sequence[ManifestRow]) -> str:
    return "".join(r.to_json() + "\n" for r in rows)
