"""Word-to-region assignment and reading order."""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .docmodel.kinds import ComponentKind, Provenance

log = logging.getLogger(__name__)

Box = tuple[float, float, float, float]

NO_SPACE_LANGUAGES = frozenset({"zh", "ja", "th", "km", "my"})
DEFAULT_CONTAINMENT = 0.7


@dataclass(frozen=True)
class WordBox:
    text: str
    bbox_pt: Box
    extraction_order: int

    def to_json(self) -> str:
        return json.dumps({"text": self.text, "bbox_pt": list(self.bbox_pt), "order": self.extraction_order},
                          ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "WordBox":
        return cls(d["text"], tuple(float(v) for v in d["bbox_pt"]), int(d.get("order", d.get("extraction_order", 0))))


def read_words_jsonl(text: str) -> list[WordBox]:
    return [WordBox.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


@dataclass(frozen=True)
class Region:
    """A component region in pt space, ready for word assignment."""

    kind: ComponentKind
    bbox_pt: Box
    confidence: float
    source_order: int | None = None
    # document-level content that replaces the joined words (e.g. table HTML)
    content: str | None = None
    font_size_pt: float | None = None


@dataclass
class PageComponent:
    kind: ComponentKind
    bbox_pt: Box
    text: str
    provenance_confidence: float
    reading_rank: int
    source_order: int | None = None
    font_size_pt: float | None = None

    @property
    def provenance(self) -> Provenance:
        for p in Provenance:
            if p.confidence == self.provenance_confidence:
                return p
        return Provenance.HEURISTIC


@dataclass
class AnnotatedPage:
    components: list[PageComponent]
    page_size_pt: tuple[float, float]
    language: str | None = None
    unassigned_words: list[WordBox] = field(default_factory=list)
    skipped_words: int = 0

    def __post_init__(self):
        ranks = sorted(c.reading_rank for c in self.components)
        if ranks != list(range(len(self.components))):
            raise ValueError("reading_rank must be a permutation of 0..n-1")
        for c in self.components:
            x1, y1, x2, y2 = c.bbox_pt
            if not (x1 < x2 and y1 < y2):
                raise ValueError(f"degenerate component box {c.bbox_pt}")

    def ordered(self) -> list[PageComponent]:
        return sorted(self.components, key=lambda c: c.reading_rank)

    @property
    def text(self) -> str:
        return "\n".join(c.text for c in self.ordered() if c.text)

    def to_dict(self) -> dict:
        return {
            "page_size_pt": list(self.page_size_pt),
            "language": self.language,
            "components": [
                {**asdict(c), "kind": c.kind.value, "bbox_pt": list(c.bbox_pt)} for c in self.ordered()
            ],
            "unassigned_words": [json.loads(w.to_json()) for w in self.unassigned_words],
            "skipped_words": self.skipped_words,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotatedPage":
        comps = [
            PageComponent(
                kind=ComponentKind.parse(c["kind"]),
                bbox_pt=tuple(c["bbox_pt"]),
                text=c.get("text", ""),
                provenance_confidence=float(c.get("provenance_confidence", 1.0)),
                reading_rank=int(c["reading_rank"]),
                source_order=c.get("source_order"),
                font_size_pt=c.get("font_size_pt"),
            )
            for c in d.get("components", [])
        ]
        return cls(
            comps,
            tuple(d["page_size_pt"]),
            d.get("language"),
            [WordBox.from_dict(w) for w in d.get("unassigned_words", [])],
            int(d.get("skipped_words", 0)),
        )


def box_area(b: Box) -> float:
    return max(b[2] - b[0], 0.0) * max(b[3] - b[1], 0.0)


def intersection_area(a: Box, b: Box) -> float:
    w = min(a[2], b[2]) - max(a[0], b[0])
    h = min(a[3], b[3]) - max(a[1], b[1])
    return w * h if w > 0 and h > 0 else 0.0


def iou(a: Box, b: Box) -> float:
    inter = intersection_area(a, b)
    union = box_area(a) + box_area(b) - inter
    return inter / union if union > 0 else 0.0


def containment(word: Box, region: Box) -> float:
    """Fraction of the word's area that lies inside the region."""
    area = box_area(word)
    return intersection_area(word, region) / area if area > 0 else 0.0


def _region_key(r: Region):
    # total order so the winner never depends on input order
    return (-r.confidence, box_area(r.bbox_pt), r.bbox_pt, r.kind.value,
            -1 if r.source_order is None else r.source_order)


def assign_words(
    words: Sequence[WordBox],
    regions: Sequence[Region],
    containment_min: float = DEFAULT_CONTAINMENT,
    page_size_pt: tuple[float, float] = (612.0, 792.0),
    language: str | None = None,
    no_space_languages: Iterable[str] = NO_SPACE_LANGUAGES,
) -> AnnotatedPage:
    """Match words to the most trusted region that contains them.

    A word is a candidate for a region when at least ``containment_min`` of its
    area lies inside it. Higher provenance confidence wins, then the smaller
    (more specific) region.
    """
    ordered_regions = sorted(regions, key=_region_key)
    buckets: dict[int, list[WordBox]] = {i: [] for i in range(len(ordered_regions))}
    unassigned: list[WordBox] = []
    skipped = 0
    for w in words:
        if box_area(w.bbox_pt) <= 0:
            skipped += 1
            continue
        for i, r in enumerate(ordered_regions):
            if containment(w.bbox_pt, r.bbox_pt) >= containment_min:
                buckets[i].append(w)
                break
        else:
            unassigned.append(w)
    if skipped:
        log.warning("skipped %d degenerate word boxes", skipped)

    sep = "" if (language or "").split("-")[0] in set(no_space_languages) else " "
    comps: list[PageComponent] = []
    for i, r in enumerate(ordered_regions):
        text = r.content if r.content is not None else sep.join(
            w.text for w in sorted(buckets[i], key=lambda w: w.extraction_order)
        )
        comps.append(PageComponent(r.kind, tuple(r.bbox_pt), text, r.confidence, 0, r.source_order, r.font_size_pt))

    ranks = reading_order([(c.bbox_pt, c.source_order) for c in comps])
    for c, rank in zip(comps, ranks):
        c.reading_rank = rank
    comps.sort(key=lambda c: c.reading_rank)
    return AnnotatedPage(comps, tuple(page_size_pt), language, unassigned, skipped)


def reading_order(components: Sequence[tuple[Box, int | None]]) -> list[int]:
    """Rank components; source order when every item has one, else XY-cut."""
    n = len(components)
    if n == 0:
        return []
    if all(src is not None for _, src in components):
        order = sorted(range(n), key=lambda i: (components[i][1], i))
    else:
        order = _xy_cut([c[0] for c in components], list(range(n)))
    ranks = [0] * n
    for rank, i in enumerate(order):
        ranks[i] = rank
    return ranks


def _widest_gap(intervals: list[tuple[float, float]]) -> float | None:
    """Return the split coordinate at the middle of the widest gap, if any."""
    intervals = sorted(intervals)
    best, best_width = None, 0.0
    reach = intervals[0][1]
    for lo, hi in intervals[1:]:
        if lo > reach and lo - reach > best_width:
            best_width, best = lo - reach, (lo + reach) / 2.0
        reach = max(reach, hi)
    return best


def _xy_cut(boxes: list[Box], idx: list[int]) -> list[int]:
    if len(idx) <= 1:
        return list(idx)
    cut = _widest_gap([(boxes[i][1], boxes[i][3]) for i in idx])
    if cut is not None:
        top = [i for i in idx if boxes[i][3] <= cut]
        bottom = [i for i in idx if boxes[i][3] > cut]
        return _xy_cut(boxes, top) + _xy_cut(boxes, bottom)
    cut = _widest_gap([(boxes[i][0], boxes[i][2]) for i in idx])
    if cut is not None:
        left = [i for i in idx if boxes[i][2] <= cut]
        right = [i for i in idx if boxes[i][2] > cut]
        return _xy_cut(boxes, left) + _xy_cut(boxes, right)
    return sorted(idx, key=lambda i: (boxes[i][1], boxes[i][0], i))
