"""Character detection matching and adjacency search matching."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

from .text import ned

DIRECT_THRESHOLD = 0.9
MERGE_WINDOW = 5
CDM_EPS_FRACTION = 0.01


def _as_chars(chars) -> list[tuple[str, tuple[float, float] | None]]:
    if isinstance(chars, str):
        return [(c, None) for c in chars]
    out = []
    for c in chars:
        if isinstance(c, str):
            out.append((c, None))
        else:
            ch, pos = c[0], (c[1] if len(c) > 1 else None)
            out.append((ch, None if pos is None else (float(pos[0]), float(pos[1]))))
    return out


def cdm(pred_chars, gt_chars, page_size: tuple[float, float] = (1.0, 1.0),
        eps_fraction: float = CDM_EPS_FRACTION) -> float:
    """F1 (0..100) over greedily matched characters.

    A pair matches when code points agree and, if both carry centers, the
    centers lie within ``eps_fraction`` of the page diagonal.
    """
    pred, gt = _as_chars(pred_chars), _as_chars(gt_chars)
    if not pred and not gt:
        return 100.0
    if not pred or not gt:
        return 0.0
    eps = eps_fraction * math.hypot(*page_size)
    by_cp: dict[str, list[int]] = defaultdict(list)
    for j, (ch, _) in enumerate(gt):
        by_cp[ch].append(j)
    edges = []
    for i, (ch, pp) in enumerate(pred):
        for j in by_cp.get(ch, ()):
            gp = gt[j][1]
            if pp is not None and gp is not None:
                d = math.hypot(pp[0] - gp[0], pp[1] - gp[1])
                if d > eps:
                    continue
            else:
                d = 0.0
            edges.append((d, i, j))
    edges.sort()
    used_p, used_g = set(), set()
    matched = 0
    for _, i, j in edges:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        matched += 1
    if matched == 0:
        return 0.0
    p, r = matched / len(pred), matched / len(gt)
    return 100.0 * 2 * p * r / (p + r)


@dataclass(frozen=True)
class SegmentMatch:
    gt_indices: tuple[int, ...]
    pred_index: int
    ned: float


def adjacency_match(pred_segments: Sequence[str], gt_segments: Sequence[str],
                    direct_threshold: float = DIRECT_THRESHOLD, window: int = MERGE_WINDOW,
                    joiner: str = " ") -> list[SegmentMatch]:
    """Two-stage fuzzy alignment of predicted to ground-truth segments.

    Stage one pairs segments 1:1 greedily by descending similarity when it
    reaches ``direct_threshold``. Stage two lets each still-unmatched
    prediction claim a run of up to ``window`` adjacent unmatched ground-truth
    segments whose concatenation reaches the threshold.
    """
    pairs = []
    for i, p in enumerate(pred_segments):
        for j, g in enumerate(gt_segments):
            s = ned(p, g)
            if s >= direct_threshold:
                pairs.append((-s, i, j))
    pairs.sort()
    matched_p: set[int] = set()
    matched_g: set[int] = set()
    out: list[SegmentMatch] = []
    for neg, i, j in pairs:
        if i in matched_p or j in matched_g:
            continue
        matched_p.add(i)
        matched_g.add(j)
        out.append(SegmentMatch((j,), i, -neg))

    for i, p in enumerate(pred_segments):
        if i in matched_p:
            continue
        best = None
        for start in range(len(gt_segments)):
            parts = []
            for j in range(start, min(start + window, len(gt_segments))):
                if j in matched_g:
                    break
                parts.append(gt_segments[j])
                if len(parts) < 2:
                    continue
                s = ned(p, joiner.join(parts))
                if best is None or s > best[0]:
                    best = (s, start, len(parts))
        if best is not None and best[0] >= direct_threshold:
            s, start, n = best
            idx = tuple(range(start, start + n))
            matched_p.add(i)
            matched_g.update(idx)
            out.append(SegmentMatch(idx, i, s))
    out.sort(key=lambda m: m.gt_indices[0])
    return out
