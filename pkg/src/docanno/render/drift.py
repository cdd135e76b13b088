from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .diff import RegionDetection
from .raster import RasterError, RasterPage

MAX_SHIFT_PX = 3
REGION_AGREEMENT_MIN = 0.9
EXCLUDE_FRACTION = 0.05
SCANNED_ENTROPY = 6.5
RENDERED_ENTROPY = 4.5


@dataclass(frozen=True)
class DriftReport:
    registered_shift_px: tuple[int, int]
    mismatched_component_fraction: float
    excluded: bool
    mismatched: tuple[int, ...] = ()


def _packed(page: RasterPage) -> np.ndarray:
    p = page.pixels
    out = p[..., 0].astype(np.uint32) << 16
    out |= p[..., 1].astype(np.uint32) << 8
    out |= p[..., 2]
    return out


def _overlap(h: int, w: int, dx: int, dy: int):
    """Slices of a and b such that a[y, x] pairs with b[y + dy, x + dx]."""
    ya, yb = slice(max(0, -dy), min(h, h - dy)), slice(max(0, dy), min(h, h + dy))
    xa, xb = slice(max(0, -dx), min(w, w - dx)), slice(max(0, dx), min(w, w + dx))
    return (ya, xa), (yb, xb)


def register_shift(a: np.ndarray, b: np.ndarray, max_shift: int = MAX_SHIFT_PX) -> tuple[int, int]:
    """Integer (dx, dy) maximizing agreement of ``a`` with ``b`` translated back."""
    if np.array_equal(a, b):
        return 0, 0
    h, w = a.shape
    candidates = sorted(
        ((dx, dy) for dx in range(-max_shift, max_shift + 1) for dy in range(-max_shift, max_shift + 1)),
        key=lambda s: (abs(s[0]) + abs(s[1]), s[1], s[0]),
    )
    best, best_score = (0, 0), -1.0
    for dx, dy in candidates:
        sa, sb = _overlap(h, w, dx, dy)
        pa, pb = a[sa], b[sb]
        if pa.size == 0:
            continue
        score = np.count_nonzero(pa == pb) / pa.size
        if score > best_score:
            best, best_score = (dx, dy), score
    return best


def _region_agreement(a: np.ndarray, b: np.ndarray, box, dx: int, dy: int) -> float:
    h, w = a.shape
    x1, y1, x2, y2 = box
    area = (x2 - x1) * (y2 - y1)
    if area <= 0:
        return 0.0
    # clip so both the box and its shifted twin stay inside the page
    cx1, cy1 = max(x1, -dx, 0), max(y1, -dy, 0)
    cx2, cy2 = min(x2, w - dx, w), min(y2, h - dy, h)
    if cx1 >= cx2 or cy1 >= cy2:
        return 0.0
    pa = a[cy1:cy2, cx1:cx2]
    pb = b[cy1 + dy:cy2 + dy, cx1 + dx:cx2 + dx]
    return np.count_nonzero(pa == pb) / area


def detect_drift(base_a: RasterPage, base_b: RasterPage, regions: Sequence[RegionDetection],
                 max_shift: int = MAX_SHIFT_PX, agreement_min: float = REGION_AGREEMENT_MIN,
                 exclude_fraction: float = EXCLUDE_FRACTION) -> DriftReport:
    """Register two uncolorized renders and flag regions that disagree after alignment."""
    if base_a.pixels.shape != base_b.pixels.shape:
        raise RasterError(f"drift check needs equal sizes: {base_a.pixels.shape} vs {base_b.pixels.shape}")
    a, b = _packed(base_a), _packed(base_b)
    dx, dy = register_shift(a, b, max_shift)
    bad = tuple(i for i, r in enumerate(regions) if _region_agreement(a, b, r.bbox_px, dx, dy) < agreement_min)
    fraction = len(bad) / len(regions) if regions else 0.0
    return DriftReport((dx, dy), fraction, fraction > exclude_fraction, bad)


class ScanClass(str, Enum):
    SCANNED = "scanned"
    RENDERED_TEXT = "rendered_text"
    INDETERMINATE = "indeterminate"


def grayscale_entropy(page: RasterPage) -> float:
    """Shannon entropy (bits) of the 256-bin grayscale histogram."""
    hist = np.bincount(page.gray().ravel(), minlength=256).astype(np.float64)
    p = hist[hist > 0] / hist.sum()
    return float(-(p * np.log2(p)).sum())


def classify_scanned(page: RasterPage, scanned_above: float = SCANNED_ENTROPY,
                     rendered_below: float = RENDERED_ENTROPY) -> ScanClass:
    h = grayscale_entropy(page)
    if h > scanned_above:
        return ScanClass.SCANNED
    if h < rendered_below:
        return ScanClass.RENDERED_TEXT
    return ScanClass.INDETERMINATE
