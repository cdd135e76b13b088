"""Pixel-wise differencing of render pairs and per-category region extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..docmodel.kinds import ComponentKind
from ..docmodel.palette import ColorPalette
from .raster import RasterError, RasterPage

DEFAULT_THRESHOLD = 12
DEFAULT_MIN_AREA = 9
NONE = -1


@dataclass
class ChangeMask:
    """Per-pixel palette index (``NONE`` where the pair agrees)."""

    labels: np.ndarray  # int16, (H, W)
    error: np.ndarray  # float32 distance to the assigned palette color

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @classmethod
    def from_labels(cls, labels: np.ndarray) -> "ChangeMask":
        labels = np.asarray(labels, dtype=np.int16)
        return cls(labels, np.zeros(labels.shape, dtype=np.float32))


@dataclass(frozen=True)
class RegionDetection:
    kind: ComponentKind
    bbox_px: tuple[int, int, int, int]  # x2/y2 exclusive
    area_px: int
    mean_color_error: float
    palette_index: int = NONE

    def bbox_pt(self, dpi: int) -> tuple[float, float, float, float]:
        s = 72.0 / dpi
        return tuple(v * s for v in self.bbox_px)


def _pack(rgb: np.ndarray) -> np.ndarray:
    rgb = rgb.astype(np.int64)
    return (rgb[..., 0] << 16) | (rgb[..., 1] << 8) | rgb[..., 2]


def nearest_palette(colors: np.ndarray, table: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of the nearest palette color for each row of ``colors`` (ties -> lowest index)."""
    n = colors.shape[0]
    idx = np.empty(n, dtype=np.int16)
    err = np.zeros(n, dtype=np.float32)
    if n == 0:
        return idx, err
    packed = _pack(colors)
    ptab = _pack(table)
    order = np.argsort(ptab, kind="stable")
    sorted_tab = ptab[order]
    pos = np.clip(np.searchsorted(sorted_tab, packed), 0, len(sorted_tab) - 1)
    exact = sorted_tab[pos] == packed
    idx[exact] = order[pos[exact]]
    rest = np.nonzero(~exact)[0]
    if rest.size:
        uniq, inverse = np.unique(packed[rest], return_inverse=True)
        u_rgb = np.stack([(uniq >> 16) & 255, (uniq >> 8) & 255, uniq & 255], axis=1).astype(np.float64)
        d = np.sqrt(((u_rgb[:, None, :] - table[None, :, :].astype(np.float64)) ** 2).sum(axis=2))
        best = np.argmin(d, axis=1)  # argmin returns the first minimum
        idx[rest] = best[inverse]
        err[rest] = d[np.arange(len(uniq)), best][inverse]
    return idx, err


def diff_pages(base: RasterPage, colorized: RasterPage, palette: ColorPalette,
               threshold: int = DEFAULT_THRESHOLD) -> ChangeMask:
    """Label pixels whose max-channel difference exceeds ``threshold``."""
    if base.pixels.shape != colorized.pixels.shape or base.dpi != colorized.dpi:
        raise RasterError(
            f"render pair mismatch: {base.pixels.shape}@{base.dpi} vs {colorized.pixels.shape}@{colorized.dpi}"
        )
    changed = np.zeros(base.pixels.shape[:2], dtype=bool)
    for ch in range(3):
        # per-channel planes avoid a slow reduction over the last axis
        a = base.pixels[..., ch].astype(np.int16)
        b = colorized.pixels[..., ch].astype(np.int16)
        changed |= np.abs(a - b) > threshold
    labels = np.full(changed.shape, NONE, dtype=np.int16)
    error = np.zeros(changed.shape, dtype=np.float32)
    if changed.any():
        table = np.asarray(palette.rgb_table(), dtype=np.int64)
        idx, err = nearest_palette(colorized.pixels[changed], table)
        labels[changed] = idx
        error[changed] = err
    return ChangeMask(labels, error)


def _runs(labels: np.ndarray):
    """Horizontal runs of equal, non-NONE labels: (row, start, end, label) arrays."""
    H, W = labels.shape
    change = np.ones((H, W), dtype=bool)
    change[:, 1:] = labels[:, 1:] != labels[:, :-1]
    rows, starts = np.nonzero(change)
    nxt_rows = np.append(rows[1:], H)
    nxt_starts = np.append(starts[1:], W)
    ends = np.where(nxt_rows == rows, nxt_starts, W)
    lab = labels[rows, starts]
    keep = lab != NONE
    return rows[keep], starts[keep], ends[keep], lab[keep]


def connected_components(labels: np.ndarray):
    """8-connected components of equal labels.

    Returns one entry per component: (label, x1, y1, x2, y2, area, run_ids)
    where x2/y2 are exclusive.
    """
    rows, starts, ends, lab = _runs(labels)
    n = len(rows)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    row_l, s_l, e_l, lab_l = rows.tolist(), starts.tolist(), ends.tolist(), lab.tolist()
    H = labels.shape[0]
    bounds = np.searchsorted(rows, np.arange(H + 1)).tolist()
    for r in range(H - 1):
        j0, j_end = bounds[r + 1], bounds[r + 2]
        if j0 == j_end:
            continue
        for i in range(bounds[r], bounds[r + 1]):
            # 8-connectivity: runs touch if they overlap after widening by one pixel
            while j0 < j_end and e_l[j0] < s_l[i]:
                j0 += 1
            j = j0
            while j < j_end and s_l[j] <= e_l[i]:
                if lab_l[i] == lab_l[j]:
                    ri, rj = find(i), find(j)
                    if ri != rj:
                        parent[max(ri, rj)] = min(ri, rj)
                j += 1

    comps: dict[int, list] = {}
    for k in range(n):
        root = find(k)
        c = comps.get(root)
        if c is None:
            comps[root] = [lab_l[k], s_l[k], row_l[k], e_l[k], row_l[k] + 1, e_l[k] - s_l[k], [k]]
        else:
            c[1] = min(c[1], s_l[k])
            c[2] = min(c[2], row_l[k])
            c[3] = max(c[3], e_l[k])
            c[4] = max(c[4], row_l[k] + 1)
            c[5] += e_l[k] - s_l[k]
            c[6].append(k)
    return [tuple(c) for c in comps.values()], (rows, starts, ends)


def extract_regions(mask: ChangeMask, palette: ColorPalette,
                    min_area: int = DEFAULT_MIN_AREA) -> list[RegionDetection]:
    """One detection per 8-connected same-label component of at least ``min_area`` pixels."""
    comps, (rows, starts, ends) = connected_components(mask.labels)
    if not comps:
        return []
    csum = np.zeros((mask.height, mask.width + 1), dtype=np.float64)
    np.cumsum(mask.error, axis=1, out=csum[:, 1:])
    out = []
    for label, x1, y1, x2, y2, area, run_ids in comps:
        if area < min_area:
            continue
        ids = np.asarray(run_ids)
        total = float((csum[rows[ids], ends[ids]] - csum[rows[ids], starts[ids]]).sum())
        out.append(RegionDetection(palette.kind_at(int(label)), (int(x1), int(y1), int(x2), int(y2)),
                                   int(area), total / area, int(label)))
    out.sort(key=lambda d: (d.bbox_px[1], d.bbox_px[0], d.kind.value))
    return out
