"""Deterministic vertical-flow renderer used as the hermetic default.

Text becomes solid glyph blocks, tables ruled grids with open corners (so a
background fill stays one connected region), pictures and charts opaque
rectangles in their own colors. Layout is snapped to the device pixel grid and
the renderer reports the exact boxes it drew.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..align import WordBox
from ..docmodel.ir import Component, DocumentIR
from ..docmodel.kinds import ComponentKind
from ..docmodel.palette import ColorPalette
from .raster import SUPPORTED_DPI, RasterError, RasterPage, page_pixels

log = logging.getLogger(__name__)

LETTER_PT = (612.0, 792.0)
MARGIN_PT = 54.0
GAP_PT = 6.0
PAD_PT = 3.0
GLYPH = (64, 64, 64)
GLYPH_BOLD = (24, 24, 24)
RULE = (96, 96, 96)
PICTURE_COLOR = (70, 130, 180)
CHART_BG = (236, 236, 228)
CHART_BARS = ((200, 80, 60), (60, 150, 90), (90, 90, 200), (210, 170, 40))
DEFAULT_GRAPHIC_HEIGHT_PT = 100.0


@dataclass(frozen=True)
class RenderedBox:
    source_order: int
    kind: ComponentKind
    bbox_px: tuple[int, int, int, int]
    bbox_pt: tuple[float, float, float, float]


@dataclass
class RenderResult:
    pages: list[RasterPage]
    boxes: list[list[RenderedBox]]
    words: list[list[WordBox]]
    # source_order of the component each word belongs to, parallel to ``words``
    word_owner: list[list[int]]
    warnings: list[str] = field(default_factory=list)


@dataclass
class _Op:
    kind: str  # "rect" | "noise"
    x1: int
    y1: int
    x2: int
    y2: int
    color: tuple[int, int, int] = (0, 0, 0)
    seed: int = 0
    word: str | None = None


def _parse_color(value, default):
    if not value:
        return default
    v = str(value).lstrip("#")
    try:
        return tuple(int(v[i:i + 2], 16) for i in (0, 2, 4))
    except ValueError:
        return default


class _Layout:
    def __init__(self, dpi: int):
        self.s = dpi / 72.0

    def px(self, pt: float) -> int:
        return int(round(pt * self.s))

    def text(self, words: list[tuple[str, float, bool]], x0: int, y0: int, width: int) -> tuple[list[_Op], int]:
        """Flow words into lines; return ops relative to the page and the height used."""
        ops: list[_Op] = []
        lines: list[list[tuple[str, float, bool, int]]] = [[]]
        used = 0
        for word, size, bold in words:
            w = max(1, min(width, self.px(0.5 * size * len(word))))
            space = max(1, self.px(0.3 * size))
            if lines[-1] and used + space + w > width:
                lines.append([])
                used = 0
            if lines[-1]:
                used += space
            lines[-1].append((word, size, bold, used))
            used += w
        y = y0
        for line in lines:
            if not line:
                continue
            top = max(size for _, size, _, _ in line)
            for word, size, bold, x in line:
                w = max(1, min(width - x, self.px(0.5 * size * len(word))))
                h = max(1, self.px(size))
                off = max(1, self.px(0.1 * top))
                ops.append(_Op("rect", x0 + x, y + off, x0 + x + w, y + off + h,
                               GLYPH_BOLD if bold else GLYPH, word=word))
            y += max(self.px(1.2 * top), self.px(top) + 2)
        return ops, y - y0


def _words_of(comp: Component) -> list[tuple[str, float, bool]]:
    out = []
    for run in comp.text_runs:
        for w in run.text.split():
            out.append((w, run.font_size_pt, run.bold))
    return out


def _table_ops(comp: Component, lay: _Layout, x0: int, y0: int, width: int) -> tuple[list[_Op], int]:
    grid = comp.table_grid
    col_w = max(4, width // grid.n_cols)
    cell_pad = max(3, lay.px(2.0))
    gap = 2
    needed = [0] * grid.n_rows
    cell_text = {}
    for cell in grid.cells:
        cw = col_w * cell.colspan - 2 * cell_pad
        words = [(w, cell.font_size_pt, False) for w in cell.text.split()]
        ops, h = lay.text(words, 0, 0, max(1, cw))
        cell_text[(cell.row, cell.col)] = words
        h = max(h, lay.px(1.2 * cell.font_size_pt)) + 2 * cell_pad
        if cell.rowspan == 1:
            needed[cell.row] = max(needed[cell.row], h)
    heights = [max(h, lay.px(14.0)) for h in needed]
    for cell in grid.cells:
        if cell.rowspan > 1:
            cw = col_w * cell.colspan - 2 * cell_pad
            _, h = lay.text(cell_text[(cell.row, cell.col)], 0, 0, max(1, cw))
            h = max(h, lay.px(1.2 * cell.font_size_pt)) + 2 * cell_pad
            span = sum(heights[cell.row:cell.row + cell.rowspan])
            if span < h:
                heights[cell.row + cell.rowspan - 1] += h - span
    row_y = [y0]
    for h in heights:
        row_y.append(row_y[-1] + h)

    ops: list[_Op] = []
    for cell in sorted(grid.cells, key=lambda c: (c.row, c.col)):
        cx1, cx2 = x0 + cell.col * col_w, x0 + (cell.col + cell.colspan) * col_w
        cy1, cy2 = row_y[cell.row], row_y[cell.row + cell.rowspan]
        # 1px borders that stop short of every corner
        ops.append(_Op("rect", cx1 + gap + 1, cy1, cx2 - gap, cy1 + 1, RULE))
        ops.append(_Op("rect", cx1 + gap + 1, cy2, cx2 - gap, cy2 + 1, RULE))
        ops.append(_Op("rect", cx1, cy1 + gap + 1, cx1 + 1, cy2 - gap, RULE))
        ops.append(_Op("rect", cx2, cy1 + gap + 1, cx2 + 1, cy2 - gap, RULE))
        words = cell_text[(cell.row, cell.col)]
        t_ops, _ = lay.text(words, cx1 + cell_pad, cy1 + cell_pad, max(1, cx2 - cx1 - 2 * cell_pad))
        ops.extend(t_ops)
    return ops, row_y[-1] - y0 + 1


def _graphic_ops(comp: Component, lay: _Layout, x0: int, y0: int, width: int) -> tuple[list[_Op], int]:
    w = min(width, lay.px(float(comp.attrs.get("width_pt", width / lay.s))))
    h = max(1, lay.px(float(comp.attrs.get("height_pt", DEFAULT_GRAPHIC_HEIGHT_PT))))
    seed = int(comp.attrs.get("seed", comp.source_order))
    if comp.attrs.get("image") == "noise":
        return [_Op("noise", x0, y0, x0 + w, y0 + h, seed=seed)], h
    if comp.kind is ComponentKind.CHART:
        ops = [_Op("rect", x0, y0, x0 + w, y0 + h, _parse_color(comp.attrs.get("color"), CHART_BG))]
        n = 4
        bw = max(1, w // (2 * n + 1))
        for i in range(n):
            bh = max(1, h * (2 + (seed + i * 3) % 7) // 10)
            bx = x0 + bw * (2 * i + 1)
            ops.append(_Op("rect", bx, y0 + h - bh, bx + bw, y0 + h, CHART_BARS[i % len(CHART_BARS)]))
        return ops, h
    return [_Op("rect", x0, y0, x0 + w, y0 + h, _parse_color(comp.attrs.get("color"), PICTURE_COLOR))], h


def _draw(canvas: np.ndarray, op: _Op) -> None:
    H, W = canvas.shape[:2]
    x1, y1, x2, y2 = max(op.x1, 0), max(op.y1, 0), min(op.x2, W), min(op.y2, H)
    if x1 >= x2 or y1 >= y2:
        return
    if op.kind == "noise":
        rng = np.random.default_rng(op.seed)
        g = rng.integers(0, 256, size=(y2 - y1, x2 - x1), dtype=np.uint8)
        canvas[y1:y2, x1:x2] = g[..., None]
    else:
        canvas[y1:y2, x1:x2] = op.color


def toy_render(
    ir: DocumentIR,
    dpi: int,
    colorize: ColorPalette | None = None,
    page_size_pt: tuple[float, float] = LETTER_PT,
) -> RenderResult:
    """Render ``ir`` to pages; with ``colorize`` each component box is filled by kind.

    Without a palette, fills already attached to components (see
    ``inject_colors``) are honored.
    """
    if dpi not in SUPPORTED_DPI:
        raise RasterError(f"dpi must be one of {SUPPORTED_DPI}, got {dpi}")
    if page_size_pt[0] <= 0 or page_size_pt[1] <= 0:
        raise RasterError(f"zero-size page {page_size_pt}")
    lay = _Layout(dpi)
    W, H = page_pixels(page_size_pt[0], dpi), page_pixels(page_size_pt[1], dpi)
    margin, gap, pad = lay.px(MARGIN_PT), lay.px(GAP_PT), max(1, lay.px(PAD_PT))
    content_w = W - 2 * margin
    bottom = H - margin
    if content_w <= 2 * pad or bottom - margin <= 2 * pad:
        raise RasterError("page too small for margins")

    result = RenderResult([], [], [], [])
    breaks = set(ir.page_breaks)

    def new_page():
        result.pages.append(RasterPage.blank(page_size_pt, dpi))
        result.boxes.append([])
        result.words.append([])
        result.word_owner.append([])

    new_page()
    y = margin
    for idx, comp in enumerate(ir.components):
        if idx in breaks and result.boxes[-1]:
            new_page()
            y = margin
        if comp.is_empty:
            continue
        fill = colorize[comp.kind] if colorize is not None else comp.fill
        full_page = comp.kind in (ComponentKind.PICTURE, ComponentKind.CHART) and comp.attrs.get("anchor") == "page"

        if full_page:
            if result.boxes[-1]:
                new_page()
            box = (0, 0, W, H)
            ops = [_Op("noise" if comp.attrs.get("image") == "noise" else "rect", 0, 0, W, H,
                       _parse_color(comp.attrs.get("color"), PICTURE_COLOR),
                       seed=int(comp.attrs.get("seed", comp.source_order)))]
            y = H
        else:
            inner_x = margin + pad
            inner_w = content_w - 2 * pad
            if comp.kind is ComponentKind.TABLE:
                ops, h = _table_ops(comp, lay, inner_x, 0, inner_w)
            elif comp.kind in (ComponentKind.PICTURE, ComponentKind.CHART):
                ops, h = _graphic_ops(comp, lay, inner_x, 0, inner_w)
            else:
                ops, h = lay.text(_words_of(comp), inner_x, 0, inner_w)
            if not ops:
                continue
            box_h = h + 2 * pad
            if y + box_h > bottom and result.boxes[-1]:
                new_page()
                y = margin
            if y + box_h > bottom:
                # alone on a fresh page and still too tall: clip to the content area
                avail = bottom - y - 2 * pad
                kept = [o for o in ops if o.y2 <= avail]
                result.warnings.append(
                    f"component {comp.source_order} taller than a page; dropped {len(ops) - len(kept)} ops")
                if not kept:
                    continue
                ops = kept
                box_h = max(o.y2 for o in ops) + 2 * pad
            x1 = margin
            x2 = margin + content_w
            if comp.kind in (ComponentKind.PICTURE, ComponentKind.CHART):
                x2 = max(o.x2 for o in ops) + pad
            box = (x1, y, x2, y + box_h)
            for o in ops:
                o.y1 += y + pad
                o.y2 += y + pad
            y += box_h + gap

        canvas = result.pages[-1].pixels
        if fill is not None:
            canvas[box[1]:box[3], box[0]:box[2]] = fill
        for o in ops:
            _draw(canvas, o)
            if o.word is not None:
                page_words = result.words[-1]
                page_words.append(WordBox(o.word, (o.x1 / lay.s, o.y1 / lay.s, o.x2 / lay.s, o.y2 / lay.s),
                                          len(page_words)))
                result.word_owner[-1].append(comp.source_order)
        bbox_pt = tuple(v / lay.s for v in box)
        result.boxes[-1].append(RenderedBox(comp.source_order, comp.kind, box, bbox_pt))

    return result
