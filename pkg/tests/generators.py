"""Seeded random fixtures: document IRs and annotated pages."""

from __future__ import annotations

import random

from docanno.align import AnnotatedPage, PageComponent
from docanno.docmodel import Component, ComponentKind, DocumentIR, Provenance, TableCell, TableGrid, TextRun

WORDS = ("annual report budget section results method sample value total index growth region market "
         "policy figure data model review summary update plan field level range note unit cost rate").split()

TEXT_KINDS = (ComponentKind.TEXT, ComponentKind.TEXT, ComponentKind.SECTION_HEADER, ComponentKind.TITLE,
              ComponentKind.LIST_ITEM, ComponentKind.FOOTNOTE, ComponentKind.CODE, ComponentKind.FORMULA,
              ComponentKind.PAGE_HEADER, ComponentKind.CAPTION)
MIXED_KINDS = TEXT_KINDS + (ComponentKind.TABLE, ComponentKind.PICTURE, ComponentKind.CHART)


def sentence(rng: random.Random, lo: int = 3, hi: int = 20) -> str:
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(lo, hi)))


def random_grid(rng: random.Random, spans: bool = True) -> TableGrid:
    n_rows, n_cols = rng.randint(2, 4), rng.randint(2, 4)
    taken = set()
    cells = []
    for r in range(n_rows):
        for c in range(n_cols):
            if (r, c) in taken:
                continue
            cs = rs = 1
            if spans and rng.random() < 0.15:
                cs = rng.randint(1, n_cols - c)
                rs = rng.randint(1, n_rows - r)
                if any((rr, cc) in taken for rr in range(r, r + rs) for cc in range(c, c + cs)):
                    cs = rs = 1
            for rr in range(r, r + rs):
                for cc in range(c, c + cs):
                    taken.add((rr, cc))
            cells.append(TableCell(r, c, sentence(rng, 1, 3), cs, rs))
    return TableGrid(n_rows, n_cols, tuple(cells))


def random_component(rng: random.Random, kind: ComponentKind, order: int) -> Component:
    prov = rng.choice(list(Provenance))
    if kind is ComponentKind.TABLE:
        return Component(kind, prov, order, table_grid=random_grid(rng))
    if kind in (ComponentKind.PICTURE, ComponentKind.CHART):
        attrs = {"width_pt": float(rng.randint(80, 400)), "height_pt": float(rng.randint(30, 110))}
        return Component(kind, prov, order, attrs=attrs)
    size = rng.choice((9.0, 10.0, 11.0, 12.0, 14.0))
    runs = [TextRun(sentence(rng), size, bold=kind in (ComponentKind.TITLE, ComponentKind.SECTION_HEADER))]
    if rng.random() < 0.3:
        runs.append(TextRun(" " + sentence(rng, 1, 6), size))
    return Component(kind, prov, order, text_runs=tuple(runs))


def random_ir(rng: random.Random, max_pages: int = 3, per_page: tuple[int, int] = (2, 5),
              kinds=MIXED_KINDS) -> DocumentIR:
    """1..max_pages explicit pages, each small enough to never overflow a letter page."""
    comps, breaks = [], []
    for p in range(rng.randint(1, max_pages)):
        if p:
            breaks.append(len(comps))
        for _ in range(rng.randint(*per_page)):
            comps.append(random_component(rng, rng.choice(kinds), len(comps)))
    return DocumentIR(tuple(comps), tuple(breaks), language_hint="en")


def random_page(rng: random.Random, n: int | None = None, kinds=None) -> AnnotatedPage:
    kinds = kinds or list(ComponentKind)
    n = rng.randint(0, 8) if n is None else n
    comps = []
    for i in range(n):
        x1, y1 = rng.uniform(0, 500), rng.uniform(0, 700)
        comps.append(PageComponent(rng.choice(kinds), (x1, y1, x1 + rng.uniform(1, 100), y1 + rng.uniform(1, 80)),
                                   sentence(rng, 0, 8), rng.choice((1.0, 0.8, 0.5)), i, i,
                                   rng.choice((None, 10.0, 12.0))))
    return AnnotatedPage(comps, (612.0, 792.0), "en")


def clean_ir(rng: random.Random, pages: int = 1) -> DocumentIR:
    """Native-tagged pages with enough ink to pass the blank-area check."""
    comps, breaks = [], []
    for p in range(pages):
        if p:
            breaks.append(len(comps))
        comps.append(Component(ComponentKind.SECTION_HEADER, Provenance.NATIVE_TAG, len(comps),
                               (TextRun(sentence(rng, 2, 5), 16.0, bold=True),)))
        comps.append(Component(ComponentKind.TEXT, Provenance.NATIVE_TAG, len(comps),
                               (TextRun(sentence(rng, 30, 60), 11.0),)))
        comps.append(Component(ComponentKind.TABLE, Provenance.NATIVE_TAG, len(comps),
                               table_grid=random_grid(rng, spans=False)))
        comps.append(Component(ComponentKind.PICTURE, Provenance.NATIVE_TAG, len(comps),
                               attrs={"width_pt": 420.0, "height_pt": 140.0}))
    return DocumentIR(tuple(comps), tuple(breaks), language_hint="en")


TRICKY = "ab <>&;/ \n\téא中$|#"


def random_doctag_page(rng: random.Random, max_elements: int = 8, tricky: bool = True):
    from docanno.doctag import DocTagElement, DocTagPage

    elements = []
    for _ in range(rng.randint(0, max_elements)):
        kind = rng.choice(list(ComponentKind))
        x1, y1 = rng.randrange(1000), rng.randrange(1000)
        loc = (x1, y1, rng.randrange(x1, 1000), rng.randrange(y1, 1000))
        if tricky:
            content = "".join(rng.choice(TRICKY) for _ in range(rng.randint(0, 12)))
            if rng.random() < 0.2:
                content = rng.choice(["&lt;", "&amp;", "&amp;lt;", "<loc_3>", "</text>", "a &b <c"])
        else:
            content = sentence(rng, 1, 12)
        elements.append(DocTagElement(kind, loc, content))
    return DocTagPage(elements)


GT_KINDS = (ComponentKind.TITLE, ComponentKind.SECTION_HEADER, ComponentKind.TEXT, ComponentKind.TEXT,
            ComponentKind.LIST_ITEM, ComponentKind.FORMULA, ComponentKind.TABLE, ComponentKind.PAGE_HEADER,
            ComponentKind.PAGE_FOOTER, ComponentKind.CAPTION, ComponentKind.FOOTNOTE, ComponentKind.CODE)


def random_gt_page(rng: random.Random, n: int | None = None):
    """Ground-truth DocTag page with headings, lists, formulas, and HTML tables."""
    from docanno.doctag import DocTagElement, DocTagPage

    elements = []
    y = 0
    for _ in range(rng.randint(1, 8) if n is None else n):
        kind = rng.choice(GT_KINDS)
        if kind is ComponentKind.TABLE:
            content = random_grid(rng).to_html()
        elif kind is ComponentKind.FORMULA:
            content = rng.choice(["x^2 + y^2 = z^2", "\\alpha + \\beta", "\\sum_{i=1}^{n} i", "E = m c^2"])
        else:
            content = sentence(rng, 1, 15)
        h = rng.randint(10, 60)
        elements.append(DocTagElement(kind, (50, min(y, 998), 950, min(y + h, 999)), content))
        y += h + 5
    return DocTagPage(elements, (612.0, 792.0))
