"""Structure recovery from the OpenXML-like package dialect (see docs/ir-dialect.md)."""

from __future__ import annotations

import io
import logging
import re
import statistics
import zipfile
import xml.etree.ElementTree as ET
from dataclasses import replace

from .ir import Component, DocumentIR, TableCell, TableGrid, TextRun
from .kinds import ComponentKind, Provenance
from .repair import RepairError, repair_markup

log = logging.getLogger(__name__)

W = "http://schemas.openxmlformats.org/wordprocessingml/2006/main"
M = "http://schemas.openxmlformats.org/officeDocument/2006/math"
NSMAP = {"w": W, "m": M}

DOCUMENT_PARTS = ("word/document.xml", "document.xml")
DEFAULT_FONT_PT = 11.0
HEADING_RATIO = 1.5

LIST_MARKER = re.compile(r"^\s*(•|-|\*|\d+\.|\d+\)|[a-z]\)|[a-z]\.)\s+")
FIGURE_PREFIX = re.compile(r"^\s*(figure|fig\.)\s*\d+", re.I)
TABLE_PREFIX = re.compile(r"^\s*table\s*\d+", re.I)

STYLE_KINDS = {
    "title": ComponentKind.TITLE,
    "subtitle": ComponentKind.SECTION_HEADER,
    "listparagraph": ComponentKind.LIST_ITEM,
    "listbullet": ComponentKind.LIST_ITEM,
    "listnumber": ComponentKind.LIST_ITEM,
    "caption": ComponentKind.FIGURE_CAPTION,
    "tablecaption": ComponentKind.TABLE_CAPTION,
    "figurecaption": ComponentKind.FIGURE_CAPTION,
    "code": ComponentKind.CODE,
    "sourcecode": ComponentKind.CODE,
    "htmlpreformatted": ComponentKind.CODE,
    "bibliography": ComponentKind.BIBLIOGRAPHY,
    "footnotetext": ComponentKind.FOOTNOTE,
    "header": ComponentKind.PAGE_HEADER,
    "footer": ComponentKind.PAGE_FOOTER,
    "equation": ComponentKind.FORMULA,
    "abstract": ComponentKind.ABSTRACT,
}

NATIVE_CONTAINERS = {
    "hdr": ComponentKind.PAGE_HEADER,
    "ftr": ComponentKind.PAGE_FOOTER,
    "footnote": ComponentKind.FOOTNOTE,
    "sdt": ComponentKind.FORM_TAG,
}


class ParseError(ValueError):
    """The package cannot be read, or its markup is beyond repair."""


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1] if "}" in tag else tag.split(":")[-1]


def _attr(el: ET.Element, name: str, default=None):
    for key, val in el.attrib.items():
        if _local(key) == name:
            return val
    return default


def _child(el: ET.Element, name: str) -> ET.Element | None:
    for c in el:
        if _local(c.tag) == name:
            return c
    return None


def _read_body(markup: bytes) -> tuple[ET.Element, bool, tuple[str, ...]]:
    try:
        with zipfile.ZipFile(io.BytesIO(markup)) as zf:
            names = set(zf.namelist())
            part = next((p for p in DOCUMENT_PARTS if p in names), None)
            if part is None:
                raise ParseError("package has no document part")
            raw = zf.read(part)
    except (zipfile.BadZipFile, zipfile.LargeZipFile, EOFError, OSError) as exc:
        raise ParseError(f"unreadable archive: {exc}") from exc
    try:
        return ET.fromstring(raw), False, ()
    except ET.ParseError:
        pass
    try:
        fixed = repair_markup(raw.decode("utf-8", errors="replace"))
        root = ET.fromstring(fixed.repaired_xml)
    except (RepairError, ET.ParseError) as exc:
        raise ParseError(f"unrecoverable markup: {exc}") from exc
    log.info("markup repaired: %s", ", ".join(fixed.actions))
    return root, True, tuple(fixed.actions)


def _runs(el: ET.Element) -> tuple[list[TextRun], bool]:
    """Collect text runs under a paragraph-like element; also report page breaks."""
    runs: list[TextRun] = []
    page_break = False
    for r in el.iter():
        tag = _local(r.tag)
        if tag == "br" and _attr(r, "type") == "page":
            page_break = True
        if tag != "r":
            continue
        rpr = _child(r, "rPr")
        size = DEFAULT_FONT_PT
        bold = False
        if rpr is not None:
            sz = _child(rpr, "sz")
            if sz is not None and _attr(sz, "val"):
                size = float(_attr(sz, "val")) / 2.0
            b = _child(rpr, "b")
            bold = b is not None and _attr(b, "val", "1") not in ("0", "false")
        text = "".join(t.text or "" for t in r.iter() if _local(t.tag) in ("t", "tab"))
        if text:
            runs.append(TextRun(text, size, bold))
    return runs, page_break


def _plain_text(el: ET.Element) -> str:
    return "".join(t.text or "" for t in el.iter() if _local(t.tag) == "t" and t.text)


def _graphic_attrs(el: ET.Element) -> dict:
    out = {}
    for key in ("width", "height", "color", "image", "anchor", "seed"):
        v = _attr(el, key)
        if v is None:
            continue
        out[key if key not in ("width", "height") else f"{key}_pt"] = (
            float(v) if key in ("width", "height") else int(v) if key == "seed" else v
        )
    return out


def _table(el: ET.Element) -> TableGrid:
    cells: list[TableCell] = []
    occupied: set[tuple[int, int]] = set()
    n_cols = 0
    rows = [tr for tr in el if _local(tr.tag) == "tr"]
    for r, tr in enumerate(rows):
        c = 0
        for tc in tr:
            if _local(tc.tag) != "tc":
                continue
            while (r, c) in occupied:
                c += 1
            pr = _child(tc, "tcPr")
            colspan = rowspan = 1
            if pr is not None:
                gs, rs = _child(pr, "gridSpan"), _child(pr, "rowSpan")
                colspan = int(_attr(gs, "val", 1)) if gs is not None else 1
                rowspan = int(_attr(rs, "val", 1)) if rs is not None else 1
            runs, _ = _runs(tc)
            size = runs[0].font_size_pt if runs else 10.0
            cells.append(TableCell(r, c, "".join(x.text for x in runs), max(colspan, 1), max(rowspan, 1), size))
            for dr in range(max(rowspan, 1)):
                for dc in range(max(colspan, 1)):
                    occupied.add((r + dr, c + dc))
            c += max(colspan, 1)
            n_cols = max(n_cols, c)
    n_rows = max([len(rows)] + [cell.row + cell.rowspan for cell in cells])
    return TableGrid(max(n_rows, 1), max(n_cols, 1), tuple(cells))


def _classify_paragraph(p: ET.Element, runs: list[TextRun], median: float):
    ppr = _child(p, "pPr")
    if ppr is not None:
        style = _child(ppr, "pStyle")
        if _child(ppr, "outlineLvl") is not None:
            lvl = int(_attr(_child(ppr, "outlineLvl"), "val", 0)) + 1
            return ComponentKind.SECTION_HEADER, Provenance.NATIVE_TAG, {"level": lvl}
        if _child(ppr, "numPr") is not None:
            return ComponentKind.LIST_ITEM, Provenance.NATIVE_TAG, {}
        if style is not None:
            name = (_attr(style, "val") or "").lower().replace(" ", "")
            m = re.fullmatch(r"heading(\d)", name)
            if m:
                return ComponentKind.SECTION_HEADER, Provenance.BUILTIN_STYLE, {"level": int(m.group(1))}
            if name in STYLE_KINDS:
                return STYLE_KINDS[name], Provenance.BUILTIN_STYLE, {}
    text = "".join(r.text for r in runs)
    if LIST_MARKER.match(text):
        return ComponentKind.LIST_ITEM, Provenance.HEURISTIC, {}
    if FIGURE_PREFIX.match(text):
        return ComponentKind.FIGURE_CAPTION, Provenance.HEURISTIC, {}
    if TABLE_PREFIX.match(text):
        return ComponentKind.TABLE_CAPTION, Provenance.HEURISTIC, {}
    if runs and max(r.font_size_pt for r in runs) >= HEADING_RATIO * median:
        return ComponentKind.SECTION_HEADER, Provenance.HEURISTIC, {"level": 1}
    return ComponentKind.TEXT, Provenance.NATIVE_TAG, {}


def _median_font(body: ET.Element) -> float:
    sizes: list[float] = []
    for p in body.iter():
        if _local(p.tag) == "p":
            runs, _ = _runs(p)
            for r in runs:
                sizes.extend([r.font_size_pt] * len(r.text))
    return statistics.median(sizes) if sizes else DEFAULT_FONT_PT


def _mark_list(runs: list[TextRun]) -> list[TextRun]:
    if not runs:
        return runs
    m = LIST_MARKER.match(runs[0].text)
    if m:
        return [replace(runs[0], list_marker=m.group(1))] + runs[1:]
    return runs


def parse_structure(markup: bytes) -> DocumentIR:
    """Recover a ``DocumentIR`` from a zipped dialect package."""
    root, repaired, actions = _read_body(markup)
    body = root if _local(root.tag) == "body" else _child(root, "body")
    if body is None:
        raise ParseError("document has no body")
    lang = _attr(root, "lang") or _attr(body, "lang")
    median = _median_font(body)

    raw: list[tuple[ComponentKind, Provenance, list[TextRun], TableGrid | None, dict]] = []
    breaks: list[int] = []

    for el in body:
        tag = _local(el.tag)
        if tag == "p":
            runs, page_break = _runs(el)
            if runs:
                kind, prov, attrs = _classify_paragraph(el, runs, median)
                if kind is ComponentKind.LIST_ITEM:
                    runs = _mark_list(runs)
                raw.append((kind, prov, runs, None, attrs))
            if page_break:
                breaks.append(len(raw))
        elif tag == "tbl":
            raw.append((ComponentKind.TABLE, Provenance.NATIVE_TAG, [], _table(el), {}))
        elif tag in ("drawing", "pict"):
            raw.append((ComponentKind.PICTURE, Provenance.NATIVE_TAG, [], None, _graphic_attrs(el)))
        elif tag == "chart":
            raw.append((ComponentKind.CHART, Provenance.NATIVE_TAG, [], None, _graphic_attrs(el)))
        elif tag in ("oMathPara", "oMath"):
            text = _plain_text(el)
            if text:
                raw.append((ComponentKind.FORMULA, Provenance.NATIVE_TAG, [TextRun(text, median)], None, {}))
        elif tag in NATIVE_CONTAINERS:
            runs, _ = _runs(el)
            if runs:
                raw.append((NATIVE_CONTAINERS[tag], Provenance.NATIVE_TAG, runs, None, {}))
        elif tag in ("sectPr", "bookmarkStart", "bookmarkEnd"):
            continue
        else:
            runs, _ = _runs(el)
            text = _plain_text(el) if not runs else None
            if text:
                runs = [TextRun(text, median)]
            if runs:
                raw.append((ComponentKind.TEXT, Provenance.HEURISTIC, runs, None, {}))

    # captions: styled "Caption" next to a table refers to the table
    comps: list[Component] = []
    for i, (kind, prov, runs, grid, attrs) in enumerate(raw):
        if kind is ComponentKind.FIGURE_CAPTION and prov is Provenance.BUILTIN_STYLE:
            neighbors = [raw[j][0] for j in (i - 1, i + 1) if 0 <= j < len(raw)]
            if ComponentKind.TABLE in neighbors and ComponentKind.PICTURE not in neighbors:
                kind = ComponentKind.TABLE_CAPTION
        comps.append(Component(kind, prov, i, tuple(runs), grid, None, attrs))

    breaks = sorted({b for b in breaks if 0 < b < len(comps)})
    return DocumentIR(tuple(comps), tuple(breaks), lang, repaired, actions)
