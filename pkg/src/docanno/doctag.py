"""DocTag flat-tag serialization plus JSON / Markdown / HTML views."""

from __future__ import annotations

import html
import json
import logging
import math
import re
from dataclasses import dataclass, field
from html.parser import HTMLParser

from .align import AnnotatedPage
from .docmodel.kinds import ComponentKind

log = logging.getLogger(__name__)

DOCTAG_VERSION = 1
LOC_BINS = 1000
OPEN, CLOSE = "<doctag>", "</doctag>"

# kinds the markdown view leaves out (page furniture and captions)
MARKDOWN_SKIP = frozenset({
    ComponentKind.PAGE_HEADER, ComponentKind.PAGE_FOOTER, ComponentKind.FIGURE_CAPTION,
    ComponentKind.TABLE_CAPTION, ComponentKind.CAPTION,
})
HEADING_KINDS = frozenset({ComponentKind.TITLE, ComponentKind.SECTION_HEADER})
_NAME_RE = re.compile(r"[a-z_][a-z0-9_]*")
_LOC_RE = re.compile(r"<loc_(\d+)>")


class DocTagError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class DocTagElement:
    tag: ComponentKind
    loc: tuple[int, int, int, int]
    content: str

    def __post_init__(self):
        if len(self.loc) != 4 or any(not 0 <= v < LOC_BINS for v in self.loc):
            raise ValueError(f"loc must be 4 integers in [0, {LOC_BINS - 1}]: {self.loc}")


@dataclass
class DocTagPage:
    elements: list[DocTagElement]
    page_size_pt: tuple[float, float] | None = None
    warnings: list[str] = field(default_factory=list, compare=False)


def quantize(v: float, extent: float) -> int:
    return min(LOC_BINS - 1, max(0, math.floor(LOC_BINS * v / extent)))


def to_doctag_page(page: AnnotatedPage) -> DocTagPage:
    w, h = page.page_size_pt
    elements = [
        DocTagElement(
            c.kind,
            (quantize(c.bbox_pt[0], w), quantize(c.bbox_pt[1], h), quantize(c.bbox_pt[2], w), quantize(c.bbox_pt[3], h)),
            c.text,
        )
        for c in page.ordered()
    ]
    return DocTagPage(elements, tuple(page.page_size_pt))


def escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;")


def unescape(text: str) -> str:
    return text.replace("&lt;", "<").replace("&amp;", "&")


def serialize_doctag(page: AnnotatedPage | DocTagPage) -> str:
    if isinstance(page, AnnotatedPage):
        page = to_doctag_page(page)
    lines = [
        f"<{e.tag.value}>" + "".join(f"<loc_{v}>" for v in e.loc) + escape(e.content) + f"</{e.tag.value}>"
        for e in page.elements
    ]
    return OPEN + "\n".join(lines) + CLOSE


def parse_doctag(s: str, page_size_pt: tuple[float, float] | None = None) -> DocTagPage:
    """Parse a DocTag document; errors carry the 1-based line number."""
    pos = 0

    def line_at(p: int) -> int:
        return s.count("\n", 0, p) + 1

    def skip_ws():
        nonlocal pos
        while pos < len(s) and s[pos] in " \t\r\n":
            pos += 1

    skip_ws()
    if not s.startswith(OPEN, pos):
        raise DocTagError("expected <doctag>", line_at(pos))
    pos += len(OPEN)
    elements: list[DocTagElement] = []
    warnings: list[str] = []
    while True:
        skip_ws()
        if s.startswith(CLOSE, pos):
            pos += len(CLOSE)
            break
        if pos >= len(s):
            raise DocTagError("unterminated document, missing </doctag>", line_at(pos))
        line = line_at(pos)
        if s[pos] != "<":
            raise DocTagError(f"expected an element tag, found {s[pos:pos + 10]!r}", line)
        m = _NAME_RE.match(s, pos + 1)
        if not m or s[m.end():m.end() + 1] != ">":
            raise DocTagError(f"malformed tag near {s[pos:pos + 20]!r}", line)
        name = m.group()
        pos = m.end() + 1
        locs = []
        while len(locs) < 4:
            lm = _LOC_RE.match(s, pos)
            if not lm:
                raise DocTagError(f"<{name}> needs 4 loc tokens, found {len(locs)}", line)
            v = int(lm.group(1))
            if v >= LOC_BINS:
                raise DocTagError(f"loc value {v} out of range 0..{LOC_BINS - 1}", line)
            locs.append(v)
            pos = lm.end()
        end = s.find("<", pos)
        if end < 0:
            raise DocTagError(f"unterminated <{name}>", line)
        content = unescape(s[pos:end])
        closing = f"</{name}>"
        if not s.startswith(closing, end):
            raise DocTagError(f"expected {closing}, found {s[end:end + 20]!r}", line_at(end))
        pos = end + len(closing)
        if ComponentKind.known(name):
            kind = ComponentKind(name)
        else:
            kind = ComponentKind.TEXT
            msg = f"line {line}: unknown tag <{name}> read as text"
            log.warning(msg)
            warnings.append(msg)
        elements.append(DocTagElement(kind, tuple(locs), content))
    if s[pos:].strip():
        raise DocTagError("trailing data after </doctag>", line_at(pos))
    return DocTagPage(elements, tuple(page_size_pt) if page_size_pt else None, warnings)


# -- HTML table reader -------------------------------------------------------


class HTMLTableError(ValueError):
    pass


@dataclass
class DomTree:
    tag: str
    text: str = ""
    children: list["DomTree"] = field(default_factory=list)
    colspan: int = 1
    rowspan: int = 1

    def size(self) -> int:
        return 1 + sum(c.size() for c in self.children)

    def to_html(self) -> str:
        if self.tag == "td":
            attrs = (f' colspan="{self.colspan}"' if self.colspan > 1 else "") + \
                    (f' rowspan="{self.rowspan}"' if self.rowspan > 1 else "")
            return f"<td{attrs}>{html.escape(self.text, quote=False)}</td>"
        return f"<{self.tag}>" + "".join(c.to_html() for c in self.children) + f"</{self.tag}>"


_WRAPPERS = {"thead", "tbody", "tfoot"}


class _TableParser(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root: DomTree | None = None
        self.stack: list[DomTree] = []
        self.cell_text: list[str] | None = None
        self.depth = 0

    def handle_starttag(self, tag, attrs):
        if tag == "table":
            if self.root is not None:
                if self.cell_text is not None:
                    raise HTMLTableError("nested tables are not supported")
                raise HTMLTableError("more than one table")
            self.root = DomTree("table")
            self.stack = [self.root]
        elif tag in _WRAPPERS:
            self._need("table", tag)
        elif tag == "tr":
            self._close_cell()
            if self.stack and self.stack[-1].tag == "tr":
                self.stack.pop()
            self._need("table", tag)
            node = DomTree("tr")
            self.stack[-1].children.append(node)
            self.stack.append(node)
        elif tag in ("td", "th"):
            self._close_cell()
            self._need("tr", tag)
            a = dict(attrs)
            node = DomTree("td", colspan=_span(a.get("colspan")), rowspan=_span(a.get("rowspan")))
            self.stack[-1].children.append(node)
            self.stack.append(node)
            self.cell_text = []

    def handle_endtag(self, tag):
        if tag in ("td", "th"):
            self._close_cell()
        elif tag == "tr":
            self._close_cell()
            if self.stack and self.stack[-1].tag == "tr":
                self.stack.pop()
        elif tag == "table":
            self._close_cell()
            if not self.stack:
                raise HTMLTableError("unbalanced </table>")
            self.stack = []

    def handle_data(self, data):
        if self.cell_text is not None:
            self.cell_text.append(data)
        elif data.strip() and self.stack:
            raise HTMLTableError(f"text outside a cell: {data.strip()[:20]!r}")

    def _need(self, parent: str, tag: str):
        if not self.stack or self.stack[-1].tag != parent:
            raise HTMLTableError(f"<{tag}> outside <{parent}>")

    def _close_cell(self):
        if self.cell_text is not None:
            self.stack[-1].text = " ".join("".join(self.cell_text).split())
            self.stack.pop()
            self.cell_text = None


def _span(v) -> int:
    try:
        n = int(v) if v is not None else 1
    except ValueError as exc:
        raise HTMLTableError(f"bad span {v!r}") from exc
    if n < 1:
        raise HTMLTableError(f"span must be >= 1, got {n}")
    return n


def parse_html_table(markup: str) -> DomTree:
    """Read one HTML table into a tree of table/tr/td nodes (th reads as td)."""
    p = _TableParser()
    try:
        p.feed(markup)
        p.close()
    except HTMLTableError:
        raise
    except Exception as exc:  # HTMLParser rarely raises, but be safe
        raise HTMLTableError(str(exc)) from exc
    if p.root is None:
        raise HTMLTableError("no <table> element")
    if p.stack:
        raise HTMLTableError("unterminated <table>")
    return p.root


# -- exports -----------------------------------------------------------------


def _table_to_markdown(tree: DomTree) -> str:
    rows = tree.children
    has_span = any(c.colspan > 1 or c.rowspan > 1 for r in rows for c in r.children)
    widths = {len(r.children) for r in rows}
    if not rows or has_span or len(widths) != 1 or 0 in widths:
        return tree.to_html()

    def cell(t: str) -> str:
        return t.replace("\\", "\\\\").replace("|", "\\|")

    lines = ["| " + " | ".join(cell(c.text) for c in rows[0].children) + " |",
             "|" + "|".join(" --- " for _ in rows[0].children) + "|"]
    lines += ["| " + " | ".join(cell(c.text) for c in r.children) + " |" for r in rows[1:]]
    return "\n".join(lines)


def markdown_block(e: DocTagElement) -> str | None:
    if e.tag in MARKDOWN_SKIP or not e.content.strip():
        return None
    if e.tag in HEADING_KINDS:
        return "# " + e.content
    if e.tag == ComponentKind.LIST_ITEM:
        return "- " + e.content
    if e.tag == ComponentKind.FORMULA:
        return "$$" + e.content + "$$"
    if e.tag in (ComponentKind.TABLE, ComponentKind.CHART):
        try:
            return _table_to_markdown(parse_html_table(e.content))
        except HTMLTableError:
            return e.content if e.tag == ComponentKind.CHART else None
    return e.content


def export(page: DocTagPage, fmt: str) -> str:
    if fmt == "json":
        return json.dumps({
            "doctag_version": DOCTAG_VERSION,
            "page_size_pt": list(page.page_size_pt) if page.page_size_pt else None,
            "elements": [{"tag": e.tag.value, "loc": list(e.loc), "content": e.content} for e in page.elements],
        }, ensure_ascii=False, indent=2)
    if fmt == "markdown":
        blocks = [b for b in (markdown_block(e) for e in page.elements) if b is not None]
        return "\n\n".join(blocks) + ("\n" if blocks else "")
    if fmt == "html":
        return _export_html(page)
    raise ValueError(f"unknown export format {fmt!r}")


def page_from_json(text: str) -> DocTagPage:
    d = json.loads(text)
    return DocTagPage(
        [DocTagElement(ComponentKind.parse(e["tag"]), tuple(e["loc"]), e["content"]) for e in d["elements"]],
        tuple(d["page_size_pt"]) if d.get("page_size_pt") else None,
    )


def _export_html(page: DocTagPage) -> str:
    out = ["<!DOCTYPE html>", "<html><body>"]
    for e in page.elements:
        loc = ",".join(map(str, e.loc))
        attrs = f'class="{e.tag.value}" data-loc="{loc}"'
        if e.tag in (ComponentKind.TABLE, ComponentKind.CHART):
            try:
                out.append(f"<div {attrs}>{parse_html_table(e.content).to_html()}</div>")
                continue
            except HTMLTableError:
                pass
        body = html.escape(e.content, quote=False)
        if e.tag in HEADING_KINDS:
            out.append(f"<h1 {attrs}>{body}</h1>")
        elif e.tag == ComponentKind.LIST_ITEM:
            out.append(f"<li {attrs}>{body}</li>")
        else:
            out.append(f"<p {attrs}>{body}</p>")
    out.append("</body></html>")
    return "\n".join(out) + "\n"
