"""Writers for the dialect package format (fixtures, demos, tests)."""

from __future__ import annotations

import io
import zipfile
from xml.sax.saxutils import escape, quoteattr

from .markup import M, W

CONTENT_TYPES = (
    '<?xml version="1.0" encoding="UTF-8"?>'
    '<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">'
    '<Override PartName="/word/document.xml" '
    'ContentType="application/vnd.openxmlformats-officedocument.wordprocessingml.document.main+xml"/>'
    "</Types>"
)


def make_package(document_xml: str | bytes, extra: dict[str, bytes] | None = None) -> bytes:
    """Zip a document part (and optional extra members) into a package."""
    if isinstance(document_xml, str):
        document_xml = document_xml.encode("utf-8")
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("[Content_Types].xml", CONTENT_TYPES)
        zf.writestr("word/document.xml", document_xml)
        for name, data in (extra or {}).items():
            zf.writestr(name, data)
    return buf.getvalue()


def _run(text: str, size: float | None, bold: bool) -> str:
    props = ""
    if size is not None:
        props += f'<w:sz w:val="{int(round(size * 2))}"/>'
    if bold:
        props += "<w:b/>"
    rpr = f"<w:rPr>{props}</w:rPr>" if props else ""
    return f'<w:r>{rpr}<w:t xml:space="preserve">{escape(text)}</w:t></w:r>'


class DocumentBuilder:
    """Fluent builder emitting dialect XML."""

    def __init__(self, lang: str | None = None):
        self.lang = lang
        self.parts: list[str] = []

    def paragraph(self, text: str, size: float | None = None, bold: bool = False,
                  style: str | None = None, outline: int | None = None, numbered: bool = False):
        ppr = ""
        if style:
            ppr += f"<w:pStyle w:val={quoteattr(style)}/>"
        if outline is not None:
            ppr += f'<w:outlineLvl w:val="{outline}"/>'
        if numbered:
            ppr += '<w:numPr><w:numId w:val="1"/></w:numPr>'
        ppr = f"<w:pPr>{ppr}</w:pPr>" if ppr else ""
        self.parts.append(f"<w:p>{ppr}{_run(text, size, bold)}</w:p>")
        return self

    def heading(self, text: str, level: int = 1):
        return self.paragraph(text, outline=level - 1, size=16)

    def page_break(self):
        self.parts.append('<w:p><w:r><w:br w:type="page"/></w:r></w:p>')
        return self

    def table(self, rows: list[list], size: float | None = None):
        """``rows`` holds cell texts or ``(text, colspan, rowspan)`` tuples."""
        out = ["<w:tbl>"]
        for row in rows:
            out.append("<w:tr>")
            for cell in row:
                text, cs, rs = (cell, 1, 1) if isinstance(cell, str) else cell
                pr = ""
                if cs > 1:
                    pr += f'<w:gridSpan w:val="{cs}"/>'
                if rs > 1:
                    pr += f'<w:rowSpan w:val="{rs}"/>'
                pr = f"<w:tcPr>{pr}</w:tcPr>" if pr else ""
                out.append(f"<w:tc>{pr}<w:p>{_run(text, size, False)}</w:p></w:tc>")
            out.append("</w:tr>")
        out.append("</w:tbl>")
        self.parts.append("".join(out))
        return self

    def picture(self, width: float | None = None, height: float = 100.0, color: str | None = None,
                image: str | None = None, anchor: str | None = None, seed: int | None = None, tag: str = "drawing"):
        attrs = f' w:height="{height}"'
        if width is not None:
            attrs += f' w:width="{width}"'
        for key, val in (("color", color), ("image", image), ("anchor", anchor), ("seed", seed)):
            if val is not None:
                attrs += f' w:{key}="{val}"'
        self.parts.append(f"<w:{tag}{attrs}/>")
        return self

    def chart(self, **kw):
        return self.picture(tag="chart", **kw)

    def formula(self, latex: str):
        self.parts.append(f"<m:oMathPara><m:oMath><m:r><m:t>{escape(latex)}</m:t></m:r></m:oMath></m:oMathPara>")
        return self

    def header(self, text: str):
        self.parts.append(f"<w:hdr><w:p>{_run(text, 9, False)}</w:p></w:hdr>")
        return self

    def footer(self, text: str):
        self.parts.append(f"<w:ftr><w:p>{_run(text, 9, False)}</w:p></w:ftr>")
        return self

    def raw(self, xml: str):
        self.parts.append(xml)
        return self

    def xml(self) -> str:
        lang = f' w:lang="{self.lang}"' if self.lang else ""
        return (
            f'<w:document xmlns:w="{W}" xmlns:m="{M}"{lang}>'
            f"<w:body>{''.join(self.parts)}</w:body></w:document>"
        )

    def build(self) -> bytes:
        return make_package(self.xml())
