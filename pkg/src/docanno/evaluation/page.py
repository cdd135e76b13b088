"""Markdown prediction parsing and per-page scoring against DocTag ground truth."""

from __future__ import annotations

import html
import re
from dataclasses import asdict, dataclass

from ..docmodel.kinds import ComponentKind
from ..doctag import DocTagPage, HTMLTableError, markdown_block, parse_html_table
from .matching import adjacency_match, cdm
from .ted import teds
from .text import levenshtein, normalize_formula, normalize_inline_math, normalize_text, sequence_ned


@dataclass
class MarkdownParts:
    paragraphs: list[str]
    tables: list[str]  # HTML
    formulas: list[str]


_HEADING_RE = re.compile(r"^#{1,6}\s+")
_BULLET_RE = re.compile(r"^[-*+]\s+")
_PIPE_SPLIT_RE = re.compile(r"(?<!\\)\|")
_SEP_CELL_RE = re.compile(r"^\s*:?-{3,}:?\s*$")


def _pipe_cells(line: str) -> list[str]:
    s = line.strip()
    if s.startswith("|"):
        s = s[1:]
    if s.endswith("|") and not s.endswith("\\|"):
        s = s[:-1]
    return [c.strip().replace("\\|", "|").replace("\\\\", "\\") for c in _PIPE_SPLIT_RE.split(s)]


def pipe_table_to_html(lines: list[str]) -> str:
    rows = [_pipe_cells(l) for l in lines]
    rows = [r for r in rows if not all(_SEP_CELL_RE.match(c) for c in r)]
    body = "".join("<tr>" + "".join(f"<td>{html.escape(c, quote=False)}</td>" for c in r) + "</tr>" for r in rows)
    return f"<table>{body}</table>"


def _strip_block(text: str) -> str:
    text = _HEADING_RE.sub("", text, count=1)
    text = _BULLET_RE.sub("", text, count=1)
    return normalize_text(normalize_inline_math(text))


def parse_markdown(md: str) -> MarkdownParts:
    """Split markdown into paragraphs, tables (as HTML), and display formulas."""
    paragraphs, tables, formulas = [], [], []
    lines = md.splitlines()
    i, n = 0, len(lines)
    para: list[str] = []

    def flush():
        if para:
            t = _strip_block(" ".join(para))
            if t:
                paragraphs.append(t)
            para.clear()

    while i < n:
        line = lines[i]
        s = line.strip()
        if not s:
            flush()
            i += 1
        elif s.startswith("```"):
            flush()
            j = i + 1
            while j < n and not lines[j].strip().startswith("```"):
                j += 1
            code = normalize_text(" ".join(lines[i + 1:j]))
            if code:
                paragraphs.append(code)
            i = j + 1
        elif s.startswith("$$") or s.startswith("\\["):
            flush()
            close = "$$" if s.startswith("$$") else "\\]"
            buf = s[2:]
            j = i
            while not buf.rstrip().endswith(close) and j + 1 < n:
                j += 1
                buf += " " + lines[j].strip()
            if buf.rstrip().endswith(close):
                buf = buf.rstrip()[:-2]
            formulas.append(buf.strip())
            i = j + 1
        elif s.lower().startswith("<table"):
            flush()
            buf, j = [line], i
            while "</table>" not in lines[j].lower() and j + 1 < n:
                j += 1
                buf.append(lines[j])
            tables.append("\n".join(buf))
            i = j + 1
        elif s.startswith("|"):
            flush()
            j = i
            while j < n and lines[j].strip().startswith("|"):
                j += 1
            tables.append(pipe_table_to_html(lines[i:j]))
            i = j
        else:
            para.append(s)
            i += 1
    flush()
    return MarkdownParts(paragraphs, tables, formulas)


def gt_parts(gt: DocTagPage):
    """Ground-truth paragraphs, (kind, html) tables, and formulas, with furniture excluded."""
    paragraphs, tables, formulas = [], [], []
    for e in gt.elements:
        block = markdown_block(e)
        if block is None:
            continue
        if e.tag == ComponentKind.FORMULA:
            formulas.append(e.content.strip())
        elif e.tag in (ComponentKind.TABLE, ComponentKind.CHART):
            try:
                parse_html_table(e.content)
            except HTMLTableError:
                t = _strip_block(block)
                if t:
                    paragraphs.append(t)
                continue
            tables.append((e.tag, e.content))
        else:
            t = _strip_block(block)
            if t:
                paragraphs.append(t)
    return paragraphs, tables, formulas


@dataclass
class PageScores:
    page_id: str
    text_edit: float
    table_teds: float | None
    formula_edit: float | None
    read_order_edit: float
    chart_score: float | None
    cdm: float | None
    overall: float
    language: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _edit_ratio(pairs: list[tuple[str, str]]) -> float:
    """Summed edit distance over summed longer length; empty input is perfect."""
    num = sum(levenshtein(p, g) for p, g in pairs)
    den = sum(max(len(p), len(g)) for p, g in pairs)
    return num / den if den else 0.0


def evaluate_page(pred_markdown: str, gt: DocTagPage, page_id: str = "", language: str | None = None,
                  joiner: str = " ") -> PageScores:
    from .report import overall_score

    pred = parse_markdown(pred_markdown or "")
    g_par, g_tab, g_form = gt_parts(gt)

    matches = adjacency_match(pred.paragraphs, g_par, joiner=joiner)
    pairs = [(pred.paragraphs[m.pred_index], joiner.join(g_par[j] for j in m.gt_indices)) for m in matches]
    used_p = {m.pred_index for m in matches}
    used_g = {j for m in matches for j in m.gt_indices}
    pairs += [(p, "") for i, p in enumerate(pred.paragraphs) if i not in used_p]
    pairs += [("", g) for j, g in enumerate(g_par) if j not in used_g]
    text_edit = _edit_ratio(pairs)

    seq = [j for m in sorted(matches, key=lambda m: m.pred_index) for j in m.gt_indices]
    read_order_edit = 1.0 - sequence_ned(seq, sorted(seq))

    table_scores, chart_scores = [], []
    for k, (kind, gt_html) in enumerate(g_tab):
        s = teds(pred.tables[k], gt_html) if k < len(pred.tables) else 0.0
        (chart_scores if kind == ComponentKind.CHART else table_scores).append(s)
    table_teds = sum(table_scores) / len(table_scores) if table_scores else None
    chart = sum(chart_scores) / len(chart_scores) if chart_scores else None

    formula_edit = cdm_score = None
    if g_form or pred.formulas:
        pf = [normalize_formula(f) for f in pred.formulas]
        gf = [normalize_formula(f) for f in g_form]
        fm = adjacency_match(pf, gf, direct_threshold=0.0, window=1)
        fpairs = [(pf[m.pred_index], gf[m.gt_indices[0]]) for m in fm]
        fp_used = {m.pred_index for m in fm}
        fg_used = {m.gt_indices[0] for m in fm}
        fpairs += [(p, "") for i, p in enumerate(pf) if i not in fp_used]
        fpairs += [("", g) for j, g in enumerate(gf) if j not in fg_used]
        formula_edit = _edit_ratio(fpairs)
        cdm_score = cdm("".join(pf), "".join(gf))

    overall = overall_score(text_edit, table_teds) if table_teds is not None else (1.0 - text_edit) * 100.0
    return PageScores(page_id, text_edit, table_teds, formula_edit, read_order_edit, chart, cdm_score, overall,
                      language)
