"""Renderer-independent document representation and its JSON form."""

from __future__ import annotations

import html
import json
from dataclasses import dataclass, field, replace
from typing import Any

from .kinds import ComponentKind, Provenance

IR_VERSION = 1

RGB = tuple[int, int, int]


class IRError(ValueError):
    pass


@dataclass(frozen=True)
class TextRun:
    text: str
    font_size_pt: float = 11.0
    bold: bool = False
    list_marker: str | None = None


@dataclass(frozen=True)
class TableCell:
    row: int
    col: int
    text: str = ""
    colspan: int = 1
    rowspan: int = 1
    font_size_pt: float = 10.0

    def __post_init__(self):
        if self.colspan < 1 or self.rowspan < 1:
            raise IRError(f"cell ({self.row},{self.col}) has span < 1")


@dataclass(frozen=True)
class TableGrid:
    n_rows: int
    n_cols: int
    cells: tuple[TableCell, ...]

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise IRError("table grid must have at least one row and column")
        for c in self.cells:
            if c.row + c.rowspan > self.n_rows or c.col + c.colspan > self.n_cols:
                raise IRError(f"cell ({c.row},{c.col}) spans outside the grid")

    def rows(self) -> list[list[TableCell]]:
        out: list[list[TableCell]] = [[] for _ in range(self.n_rows)]
        for c in sorted(self.cells, key=lambda c: (c.row, c.col)):
            out[c.row].append(c)
        return out

    def to_html(self) -> str:
        parts = ["<table>"]
        for row in self.rows():
            parts.append("<tr>")
            for c in row:
                attrs = ""
                if c.colspan > 1:
                    attrs += f' colspan="{c.colspan}"'
                if c.rowspan > 1:
                    attrs += f' rowspan="{c.rowspan}"'
                parts.append(f"<td{attrs}>{html.escape(c.text, quote=False)}</td>")
            parts.append("</tr>")
        parts.append("</table>")
        return "".join(parts)

    @property
    def text(self) -> str:
        return " ".join(c.text for row in self.rows() for c in row if c.text)


@dataclass(frozen=True)
class Component:
    kind: ComponentKind
    provenance: Provenance
    source_order: int
    text_runs: tuple[TextRun, ...] = ()
    table_grid: TableGrid | None = None
    fill: RGB | None = None
    # free-form layout hints: width_pt, height_pt, color, image, anchor, level
    attrs: dict[str, Any] = field(default_factory=dict, hash=False, compare=True)

    @property
    def text(self) -> str:
        if self.table_grid is not None:
            return self.table_grid.text
        return "".join(r.text for r in self.text_runs)

    @property
    def is_empty(self) -> bool:
        if self.kind in (ComponentKind.PICTURE, ComponentKind.CHART):
            return False
        if self.table_grid is not None:
            return False
        return not self.text.strip()


@dataclass(frozen=True)
class DocumentIR:
    components: tuple[Component, ...] = ()
    page_breaks: tuple[int, ...] = ()
    language_hint: str | None = None
    repaired: bool = False
    repair_actions: tuple[str, ...] = ()

    def __post_init__(self):
        prev = None
        for c in self.components:
            if prev is not None and c.source_order <= prev:
                raise IRError("source_order must be strictly increasing")
            prev = c.source_order
            if (c.table_grid is not None) != (c.kind is ComponentKind.TABLE):
                raise IRError(f"table_grid present iff kind is table (component {c.source_order})")

    def kinds(self) -> set[ComponentKind]:
        return {c.kind for c in self.components}

    def with_components(self, components) -> "DocumentIR":
        return replace(self, components=tuple(components))

    # -- JSON ---------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "ir_version": IR_VERSION,
            "language_hint": self.language_hint,
            "repaired": self.repaired,
            "repair_actions": list(self.repair_actions),
            "page_breaks": list(self.page_breaks),
            "components": [_component_to_dict(c) for c in self.components],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "DocumentIR":
        version = d.get("ir_version")
        if version != IR_VERSION:
            raise IRError(f"unsupported ir_version {version!r}")
        return cls(
            components=tuple(_component_from_dict(c) for c in d.get("components", [])),
            page_breaks=tuple(d.get("page_breaks", [])),
            language_hint=d.get("language_hint"),
            repaired=bool(d.get("repaired", False)),
            repair_actions=tuple(d.get("repair_actions", [])),
        )

    @classmethod
    def from_json(cls, s: str) -> "DocumentIR":
        return cls.from_dict(json.loads(s))


def _component_to_dict(c: Component) -> dict:
    d: dict[str, Any] = {
        "kind": c.kind.value,
        "provenance": c.provenance.value,
        "source_order": c.source_order,
        "text_runs": [
            {"text": r.text, "font_size_pt": r.font_size_pt, "bold": r.bold, "list_marker": r.list_marker}
            for r in c.text_runs
        ],
    }
    if c.table_grid is not None:
        g = c.table_grid
        d["table_grid"] = {
            "n_rows": g.n_rows,
            "n_cols": g.n_cols,
            "cells": [
                {"row": x.row, "col": x.col, "text": x.text, "colspan": x.colspan,
                 "rowspan": x.rowspan, "font_size_pt": x.font_size_pt}
                for x in g.cells
            ],
        }
    if c.fill is not None:
        d["fill"] = list(c.fill)
    if c.attrs:
        d["attrs"] = dict(c.attrs)
    return d


def _component_from_dict(d: dict) -> Component:
    grid = None
    if d.get("table_grid") is not None:
        g = d["table_grid"]
        grid = TableGrid(g["n_rows"], g["n_cols"], tuple(TableCell(**x) for x in g["cells"]))
    fill = tuple(d["fill"]) if d.get("fill") is not None else None
    return Component(
        kind=ComponentKind(d["kind"]),
        provenance=Provenance(d["provenance"]),
        source_order=d["source_order"],
        text_runs=tuple(TextRun(**r) for r in d.get("text_runs", [])),
        table_grid=grid,
        fill=fill,
        attrs=dict(d.get("attrs", {})),
    )
