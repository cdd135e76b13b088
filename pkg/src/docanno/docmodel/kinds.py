"""Component taxonomy and provenance levels."""

from __future__ import annotations

from enum import Enum


class ComponentKind(str, Enum):
    TEXT = "text"
    TITLE = "title"
    SECTION_HEADER = "section_header"
    LIST_ITEM = "list_item"
    TABLE = "table"
    TABLE_CELL = "table_cell"
    PICTURE = "picture"
    CHART = "chart"
    FIGURE_CAPTION = "figure_caption"
    TABLE_CAPTION = "table_caption"
    FORMULA = "formula"
    CODE = "code"
    PAGE_HEADER = "page_header"
    PAGE_FOOTER = "page_footer"
    FOOTNOTE = "footnote"
    BIBLIOGRAPHY = "bibliography"
    FORM_TAG = "form_tag"
    # extended set
    KEY_VALUE_REGION = "key_value_region"
    CHECKBOX_SELECTED = "checkbox_selected"
    CHECKBOX_UNSELECTED = "checkbox_unselected"
    DOCUMENT_INDEX = "document_index"
    REFERENCE = "reference"
    PARAGRAPH = "paragraph"
    CAPTION = "caption"
    EQUATION_NUMBER = "equation_number"
    ABSTRACT = "abstract"
    AUTHOR = "author"
    AFFILIATION = "affiliation"
    DATE = "date"
    SIGNATURE = "signature"
    WATERMARK = "watermark"

    @classmethod
    def parse(cls, name: str) -> "ComponentKind":
        """Map a tag name to a kind; unknown names become TEXT."""
        try:
            return cls(name)
        except ValueError:
            return cls.TEXT

    @classmethod
    def known(cls, name: str) -> bool:
        return name in _VALUES


_VALUES = frozenset(k.value for k in ComponentKind)

# kinds drawn as opaque graphics rather than flowing text
GRAPHIC_KINDS = frozenset({ComponentKind.PICTURE, ComponentKind.CHART})


class Provenance(str, Enum):
    NATIVE_TAG = "native_tag"
    BUILTIN_STYLE = "builtin_style"
    HEURISTIC = "heuristic"

    @property
    def confidence(self) -> float:
        return _CONFIDENCE[self]

    @property
    def is_native_signal(self) -> bool:
        # styles originate in markup, so they count as native for reliability
        return self is not Provenance.HEURISTIC


_CONFIDENCE = {
    Provenance.NATIVE_TAG: 1.0,
    Provenance.BUILTIN_STYLE: 0.8,
    Provenance.HEURISTIC: 0.5,
}
