from .ir import IR_VERSION, Component, DocumentIR, IRError, TableCell, TableGrid, TextRun
from .kinds import GRAPHIC_KINDS, ComponentKind, Provenance
from .markup import ParseError, parse_structure
from .package import DocumentBuilder, make_package
from .palette import ColorPalette, PaletteError, inject_colors, strip_colors
from .repair import RepairError, RepairResult, repair_markup

__all__ = [
    "IR_VERSION", "Component", "DocumentIR", "IRError", "TableCell", "TableGrid", "TextRun",
    "GRAPHIC_KINDS", "ComponentKind", "Provenance", "ParseError", "parse_structure",
    "DocumentBuilder", "make_package", "ColorPalette", "PaletteError", "inject_colors",
    "strip_colors", "RepairError", "RepairResult", "repair_markup",
]
