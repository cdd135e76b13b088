"""Per-kind fill colors and color injection."""

from __future__ import annotations

import itertools
import json
from dataclasses import replace
from pathlib import Path

from .ir import RGB, DocumentIR
from .kinds import ComponentKind

MIN_CHANNEL_SEPARATION = 32

_LEVELS = (40, 100, 160, 220)


class PaletteError(ValueError):
    """Raised for an invalid palette or a kind missing from it."""


def channel_distance(a: RGB, b: RGB) -> int:
    return max(abs(x - y) for x, y in zip(a, b))


class ColorPalette:
    """Injective map from component kind to an RGB fill."""

    def __init__(self, colors: dict[ComponentKind, RGB]):
        self.colors = {ComponentKind(k): tuple(int(v) for v in rgb) for k, rgb in colors.items()}
        self._validate()
        self._kinds = list(self.colors)
        self._index = {k: i for i, k in enumerate(self._kinds)}

    def _validate(self):
        for kind, rgb in self.colors.items():
            if len(rgb) != 3 or not all(0 <= v <= 255 for v in rgb):
                raise PaletteError(f"{kind.value}: channels must be in 0..255")
            for ref in ((255, 255, 255), (0, 0, 0)):
                if channel_distance(rgb, ref) <= MIN_CHANNEL_SEPARATION:
                    raise PaletteError(f"{kind.value}: too close to {ref}")
        for (ka, a), (kb, b) in itertools.combinations(self.colors.items(), 2):
            if channel_distance(a, b) < MIN_CHANNEL_SEPARATION:
                raise PaletteError(f"{ka.value} and {kb.value} are closer than {MIN_CHANNEL_SEPARATION}")

    def __getitem__(self, kind: ComponentKind) -> RGB:
        return self.colors[kind]

    def __contains__(self, kind) -> bool:
        return kind in self.colors

    def __len__(self) -> int:
        return len(self.colors)

    @property
    def kinds(self) -> list[ComponentKind]:
        return list(self._kinds)

    def index_of(self, kind: ComponentKind) -> int:
        return self._index[kind]

    def kind_at(self, index: int) -> ComponentKind:
        return self._kinds[index]

    def rgb_table(self) -> list[RGB]:
        return [self.colors[k] for k in self._kinds]

    @classmethod
    def default(cls) -> "ColorPalette":
        # non-gray grid colors, most saturated first
        candidates = [c for c in itertools.product(_LEVELS, repeat=3) if len(set(c)) > 1]
        candidates.sort(key=lambda c: (-(max(c) - min(c)), c))
        return cls(dict(zip(ComponentKind, candidates)))

    def to_json(self) -> str:
        return json.dumps({k.value: list(v) for k, v in self.colors.items()}, indent=2)

    @classmethod
    def from_json(cls, s: str) -> "ColorPalette":
        return cls({ComponentKind(k): tuple(v) for k, v in json.loads(s).items()})

    @classmethod
    def load(cls, path) -> "ColorPalette":
        return cls.from_json(Path(path).read_text())


def inject_colors(ir: DocumentIR, palette: ColorPalette) -> DocumentIR:
    """Return a copy of ``ir`` whose components carry their kind's fill color."""
    missing = sorted({c.kind.value for c in ir.components if c.kind not in palette})
    if missing:
        raise PaletteError(f"palette has no color for: {', '.join(missing)}")
    return ir.with_components(replace(c, fill=palette[c.kind]) for c in ir.components)


def strip_colors(ir: DocumentIR) -> DocumentIR:
    return ir.with_components(replace(c, fill=None) for c in ir.components)
