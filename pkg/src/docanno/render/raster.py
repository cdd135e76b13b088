from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

SUPPORTED_DPI = (72, 96, 144, 300)


class RasterError(ValueError):
    pass


def page_pixels(size_pt: float, dpi: int) -> int:
    return int(round(size_pt * dpi / 72.0))


@dataclass
class RasterPage:
    """Row-major RGB page raster, top-left origin."""

    pixels: np.ndarray
    dpi: int
    page_size_pt: tuple[float, float]

    def __post_init__(self):
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3 or self.pixels.dtype != np.uint8:
            raise RasterError("pixels must be an (H, W, 3) uint8 array")
        w_pt, h_pt = self.page_size_pt
        if (self.width_px, self.height_px) != (page_pixels(w_pt, self.dpi), page_pixels(h_pt, self.dpi)):
            raise RasterError(
                f"raster {self.width_px}x{self.height_px} does not match "
                f"{w_pt}x{h_pt}pt at {self.dpi} dpi"
            )

    @property
    def width_px(self) -> int:
        return self.pixels.shape[1]

    @property
    def height_px(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def blank(cls, page_size_pt: tuple[float, float], dpi: int) -> "RasterPage":
        w, h = page_pixels(page_size_pt[0], dpi), page_pixels(page_size_pt[1], dpi)
        if w <= 0 or h <= 0:
            raise RasterError(f"zero-size page {page_size_pt}")
        return cls(np.full((h, w, 3), 255, dtype=np.uint8), dpi, page_size_pt)

    def gray(self) -> np.ndarray:
        """ITU-R 601 luma, rounded to uint8."""
        p = self.pixels
        acc = p[..., 0].astype(np.uint32) * 299
        acc += p[..., 1].astype(np.uint32) * 587
        acc += p[..., 2].astype(np.uint32) * 114
        acc += 500
        return (acc // 1000).astype(np.uint8)

    def px_to_pt(self, v: float) -> float:
        return v * 72.0 / self.dpi

    def save_png(self, path) -> None:
        img = Image.fromarray(self.pixels, "RGB")
        # dpi stored as pHYs so loaders can reconstruct page size
        img.save(Path(path), format="PNG", dpi=(self.dpi, self.dpi))

    @classmethod
    def load_png(cls, path, dpi: int | None = None, page_size_pt=None) -> "RasterPage":
        img = Image.open(Path(path))
        if img.format != "PNG":
            raise RasterError(f"{path}: lossless PNG required, got {img.format}")
        if dpi is None:
            info = img.info.get("dpi")
            if not info:
                raise RasterError(f"{path}: no dpi metadata; pass dpi explicitly")
            dpi = int(round(info[0]))
        arr = np.asarray(img.convert("RGB"), dtype=np.uint8).copy()
        if page_size_pt is None:
            page_size_pt = (arr.shape[1] * 72.0 / dpi, arr.shape[0] * 72.0 / dpi)
        return cls(arr, dpi, tuple(page_size_pt))
