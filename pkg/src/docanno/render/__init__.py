from .diff import ChangeMask, RegionDetection, diff_pages, extract_regions
from .drift import DriftReport, ScanClass, classify_scanned, detect_drift, grayscale_entropy
from .raster import SUPPORTED_DPI, RasterError, RasterPage
from .toy import RenderedBox, RenderResult, toy_render

__all__ = [
    "ChangeMask", "RegionDetection", "diff_pages", "extract_regions", "DriftReport", "ScanClass",
    "classify_scanned", "detect_drift", "grayscale_entropy", "SUPPORTED_DPI", "RasterError",
    "RasterPage", "RenderedBox", "RenderResult", "toy_render",
]
