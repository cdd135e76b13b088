from __future__ import annotations

import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from docanno.align import iou
from docanno.docmodel import ColorPalette, Component, ComponentKind, DocumentIR, Provenance, TextRun, inject_colors
from docanno.pipeline import match_detections
from docanno.render import (
    ChangeMask,
    RasterError,
    RasterPage,
    ScanClass,
    classify_scanned,
    detect_drift,
    diff_pages,
    extract_regions,
    grayscale_entropy,
    toy_render,
)
from docanno.render.diff import NONE, connected_components
from docanno.render.raster import page_pixels

from generators import random_ir
from oracles import cc_boxes_scipy

PAL = ColorPalette.default()


def text_ir(*texts, kind=ComponentKind.TEXT):
    return DocumentIR(tuple(Component(kind, Provenance.NATIVE_TAG, i, (TextRun(t),)) for i, t in enumerate(texts)))


def page(h=40, w=50, dpi=72):
    return RasterPage(np.full((h, w, 3), 255, dtype=np.uint8), dpi, (w * 72 / dpi, h * 72 / dpi))


# -- raster ------------------------------------------------------------------


def test_page_dimensions():
    p = RasterPage.blank((612.0, 792.0), 144)
    assert (p.width_px, p.height_px) == (1224, 1584)
    assert p.pixels.shape == (1584, 1224, 3)
    assert page_pixels(595.0, 96) == round(595 * 96 / 72)


def test_png_round_trip(tmp_path):
    res = toy_render(inject_colors(text_ir("hello world"), PAL), 72)
    res.pages[0].save_png(tmp_path / "p.png")
    back = RasterPage.load_png(tmp_path / "p.png", 72)
    assert np.array_equal(back.pixels, res.pages[0].pixels)


# -- toy renderer --------------------------------------------------------------


def test_render_is_deterministic():
    ir = random_ir(random.Random(3))
    a, b = toy_render(ir, 144), toy_render(ir, 144)
    assert all(np.array_equal(x.pixels, y.pixels) for x, y in zip(a.pages, b.pages))


def test_empty_ir_is_blank_page():
    res = toy_render(DocumentIR(), 72)
    assert len(res.pages) == 1
    assert (res.pages[0].pixels == 255).all()


def test_zero_size_page_rejected():
    with pytest.raises(RasterError):
        toy_render(DocumentIR(), 72, page_size_pt=(0.0, 792.0))


def test_unsupported_dpi_rejected():
    with pytest.raises(RasterError):
        toy_render(DocumentIR(), 100)


def test_colorized_difference_inside_truth_box():
    ir = text_ir("a single paragraph of words")
    base, col = toy_render(ir, 144), toy_render(ir, 144, colorize=PAL)
    diff = np.abs(base.pages[0].pixels.astype(int) - col.pages[0].pixels.astype(int)).max(axis=2) > 0
    ys, xs = np.nonzero(diff)
    x1, y1, x2, y2 = base.boxes[0][0].bbox_px
    assert xs.min() >= x1 - 1 and xs.max() <= x2 and ys.min() >= y1 - 1 and ys.max() <= y2


def test_overflow_paginates():
    long = " ".join(["word"] * 120)
    ir = text_ir(*([long] * 8))
    res = toy_render(ir, 72)
    assert len(res.pages) > 1
    assert sum(len(b) for b in res.boxes) == 8


def test_explicit_page_breaks():
    ir = DocumentIR(text_ir("one", "two", "three").components, page_breaks=(1, 2))
    assert len(toy_render(ir, 72).pages) == 3


def test_empty_component_not_drawn():
    ir = text_ir("   ", "visible")
    res = toy_render(ir, 72)
    assert [b.source_order for b in res.boxes[0]] == [1]


# -- diff ------------------------------------------------------------------


def test_identical_pages_give_empty_mask():
    p = toy_render(text_ir("same"), 72).pages[0]
    assert (diff_pages(p, p, PAL).labels == NONE).all()


def test_one_rectangle_labeled_exactly():
    base = page()
    col = page()
    rgb = PAL[ComponentKind.TABLE]
    col.pixels[5:15, 10:30] = rgb
    mask = diff_pages(base, col, PAL)
    expect = np.full((40, 50), NONE)
    expect[5:15, 10:30] = PAL.index_of(ComponentKind.TABLE)
    assert np.array_equal(mask.labels, expect)


def test_preexisting_logo_ignored():
    base, col = page(), page()
    logo = (30, 60, 200)
    base.pixels[20:30, 20:30] = logo
    col.pixels[20:30, 20:30] = logo
    col.pixels[0:5, 0:5] = PAL[ComponentKind.TEXT]
    labels = diff_pages(base, col, PAL).labels
    assert (labels[20:30, 20:30] == NONE).all()
    assert (labels[0:5, 0:5] == PAL.index_of(ComponentKind.TEXT)).all()


def test_below_threshold_ignored():
    base, col = page(), page()
    col.pixels[0:4, 0:4] = 255 - 12
    assert (diff_pages(base, col, PAL).labels == NONE).all()
    col.pixels[0:4, 0:4] = 255 - 13
    assert (diff_pages(base, col, PAL).labels != NONE).sum() == 16


def test_dimension_mismatch():
    with pytest.raises(RasterError):
        diff_pages(page(40, 50), page(41, 50), PAL)


def test_diff_symmetric_support():
    ir = random_ir(random.Random(11))
    base, col = toy_render(ir, 72), toy_render(inject_colors(ir, PAL), 72)
    for b, c in zip(base.pages, col.pages):
        assert np.array_equal(diff_pages(b, c, PAL).labels != NONE, diff_pages(c, b, PAL).labels != NONE)


# -- connected components ------------------------------------------------------


def test_two_blobs_two_detections():
    labels = np.full((20, 20), NONE, dtype=np.int16)
    labels[1:5, 1:5] = 0
    labels[10:15, 12:18] = 3
    dets = extract_regions(ChangeMask.from_labels(labels), PAL)
    assert [(d.kind, d.bbox_px, d.area_px) for d in dets] == [
        (PAL.kind_at(0), (1, 1, 5, 5), 16), (PAL.kind_at(3), (12, 10, 18, 15), 30)]


def test_small_blob_dropped_and_empty_mask():
    labels = np.full((10, 10), NONE, dtype=np.int16)
    labels[2:4, 2:4] = 1
    assert extract_regions(ChangeMask.from_labels(labels), PAL) == []
    assert extract_regions(ChangeMask.from_labels(np.full((10, 10), NONE, dtype=np.int16)), PAL) == []


def test_diagonal_pixels_connect():
    labels = np.full((6, 6), NONE, dtype=np.int16)
    for i in range(6):
        labels[i, i] = 2
    (det,) = extract_regions(ChangeMask.from_labels(labels), PAL, min_area=1)
    assert det.bbox_px == (0, 0, 6, 6) and det.area_px == 6


@given(st.integers(0, 10_000), st.floats(0.05, 0.7))
@settings(max_examples=60, deadline=None)
def test_components_match_scipy(seed, density):
    rng = np.random.default_rng(seed)
    h, w = rng.integers(1, 40, size=2)
    labels = np.where(rng.random((h, w)) < density, rng.integers(0, 3, (h, w)), NONE).astype(np.int16)
    comps, _ = connected_components(labels)
    mine = sorted((int(lab), x1, y1, x2, y2, area) for lab, x1, y1, x2, y2, area, _ in comps)
    assert mine == cc_boxes_scipy(labels, 1)
    dets = extract_regions(ChangeMask.from_labels(labels), PAL, min_area=4)
    assert sorted((PAL.index_of(d.kind), *d.bbox_px, d.area_px) for d in dets) == cc_boxes_scipy(labels, 4)


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_closure_property(seed):
    ir = random_ir(random.Random(seed), max_pages=2)
    base, col = toy_render(ir, 72), toy_render(inject_colors(ir, PAL), 72)
    dets = [extract_regions(diff_pages(b, c, PAL), PAL) for b, c in zip(base.pages, col.pages)]
    for truth, pairs in zip(base.boxes, match_detections(ir, dets)):
        assert len(pairs) == len(truth)
        found = {c.source_order: d for d, c in pairs}
        for box in truth:
            assert iou(found[box.source_order].bbox_pt(72), box.bbox_pt) >= 0.95
        for i, (a, _) in enumerate(pairs):
            for b, _ in pairs[i + 1:]:
                if a.kind is b.kind:
                    ax1, ay1, ax2, ay2 = a.bbox_px
                    bx1, by1, bx2, by2 = b.bbox_px
                    assert min(ax2, bx2) <= max(ax1, bx1) or min(ay2, by2) <= max(ay1, by1)


# -- drift -------------------------------------------------------------------


def _rendered_with_regions(dpi=72):
    ir = random_ir(random.Random(21), max_pages=1, per_page=(4, 5))
    base, col = toy_render(ir, dpi), toy_render(inject_colors(ir, PAL), dpi)
    return base.pages[0], extract_regions(diff_pages(base.pages[0], col.pages[0], PAL), PAL)


def test_identical_renders_no_drift():
    p, regions = _rendered_with_regions()
    rep = detect_drift(p, p, regions)
    assert rep.registered_shift_px == (0, 0)
    assert rep.mismatched_component_fraction == 0 and not rep.excluded


def test_shifted_render_registered():
    p, regions = _rendered_with_regions()
    moved = RasterPage(np.full_like(p.pixels, 255), p.dpi, p.page_size_pt)
    moved.pixels[:, 2:] = p.pixels[:, :-2]
    rep = detect_drift(p, moved, regions)
    assert rep.registered_shift_px == (2, 0)
    assert rep.mismatched_component_fraction == 0 and not rep.excluded


def test_one_of_ten_corrupted_excludes():
    base = page(200, 200)
    regions = []
    from docanno.render import RegionDetection
    for i in range(10):
        x = 20 * i
        base.pixels[5:15, x + 2:x + 18] = (40, 40, 40)
        regions.append(RegionDetection(ComponentKind.TEXT, (x, 0, x + 20, 20), 400, 0.0))
    other = RasterPage(base.pixels.copy(), base.dpi, base.page_size_pt)
    other.pixels[0:20, 180:200] = (200, 30, 30)
    rep = detect_drift(base, other, regions)
    assert rep.mismatched == (9,)
    assert rep.mismatched_component_fraction == pytest.approx(0.1)
    assert rep.excluded


def test_drift_size_mismatch():
    with pytest.raises(RasterError):
        detect_drift(page(10, 10), page(11, 10), [])


# -- scanned detection ---------------------------------------------------------


def test_constant_page_entropy_zero():
    p = page()
    assert grayscale_entropy(p) == 0.0
    assert classify_scanned(p) is ScanClass.RENDERED_TEXT


def test_noise_page_scanned():
    p = page(256, 256)
    gray = np.random.default_rng(1).integers(0, 256, (256, 256), dtype=np.uint8)
    p.pixels[:] = gray[..., None]
    assert grayscale_entropy(p) == pytest.approx(8.0, abs=0.01)
    assert classify_scanned(p) is ScanClass.SCANNED
    # color noise concentrates in the middle of the luma histogram but stays above the bound
    p.pixels[:] = np.random.default_rng(2).integers(0, 256, p.pixels.shape, dtype=np.uint8)
    assert classify_scanned(p) is ScanClass.SCANNED


def test_toy_text_page_well_below_rendered_bound():
    p = toy_render(random_ir(random.Random(2)), 144).pages[0]
    assert grayscale_entropy(p) < 4.5
    assert classify_scanned(p) is ScanClass.RENDERED_TEXT


def test_middle_entropy_indeterminate():
    p = page(64, 64)
    # 64 equally likely gray levels -> exactly 6 bits
    p.pixels[:] = (np.arange(64 * 64).reshape(64, 64) % 64 * 4)[..., None].astype(np.uint8)
    assert grayscale_entropy(p) == pytest.approx(6.0)
    assert classify_scanned(p) is ScanClass.INDETERMINATE


@given(st.integers(0, 1000), st.integers(2, 4))
@settings(max_examples=20, deadline=None)
def test_entropy_invariant_to_integer_upscale(seed, k):
    px = np.random.default_rng(seed).integers(0, 256, (20, 30, 3), dtype=np.uint8)
    small = RasterPage(px, 72, (30.0, 20.0))
    big = RasterPage(px.repeat(k, axis=0).repeat(k, axis=1), 72, (30.0 * k, 20.0 * k))
    assert grayscale_entropy(big) == pytest.approx(grayscale_entropy(small))
    assert classify_scanned(big) is classify_scanned(small)
