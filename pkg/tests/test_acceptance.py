"""Exit criteria. Each test prints one PASS/FAIL line; tolerances are pinned here."""

from __future__ import annotations

import math
import random
import time

import pytest

from docanno.align import AnnotatedPage, PageComponent, Region, assign_words, iou
from docanno.bench import Candidate, difficulty, kmeans, manifest_jsonl, page_features, stratified_sample
from docanno.docmodel import ColorPalette, ComponentKind, inject_colors
from docanno.doctag import export, parse_doctag, serialize_doctag
from docanno.evaluation import evaluate_page, levenshtein, overall_score, teds_trees
from docanno.doctag import DomTree
from docanno.pipeline import PipelineConfig, annotate_ir, match_detections, run_annotate
from docanno.quality import Verdict, gate_page, perplexity, tokenize
from docanno.render import ScanClass, classify_scanned, diff_pages, extract_regions, toy_render
from docanno.render.raster import SUPPORTED_DPI, RasterPage
from docanno.synth import PageGeometry, PosRecord, from_image_px, sp_to_pt, to_image_px, validate_passes

from generators import clean_ir, random_doctag_page, random_gt_page, random_ir, random_page
from oracles import all_strings, canonical_tree_pairs, forest_distance, label_shape, lev_dp, tree_shapes, tree_size

pytestmark = pytest.mark.acceptance

OVERALL_TOL = 0.02
IOU_MIN = 0.95
TABLE3_BUDGET_S = 1.0
ORACLE_BUDGET_S = 120.0
CLOSURE_BUDGET_S = 30.0
PAGES_PER_S_TARGET = 10.0


def report(capsys, n: int, ok: bool, detail: str):
    with capsys.disabled():
        print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")


# -- 1 ------------------------------------------------------------------------

# (system, text_edit, table_teds, published overall)
TABLE3 = [
    ("Gemini-2.0-Pro", 0.090, 68.50, 79.75),
    ("GPT4o", 0.117, 62.26, 75.30),
    ("Qwen3-VL", 0.081, 51.86, 71.87),
    ("Qwen2.5-VL", 0.174, 50.59, 66.59),
    ("InternVL3.5", 0.095, 70.80, 77.20),
    ("DotsOCR", 0.068, 65.40, 79.29),
    ("PaddleOCR-VL", 0.078, 73.90, 80.10),
    ("DeepseekOCR", 0.082, 71.54, 81.66),
    ("MonkeyOCR-pro", 0.095, 72.80, 78.25),
    ("Dolphin", 0.160, 58.30, 71.17),
    ("Nanonets-OCR-s", 0.088, 71.90, 81.53),
    ("Nanonets-OCR2", 0.088, 66.24, 78.70),
    ("Chandra", 0.071, 69.79, 81.33),
    ("MinerU2.5", 0.267, 72.79, 73.07),
    ("proposed (Deepseek base)", 0.055, 72.24, 83.37),
]


def test_c1_table3_overall(capsys):
    t0 = time.perf_counter()
    misses = []
    for name, te, teds_, published in TABLE3:
        got = overall_score(te, teds_)
        # round away float noise so rows exactly 0.02 off count as inside the band
        if round(abs(got - published), 9) > OVERALL_TOL:
            misses.append(f"{name} {got:.3f} vs {published:.2f}")
    dt = time.perf_counter() - t0
    ok = not misses and dt < TABLE3_BUDGET_S
    report(capsys, 1, ok, f"{len(TABLE3) - len(misses)}/{len(TABLE3)} rows within ±{OVERALL_TOL} in {dt:.4f}s"
           + (f"; off: {'; '.join(misses)}" if misses else ""))
    assert dt < TABLE3_BUDGET_S
    assert not misses, misses


# -- 2 ------------------------------------------------------------------------

TAGS = ("table", "tr", "td")


def _dom(t) -> DomTree:
    return DomTree(t[0], children=[_dom(c) for c in t[1]])


def _teds_expected(a, b) -> float:
    return 100.0 * (1.0 - forest_distance(a, b) / max(tree_size(a), tree_size(b)))


def _random_tree(rng: random.Random, max_nodes: int = 8):
    n = rng.randint(1, max_nodes)
    shape = rng.choice(tree_shapes(n))
    return label_shape(shape, [rng.choice(TAGS) for _ in range(n)])


def test_c2_metric_oracles(capsys):
    t0 = time.perf_counter()
    lev_bad = 0
    strings = list(all_strings("abc", 5))
    for a in strings:
        for b in strings:
            lev_bad += levenshtein(a, b) != lev_dp(a, b)
    rng = random.Random(2024)
    for _ in range(1000):
        a = "".join(rng.choice("abcd") for _ in range(rng.randint(6, 150)))
        b = "".join(rng.choice("abcd") for _ in range(rng.randint(6, 150)))
        lev_bad += levenshtein(a, b) != lev_dp(a, b)
    lev_pairs = len(strings) ** 2 + 1000

    # every pair with n1 + n2 <= 8 nodes, labels canonical up to a joint renaming
    # (edit distance is invariant under renaming both trees' labels together)
    ted_bad = ted_pairs = 0
    cache: dict = {}
    for a, b in canonical_tree_pairs(8, TAGS):
        ted_pairs += 1
        da = cache.get(a) or cache.setdefault(a, _dom(a))
        db = cache.get(b) or cache.setdefault(b, _dom(b))
        if not math.isclose(teds_trees(da, db), _teds_expected(a, b), abs_tol=1e-9):
            ted_bad += 1
    # plus random pairs where each tree alone has up to 8 nodes
    for _ in range(1500):
        a, b = _random_tree(rng), _random_tree(rng)
        ted_pairs += 1
        if not math.isclose(teds_trees(_dom(a), _dom(b)), _teds_expected(a, b), abs_tol=1e-9):
            ted_bad += 1
    dt = time.perf_counter() - t0
    ok = lev_bad == 0 and ted_bad == 0 and dt < ORACLE_BUDGET_S
    report(capsys, 2, ok, f"levenshtein {lev_bad}/{lev_pairs} mismatches, teds {ted_bad}/{ted_pairs} mismatches, "
                          f"{dt:.1f}s (budget {ORACLE_BUDGET_S:.0f}s)")
    assert lev_bad == 0 and ted_bad == 0
    assert dt < ORACLE_BUDGET_S


# -- 3 ------------------------------------------------------------------------


def test_c3_differential_rendering_closure(capsys):
    palette = ColorPalette.default()
    dpi = 144
    t0 = time.perf_counter()
    comps = recovered = words = assigned = 0
    problems = []
    for seed in range(50):
        ir = random_ir(random.Random(seed))
        base = toy_render(ir, dpi)
        col = toy_render(inject_colors(ir, palette), dpi)
        assert len(base.pages) == len(col.pages)
        dets = [extract_regions(diff_pages(b, c, palette), palette) for b, c in zip(base.pages, col.pages)]
        for page_no, (truth, pairs, page_words, owners) in enumerate(
                zip(base.boxes, match_detections(ir, dets), base.words, base.word_owner)):
            gt = {b.source_order: b for b in truth}
            found = {c.source_order: d for d, c in pairs if c is not None}
            comps += len(gt)
            extra = len(pairs) - len(found)
            if extra:
                problems.append(f"ir {seed} page {page_no}: {extra} unmatched detections")
            for so, box in gt.items():
                if so in found and iou(found[so].bbox_pt(dpi), box.bbox_pt) >= IOU_MIN:
                    recovered += 1
                else:
                    problems.append(f"ir {seed} page {page_no}: component {so} not recovered")
            regions = [Region(d.kind, d.bbox_pt(dpi), c.provenance.confidence, c.source_order)
                       for d, c in pairs if c is not None]
            page = assign_words(page_words, regions, 0.7)
            by_owner: dict[int, list[str]] = {}
            for w, o in zip(page_words, owners):
                by_owner.setdefault(o, []).append(w.text)
            words += len(page_words)
            for c in page.components:
                expect = by_owner.get(c.source_order, [])
                if c.text == " ".join(expect):
                    assigned += len(expect)
            if page.unassigned_words:
                problems.append(f"ir {seed} page {page_no}: {len(page.unassigned_words)} unassigned words")
    dt = time.perf_counter() - t0
    ok = recovered == comps and assigned == words and not problems and dt < CLOSURE_BUDGET_S
    report(capsys, 3, ok, f"{recovered}/{comps} components at IoU>={IOU_MIN}, {assigned}/{words} words assigned, "
                          f"{dt:.1f}s (budget {CLOSURE_BUDGET_S:.0f}s)")
    assert not problems, problems[:10]
    assert recovered == comps and assigned == words
    assert dt < CLOSURE_BUDGET_S


# -- 4 ------------------------------------------------------------------------


class ConstantModel:
    """Every token gets probability ``p``."""

    order = 2

    def __init__(self, p: float):
        self.p = p

    def prob(self, token, context):
        return self.p


def models_around(target: float, tokens) -> tuple[ConstantModel, ConstantModel]:
    """Models whose perplexity is the closest attainable value at or below, and above, ``target``.

    Perplexity is exp(mean nll); exp of no double equals 120.0 exactly, so the
    exact boundary is also checked with a stubbed scorer below.
    """
    seen = []
    for direction in (0.0, math.inf):
        q = 1.0 / target
        for _ in range(200):
            seen.append((perplexity(ConstantModel(q), tokens), q))
            q = math.nextafter(q, direction)
    below = max((g, q) for g, q in seen if g <= target)
    above = min((g, q) for g, q in seen if g > target)
    return ConstantModel(below[1]), ConstantModel(above[1])


def _page(native_chars: int, total_chars: int) -> AnnotatedPage:
    comps = [PageComponent(ComponentKind.TEXT, (10, 10, 300, 40), "n" * native_chars, 1.0, 0, 0)]
    if total_chars > native_chars:
        comps.append(PageComponent(ComponentKind.TEXT, (10, 50, 300, 90), "h" * (total_chars - native_chars),
                                   0.5, 1, 1))
    return AnnotatedPage(comps, (612.0, 792.0), "en")


def test_c4_threshold_fidelity(capsys, monkeypatch):
    checks = {}
    page = _page(100, 100)
    tokens = tokenize(page.text)
    below, above = models_around(120.0, tokens)
    checks["ppl just <= 120 keeps"] = gate_page(page, below).verdict is Verdict.KEEP
    checks["ppl just > 120 drops"] = gate_page(page, above).verdict is Verdict.DROP_PERPLEXITY
    checks["ppl 120.000001 drops"] = gate_page(page, ConstantModel(1 / 120.000001)).verdict is Verdict.DROP_PERPLEXITY
    with monkeypatch.context() as m:
        m.setattr("docanno.quality.gate.perplexity", lambda model, tokens: 120.0)
        checks["ppl == 120.0 keeps"] = gate_page(page, below).verdict is Verdict.KEEP
    checks["rel == 0.6 keeps"] = gate_page(_page(60, 100), None).verdict is Verdict.KEEP
    checks["rel 0.6-eps drops"] = gate_page(_page(599_999, 1_000_000), None).verdict is Verdict.DROP_RELIABILITY

    def recs(drift_pt):
        shift = round(drift_pt * 65536)
        return [PosRecord("e1", ComponentKind.TEXT, 655360, 6553600, 3276800, 655360, 2, 1),
                PosRecord("e1", ComponentKind.TEXT, 655360 + shift, 6553600, 3276800, 655360, 3, 1)]

    checks["2.5pt drift rejected"] = not validate_passes(recs(2.5)).stable
    checks["1.5pt drift accepted"] = validate_passes(recs(1.5)).stable
    checks["2.0pt drift accepted"] = validate_passes(recs(2.0)).stable

    import numpy as np

    blank = RasterPage.blank((612.0, 792.0), 72)
    noise = RasterPage(np.random.default_rng(0).integers(0, 256, blank.pixels.shape, dtype=np.uint8), 72,
                       (612.0, 792.0))
    text_page = toy_render(clean_ir(random.Random(1)), 144).pages[0]
    checks["constant -> rendered_text"] = classify_scanned(blank) is ScanClass.RENDERED_TEXT
    checks["noise -> scanned"] = classify_scanned(noise) is ScanClass.SCANNED
    checks["toy text -> rendered_text"] = classify_scanned(text_page) is ScanClass.RENDERED_TEXT
    failed = [k for k, v in checks.items() if not v]
    report(capsys, 4, not failed, f"{len(checks) - len(failed)}/{len(checks)} boundary checks"
           + (f"; failed: {failed}" if failed else ""))
    assert not failed, failed


# -- 5 ------------------------------------------------------------------------


def _bench_manifest(seed: int) -> str:
    rng = random.Random(99)
    pages = [random_page(rng) for _ in range(240)]
    feats = [page_features(p) for p in pages]
    clusters = kmeans(feats, 6, seed)
    langs = ["en" if i % 3 else "fr" for i in range(len(pages))]
    cands = []
    for lang in ("en", "fr"):
        idx = [i for i, l in enumerate(langs) if l == lang]
        for i, d in zip(idx, difficulty([feats[i] for i in idx])):
            cands.append(Candidate(f"p{i:04d}", lang, d, clusters[i]))
    return manifest_jsonl(stratified_sample(cands, 60, seed))


def _tree_bytes(d) -> dict:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_c5_round_trip_and_determinism(capsys, tmp_path):
    rng = random.Random(5)
    rt_bad = 0
    for _ in range(1000):
        p = random_doctag_page(rng)
        rt_bad += parse_doctag(serialize_doctag(p)) != p

    worst = 0.0
    coord_bad = 0
    vrng = random.Random(6)
    values = [0, 1, 65535, 65536, 2 ** 31 - 1] + [vrng.randrange(0, 792 * 65536) for _ in range(2000)]
    for dpi in SUPPORTED_DPI:
        geo = PageGeometry(612.0, 792.0, dpi)
        for v in values:
            pt = sp_to_pt(v)
            x_px, y_px = to_image_px(pt, pt, geo)
            bx, by = from_image_px(x_px, y_px, geo)
            err = max(abs(bx - pt), abs(by - pt))
            worst = max(worst, err)
            coord_bad += err > 1.0 / (2 * dpi)

    manifests_equal = _bench_manifest(3) == _bench_manifest(3)

    irs = []
    for i in range(3):
        path = tmp_path / f"doc{i}.json"
        path.write_text(random_ir(random.Random(300 + i)).to_json(), encoding="utf-8")
        irs.append(path)
    cfg = PipelineConfig(parallelism=1, seed=11)
    run_annotate(cfg, irs, tmp_path / "run1")
    run_annotate(cfg, irs, tmp_path / "run2")
    outputs_equal = _tree_bytes(tmp_path / "run1") == _tree_bytes(tmp_path / "run2")

    ok = rt_bad == 0 and coord_bad == 0 and manifests_equal and outputs_equal
    report(capsys, 5, ok, f"doctag round trip {1000 - rt_bad}/1000, coordinate round trip worst {worst:.2e}pt "
                          f"({coord_bad} over 1/(2*dpi)), manifests identical={manifests_equal}, "
                          f"pipeline outputs identical={outputs_equal}")
    assert rt_bad == 0 and coord_bad == 0
    assert manifests_equal and outputs_equal


# -- 6 ------------------------------------------------------------------------


def test_c6_stratified_sampling(capsys):
    rng = random.Random(6)
    pool = [Candidate(f"p{i:03d}", "de", rng.random(), i % 5) for i in range(300)]
    rows = stratified_sample(pool, 100, seed=1)
    counts = {t: sum(r.tercile == t for r in rows) for t in ("easy", "medium", "hard")}
    small = [Candidate(f"s{i:02d}", "de", rng.random(), 0) for i in range(40)]
    kept = {r.page_id for r in stratified_sample(small, 100, seed=1)}
    ok = counts == {"easy": 33, "medium": 33, "hard": 34} and kept == {c.page_id for c in small}
    report(capsys, 6, ok, f"300-page pool -> {counts}; 40-page pool kept {len(kept)}/40")
    assert counts == {"easy": 33, "medium": 33, "hard": 34}
    assert kept == {c.page_id for c in small}


# -- 7 ------------------------------------------------------------------------


def test_c7_self_evaluation_closure(capsys):
    rng = random.Random(7)
    bad = []
    n = 300
    for i in range(n):
        gt = random_gt_page(rng)
        s = evaluate_page(export(gt, "markdown"), gt, f"p{i}")
        if (s.text_edit not in (0.0, None) or s.table_teds not in (100.0, None)
                or s.read_order_edit not in (0.0, None) or s.overall != 100.0):
            bad.append((i, s))
    report(capsys, 7, not bad, f"{n - len(bad)}/{n} pages with text_edit 0, TEDS 100, read_order_edit 0, overall 100")
    assert not bad, bad[:3]


# -- 8 ------------------------------------------------------------------------


def test_c8_throughput(capsys):
    cfg = PipelineConfig(parallelism=1)
    irs = [random_ir(random.Random(800 + s)) for s in range(20)]
    annotate_ir(irs[0], cfg)  # warm caches (language profiles)
    t0 = time.perf_counter()
    pages = sum(len(annotate_ir(ir, cfg, f"d{i}").pages) for i, ir in enumerate(irs))
    rate = pages / (time.perf_counter() - t0)
    ok = rate >= PAGES_PER_S_TARGET
    report(capsys, 8, ok, f"{rate:.1f} pages/s/core at 144 dpi over {pages} pages "
                          f"(non-binding target {PAGES_PER_S_TARGET:.0f})")
    # non-binding: recorded, never failed on slow hardware
    assert pages > 0
