"""End-to-end orchestration: annotate documents, gate pages, evaluate predictions."""

from __future__ import annotations

import json
import logging
import os
import subprocess
import tempfile
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

from .align import AnnotatedPage, Region, WordBox, assign_words, read_words_jsonl
from .docmodel import (
    ColorPalette,
    ComponentKind,
    DocumentIR,
    ParseError,
    RepairError,
    inject_colors,
    parse_structure,
    strip_colors,
)
from .doctag import parse_doctag, serialize_doctag
from .evaluation import EvalReport, evaluate_page
from .ingest import safety_check
from .quality import KneserNeyModel, gate_page
from .quality.gate import Verdict
from .render import (
    SUPPORTED_DPI,
    RasterPage,
    RegionDetection,
    ScanClass,
    classify_scanned,
    detect_drift,
    diff_pages,
    extract_regions,
    toy_render,
)
from .render.toy import LETTER_PT

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    palette_path: str | None = None
    diff_threshold: int = 12
    min_area: int = 9
    containment: float = 0.7
    tau: float = 120.0
    rho: float = 0.6
    drift_pt: float = 2.0
    entropy_scanned: float = 6.5
    entropy_rendered: float = 4.5
    drift_max_shift: int = 3
    drift_exclude: float = 0.05
    region_agreement: float = 0.9
    blank_max: float = 0.98
    dpi: int = 144
    page_size_pt: tuple[float, float] = LETTER_PT
    renderer: list[str] | None = None
    models: dict[str, str] = field(default_factory=dict)
    seed: int = 0
    parallelism: int = field(default_factory=lambda: os.cpu_count() or 1)

    def __post_init__(self):
        self.page_size_pt = tuple(self.page_size_pt)
        checks = [
            (0 <= self.diff_threshold < 32, "diff_threshold must lie in [0, 32)"),
            (self.min_area >= 1, "min_area must be >= 1"),
            (0 < self.containment <= 1, "containment must lie in (0, 1]"),
            (self.tau > 0, "tau must be positive"),
            (0 <= self.rho <= 1, "rho must lie in [0, 1]"),
            (self.drift_pt >= 0, "drift_pt must be >= 0"),
            (0 <= self.entropy_rendered <= self.entropy_scanned <= 8, "entropy bounds must satisfy 0 <= rendered <= scanned <= 8"),
            (0 <= self.drift_max_shift <= 16, "drift_max_shift must lie in [0, 16]"),
            (0 <= self.drift_exclude <= 1, "drift_exclude must lie in [0, 1]"),
            (0 < self.region_agreement <= 1, "region_agreement must lie in (0, 1]"),
            (0 < self.blank_max <= 1, "blank_max must lie in (0, 1]"),
            (self.renderer is not None or self.dpi in SUPPORTED_DPI, f"dpi must be one of {SUPPORTED_DPI}"),
            (self.page_size_pt[0] > 0 and self.page_size_pt[1] > 0, "page size must be positive"),
            (self.parallelism >= 1, "parallelism must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path, overrides: dict | None = None) -> "PipelineConfig":
        d = json.loads(Path(path).read_text(encoding="utf-8")) if path else {}
        d.update(overrides or {})
        return cls.from_dict(d)

    def palette(self) -> ColorPalette:
        return ColorPalette.load(self.palette_path) if self.palette_path else ColorPalette.default()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["page_size_pt"] = list(self.page_size_pt)
        return d


# -- rendering back ends -------------------------------------------------------


@dataclass
class RenderedDoc:
    pages: list[RasterPage]
    words: list[list[WordBox]]


def _render_toy(ir: DocumentIR, cfg: PipelineConfig) -> RenderedDoc:
    r = toy_render(ir, cfg.dpi, page_size_pt=cfg.page_size_pt)
    for w in r.warnings:
        log.warning(w)
    return RenderedDoc(r.pages, r.words)


def _render_external(ir: DocumentIR, cfg: PipelineConfig) -> RenderedDoc:
    """Run the renderer command: ``<cmd> --in ir.json --dpi N --out dir/page_%d.png``."""
    with tempfile.TemporaryDirectory(prefix="docanno-render-") as tmp:
        tmp = Path(tmp)
        (tmp / "ir.json").write_text(ir.to_json(), encoding="utf-8")
        cmd = list(cfg.renderer) + ["--in", str(tmp / "ir.json"), "--dpi", str(cfg.dpi),
                                    "--out", str(tmp / "page_%d.png")]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise RuntimeError(f"renderer failed ({proc.returncode}): {proc.stderr.strip()[:500]}")
        pages, words = [], []
        n = 1
        while (tmp / f"page_{n}.png").exists():
            pages.append(RasterPage.load_png(tmp / f"page_{n}.png", cfg.dpi, cfg.page_size_pt))
            wpath = tmp / f"page_{n}.words.jsonl"
            words.append(read_words_jsonl(wpath.read_text(encoding="utf-8")) if wpath.exists() else [])
            n += 1
        if not pages:
            raise RuntimeError("renderer produced no pages")
        return RenderedDoc(pages, words)


def render(ir: DocumentIR, cfg: PipelineConfig) -> RenderedDoc:
    return _render_external(ir, cfg) if cfg.renderer else _render_toy(ir, cfg)


# -- annotation ----------------------------------------------------------------


@dataclass
class PageOutcome:
    page_no: int
    page: AnnotatedPage | None
    detections: list[RegionDetection]
    verdict: str  # "keep" or a drop reason
    audit: dict


@dataclass
class DocOutcome:
    doc_id: str
    pages: list[PageOutcome]
    failure: str | None = None
    audit: list[dict] = field(default_factory=list)

    @property
    def units(self) -> int:
        return len(self.pages) if self.pages else 1


def match_detections(ir: DocumentIR, per_page: Sequence[Sequence[RegionDetection]]):
    """Pair detections with IR components of the same kind, in flow order across pages.

    Returns, per page, a list of (detection, component or None).
    """
    queues: dict[ComponentKind, list] = defaultdict(list)
    for c in ir.components:
        if not c.is_empty:
            queues[c.kind].append(c)
    out = []
    for dets in per_page:
        page = []
        for d in sorted(dets, key=lambda d: (d.bbox_px[1], d.bbox_px[0])):
            q = queues.get(d.kind)
            page.append((d, q.pop(0) if q else None))
        out.append(page)
    return out


def _regions(pairs, dpi: int) -> list[Region]:
    regions = []
    for det, comp in pairs:
        if comp is None:
            regions.append(Region(det.kind, det.bbox_pt(dpi), 0.5))
            continue
        content = comp.table_grid.to_html() if comp.table_grid is not None else None
        sizes = [r.font_size_pt for r in comp.text_runs]
        regions.append(Region(det.kind, det.bbox_pt(dpi), comp.provenance.confidence, comp.source_order, content,
                              max(sizes) if sizes else None))
    return regions


def annotate_ir(ir: DocumentIR, cfg: PipelineConfig, doc_id: str = "doc",
                models: dict | None = None, palette: ColorPalette | None = None) -> DocOutcome:
    palette = palette or cfg.palette()
    base_ir = strip_colors(ir)
    colored = inject_colors(base_ir, palette)
    base = render(base_ir, cfg)
    col = render(colored, cfg)
    base2 = render(base_ir, cfg)  # second pass, compared for drift
    if len(base.pages) != len(col.pages) or len(base.pages) != len(base2.pages):
        return DocOutcome(doc_id, [], "page_count_mismatch",
                          [{"doc": doc_id, "stage": "render", "reason": "page_count_mismatch"}])

    masks = [diff_pages(b, c, palette, cfg.diff_threshold) for b, c in zip(base.pages, col.pages)]
    detections = [extract_regions(m, palette, cfg.min_area) for m in masks]
    matched = match_detections(base_ir, detections)
    models = models or {}
    outcomes = []
    for n, (page_img, page_img2, dets, pairs, words) in enumerate(
            zip(base.pages, base2.pages, detections, matched, base.words), 1):
        audit = {"doc": doc_id, "page": n}
        scan = classify_scanned(page_img, cfg.entropy_scanned, cfg.entropy_rendered)
        if scan is ScanClass.SCANNED:
            outcomes.append(PageOutcome(n, None, dets, "scanned", {**audit, "stage": "scan", "reason": "scanned"}))
            continue
        drift = detect_drift(page_img, page_img2, dets, cfg.drift_max_shift, cfg.region_agreement, cfg.drift_exclude)
        if drift.excluded:
            outcomes.append(PageOutcome(n, None, dets, "drift", {
                **audit, "stage": "drift", "reason": "drift",
                "mismatched_fraction": drift.mismatched_component_fraction}))
            continue
        page = assign_words(words, _regions(pairs, page_img.dpi), cfg.containment, page_img.page_size_pt,
                            ir.language_hint)
        if not page.components:
            outcomes.append(PageOutcome(n, page, dets, "empty", {**audit, "stage": "align", "reason": "empty"}))
            continue
        lang = ir.language_hint
        q = gate_page(page, models.get(lang) if lang else None, cfg.tau, cfg.rho,
                      pixels=page_img.pixels, blank_max=cfg.blank_max)
        if lang is None:
            lang = q.language
            if models.get(lang) is not None:
                q = gate_page(page, models[lang], cfg.tau, cfg.rho, pixels=page_img.pixels, blank_max=cfg.blank_max)
        page.language = lang
        rec = {**audit, "stage": "gate", "quality": q.to_dict(), "lm": lang in models}
        if q.verdict is Verdict.KEEP:
            outcomes.append(PageOutcome(n, page, dets, "keep", {**rec, "reason": "keep"}))
        else:
            outcomes.append(PageOutcome(n, page, dets, q.verdict.value, {**rec, "reason": q.verdict.value}))
    return DocOutcome(doc_id, outcomes, None, [o.audit for o in outcomes])


def load_models(paths: dict[str, str]) -> dict[str, KneserNeyModel]:
    return {lang: KneserNeyModel.load(p) for lang, p in paths.items()}


def annotate_document(data: bytes, cfg: PipelineConfig, doc_id: str, models: dict | None = None) -> DocOutcome:
    """Run one document; failures are returned as outcomes, never raised."""
    try:
        if data.lstrip()[:1] == b"{":
            ir = DocumentIR.from_json(data.decode("utf-8"))
        else:
            verdict = safety_check(data, "docx")
            if not verdict.passed:
                return DocOutcome(doc_id, [], "unsafe", [{"doc": doc_id, "stage": "safety", "reason": "unsafe",
                                                          "verdict": verdict.to_dict()}])
            ir = parse_structure(data)
    except RepairError as exc:
        return DocOutcome(doc_id, [], "unrepairable", [{"doc": doc_id, "stage": "parse", "reason": "unrepairable",
                                                        "detail": str(exc)}])
    except (ParseError, ValueError) as exc:
        return DocOutcome(doc_id, [], "parse_error", [{"doc": doc_id, "stage": "parse", "reason": "parse_error",
                                                       "detail": str(exc)}])
    try:
        out = annotate_ir(ir, cfg, doc_id, models)
    except Exception as exc:  # isolate per-document failures
        log.exception("document %s failed", doc_id)
        return DocOutcome(doc_id, [], "error", [{"doc": doc_id, "stage": "annotate", "reason": "error",
                                                 "detail": f"{type(exc).__name__}: {exc}"}])
    if ir.repaired:
        for a in out.audit:
            a["repaired"] = list(ir.repair_actions)
    return out


def _worker(args):
    path, cfg = args
    models = load_models(cfg.models)
    return annotate_document(Path(path).read_bytes(), cfg, Path(path).stem, models)


@dataclass
class AnnotateSummary:
    outputs: list[Path]
    funnel: dict
    audit: list[dict]


def run_annotate(cfg: PipelineConfig, inputs: Sequence, out_dir) -> AnnotateSummary:
    """Annotate documents into ``out_dir`` (DocTag + page JSON) with an audit log."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    inputs = sorted(Path(p) for p in inputs)
    jobs = [(str(p), cfg) for p in inputs]
    if cfg.parallelism > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallelism) as ex:
            results = list(ex.map(_worker, jobs))
    else:
        models = load_models(cfg.models)
        results = [annotate_document(p.read_bytes(), cfg, p.stem, models) for p in inputs]

    outputs, audit = [], []
    drops: Counter = Counter()
    units = 0
    for res in results:
        units += res.units
        audit.extend(res.audit)
        if res.failure:
            drops[res.failure] += 1
            continue
        for po in res.pages:
            if po.verdict != "keep":
                drops[po.verdict] += 1
                continue
            stem = f"{res.doc_id}_p{po.page_no}"
            (out_dir / f"{stem}.doctag").write_text(serialize_doctag(po.page), encoding="utf-8")
            (out_dir / f"{stem}.json").write_text(json.dumps(po.page.to_dict(), ensure_ascii=False, indent=1,
                                                             sort_keys=True), encoding="utf-8")
            outputs.append(out_dir / f"{stem}.doctag")
    funnel = {"documents": len(inputs), "units": units, "kept": len(outputs), "drops": dict(sorted(drops.items()))}
    with open(out_dir / "audit.jsonl", "w", encoding="utf-8") as fh:
        for rec in audit:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
        fh.write(json.dumps({"funnel": funnel}, sort_keys=True) + "\n")
    return AnnotateSummary(outputs, funnel, audit)


# -- evaluation ----------------------------------------------------------------


@dataclass
class EvalRun:
    report: EvalReport
    unpaired_pred: list[str]
    unpaired_gt: list[str]


def run_eval(pred_dir, gt_dir, attrs: dict[str, dict] | None = None) -> EvalRun:
    """Score ``*.md`` predictions against ``*.doctag`` ground truth paired by stem."""
    preds = {p.stem: p for p in Path(pred_dir).glob("*.md")}
    gts = {p.stem: p for p in Path(gt_dir).glob("*.doctag")}
    attrs = attrs or {}
    rows, warnings = [], []
    for stem in sorted(set(preds) & set(gts)):
        gt = parse_doctag(gts[stem].read_text(encoding="utf-8"))
        lang = attrs.get(stem, {}).get("language")
        rows.append(evaluate_page(preds[stem].read_text(encoding="utf-8"), gt, stem, lang))
    unpaired_pred = sorted(set(preds) - set(gts))
    unpaired_gt = sorted(set(gts) - set(preds))
    if not rows:
        warnings.append("no prediction/ground-truth pairs found")
    for s in unpaired_pred:
        warnings.append(f"prediction without ground truth: {s}")
    for s in unpaired_gt:
        warnings.append(f"ground truth without prediction: {s}")
    report = EvalReport(rows, {k: {a: v for a, v in d.items() if a != "language"} for k, d in attrs.items()},
                        warnings)
    return EvalRun(report, unpaired_pred, unpaired_gt)
