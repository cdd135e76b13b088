"""Command-line entry point."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .docmodel import IR_VERSION, ColorPalette, DocumentIR, inject_colors

log = logging.getLogger("docanno")


def _versions() -> str:
    from .doctag import DOCTAG_VERSION
    from .quality.kn import MAGIC
    from .synth import POS_LOG_VERSION

    return (f"docanno {_package_version()}\n"
            f"ir_version {IR_VERSION}\n"
            f"doctag_grammar {DOCTAG_VERSION}\n"
            f"knlm {MAGIC.decode()}\n"
            f"pos_log {POS_LOG_VERSION}")


def _package_version() -> str:
    try:
        from importlib.metadata import version
        return version("docanno")
    except Exception:
        return "unknown"


def _config(args, **overrides):
    from .pipeline import PipelineConfig
    extra = {k: v for k, v in overrides.items() if v is not None}
    return PipelineConfig.load(getattr(args, "config", None), extra)


def cmd_ingest(args) -> int:
    from .ingest import DedupStore, ingest_candidates, parse_wat

    with DedupStore(args.store) as store:
        cands = [c for path in args.wat for c in parse_wat(path, args.snapshot)]
        res = ingest_candidates(cands, store)
    Path(args.out).write_text("".join(u + "\n" for u in res.canonical), encoding="utf-8")
    for rec in res.audit:
        print(json.dumps(rec, sort_keys=True), file=sys.stderr)
    print(json.dumps(res.funnel(), sort_keys=True))
    return 0


def cmd_safety(args) -> int:
    from .ingest import safety_check

    for path in args.files:
        v = safety_check(Path(path).read_bytes(), args.type or Path(path).suffix)
        print(json.dumps({"file": str(path), **v.to_dict()}, sort_keys=True))
    return 0


def cmd_annotate(args) -> int:
    from .pipeline import run_annotate

    overrides = {"dpi": args.dpi, "tau": args.tau, "rho": args.rho, "palette_path": args.palette,
                 "parallelism": args.jobs, "seed": args.seed}
    if args.model:
        overrides["models"] = dict(m.split("=", 1) for m in args.model)
    if args.renderer:
        overrides["renderer"] = args.renderer.split()
    cfg = _config(args, **overrides)
    summary = run_annotate(cfg, args.inputs, args.out)
    print(json.dumps(summary.funnel, sort_keys=True))
    return 0


def cmd_render(args) -> int:
    from .render import toy_render

    ir = DocumentIR.from_json(Path(args.input).read_text(encoding="utf-8"))
    if args.palette:
        ir = inject_colors(ir, ColorPalette.load(args.palette))
    res = toy_render(ir, args.dpi)
    for n, (page, words) in enumerate(zip(res.pages, res.words), 1):
        target = Path(args.out.replace("%d", str(n)))
        page.save_png(target)
        target.with_suffix(".words.jsonl").write_text("".join(w.to_json() + "\n" for w in words), encoding="utf-8")
    for w in res.warnings:
        print(w, file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    from .doctag import serialize_doctag
    from .synth import PageGeometry, UnstablePassesError, assemble_synthetic_page, parse_pos_log, validate_passes

    log_ = parse_pos_log(Path(args.pos).read_text(encoding="utf-8"))
    for n, msg in log_.errors:
        print(json.dumps({"stage": "pos_log", "line": n, "reason": msg}), file=sys.stderr)
    texts = json.loads(Path(args.texts).read_text(encoding="utf-8"))
    geo = PageGeometry.parse(args.geo)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.pos).stem
    funnel = {"pages": 0, "kept": 0, "unstable": 0}
    for page_no in sorted({r.page for r in log_.records}):
        recs = [r for r in log_.records if r.page == page_no]
        funnel["pages"] += 1
        rep = validate_passes(recs, args.tolerance)
        if not rep.stable:
            funnel["unstable"] += 1
            print(json.dumps({"stage": "passes", "page": page_no, "reason": "unstable", "offenders": rep.offenders,
                              "max_drift_pt": rep.max_drift_pt}), file=sys.stderr)
            continue
        try:
            page = assemble_synthetic_page([r for r in recs if r.pass_no == 3], texts, geo, args.language, check=recs)
        except UnstablePassesError as exc:  # pragma: no cover - guarded above
            print(json.dumps({"stage": "assemble", "page": page_no, "reason": str(exc)}), file=sys.stderr)
            continue
        (out / f"{stem}_p{page_no}.doctag").write_text(serialize_doctag(page), encoding="utf-8")
        (out / f"{stem}_p{page_no}.json").write_text(json.dumps(page.to_dict(), ensure_ascii=False, indent=1),
                                                    encoding="utf-8")
        funnel["kept"] += 1
    print(json.dumps(funnel, sort_keys=True))
    return 0


def cmd_filter(args) -> int:
    from .align import AnnotatedPage
    from .quality import KneserNeyModel, gate_page

    model = KneserNeyModel.load(args.model) if args.model else None
    kept = 0
    for path in args.pages:
        page = AnnotatedPage.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        q = gate_page(page, model, args.tau, args.rho)
        kept += q.verdict.value == "keep"
        print(json.dumps({"page": str(path), **q.to_dict()}, ensure_ascii=False, sort_keys=True))
    print(json.dumps({"pages": len(args.pages), "kept": kept}), file=sys.stderr)
    return 0


def cmd_train_lm(args) -> int:
    from .quality import tokenize, train_kn

    lines = []
    for path in args.corpus:
        lines += [l for l in Path(path).read_text(encoding="utf-8").splitlines() if l.strip()]
    model = train_kn([tokenize(l) for l in lines], order=args.order, discount=args.discount)
    model.save(args.out)
    print(json.dumps({"sequences": len(lines), "vocabulary": len(model.vocabulary), "out": args.out}))
    return 0


def cmd_eval(args) -> int:
    from .pipeline import run_eval

    attrs = json.loads(Path(args.attr_file).read_text(encoding="utf-8")) if args.attr_file else None
    try:
        run = run_eval(args.pred_dir, args.gt_dir, attrs)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for w in run.report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    out = Path(args.out)
    out.write_text(run.report.to_json(), encoding="utf-8")
    out.with_suffix(".csv").write_text(run.report.to_csv(), encoding="utf-8")
    agg = run.report.to_dict()["aggregate"]
    print(json.dumps(agg, sort_keys=True))
    return 0


def cmd_bench(args) -> int:
    from .align import AnnotatedPage
    from .bench import Candidate, DifficultyWeights, difficulty, kmeans, manifest_jsonl, page_features, stratified_sample

    index = json.loads(Path(args.pages).read_text(encoding="utf-8"))
    base = Path(args.pages).parent
    ids, langs, feats = [], [], []
    for entry in index:
        page = AnnotatedPage.from_dict(json.loads((base / entry["path"]).read_text(encoding="utf-8")))
        ids.append(entry.get("page_id") or Path(entry["path"]).stem)
        langs.append(entry.get("language") or page.language or "und")
        feats.append(page_features(page))
    weights = DifficultyWeights(json.loads(Path(args.weights).read_text())) if args.weights else DifficultyWeights()
    clusters = kmeans(feats, min(args.k, len(feats)), args.seed) if feats else []
    scores: dict[int, float] = {}
    for lang in sorted(set(langs)):
        idx = [i for i, l in enumerate(langs) if l == lang]
        for i, s in zip(idx, difficulty([feats[i] for i in idx], weights)):
            scores[i] = s
    cands = [Candidate(ids[i], langs[i], scores[i], clusters[i]) for i in range(len(ids))]
    rows = stratified_sample(cands, args.cap, args.seed)
    text = manifest_jsonl(rows)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="docanno", description="Model-free document annotation and evaluation.")
    p.add_argument("--version", action="version", version=_versions())
    p.add_argument("--config", help="JSON file overriding pipeline defaults")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="extract, canonicalize and dedup document URLs from WAT files")
    s.add_argument("--wat", nargs="+", required=True)
    s.add_argument("--store", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--snapshot", help="snapshot id (default: taken from the file name)")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("safety", help="screen downloaded archives")
    s.add_argument("files", nargs="+")
    s.add_argument("--type", help="declared type (default: file suffix)")
    s.set_defaults(func=cmd_safety)

    s = sub.add_parser("annotate", help="differential-rendering annotation of .docx or IR JSON files")
    s.add_argument("inputs", nargs="+")
    s.add_argument("--out", required=True)
    s.add_argument("--dpi", type=int)
    s.add_argument("--tau", type=float)
    s.add_argument("--rho", type=float)
    s.add_argument("--palette")
    s.add_argument("--model", action="append", help="LANG=path.knlm, repeatable")
    s.add_argument("--renderer", help="external renderer command")
    s.add_argument("--jobs", type=int)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_annotate)

    s = sub.add_parser("render", help="toy renderer (also the renderer contract reference)")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--dpi", type=int, default=144)
    s.add_argument("--palette")
    s.add_argument("--out", required=True, help="output pattern, e.g. page_%%d.png")
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("synth-annotate", help="annotate typeset pages from a position log")
    s.add_argument("--pos", required=True)
    s.add_argument("--texts", required=True)
    s.add_argument("--geo", required=True, help="WxH@DPI, e.g. 612x792@144")
    s.add_argument("--out", required=True)
    s.add_argument("--tolerance", type=float, default=2.0)
    s.add_argument("--language")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("filter", help="quality-gate annotated page JSON files")
    s.add_argument("pages", nargs="+")
    s.add_argument("--model")
    s.add_argument("--tau", type=float, default=120.0)
    s.add_argument("--rho", type=float, default=0.6)
    s.set_defaults(func=cmd_filter)

    s = sub.add_parser("train-lm", help="train a character Kneser-Ney model")
    s.add_argument("corpus", nargs="+")
    s.add_argument("--out", required=True)
    s.add_argument("--order", type=int, default=5)
    s.add_argument("--discount", type=float, default=0.75)
    s.set_defaults(func=cmd_train_lm)

    s = sub.add_parser("eval", help="score markdown predictions against DocTag ground truth")
    s.add_argument("--pred-dir", required=True)
    s.add_argument("--gt-dir", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--attr-file")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("bench", help="difficulty-stratified benchmark sampling")
    s.add_argument("--pages", required=True, help="JSON index: [{path, page_id?, language?}]")
    s.add_argument("--cap", type=int, default=100)
    s.add_argument("--k", type=int, default=8)
    s.add_argument("--seed", type=int, default=7)
    s.add_argument("--weights")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
