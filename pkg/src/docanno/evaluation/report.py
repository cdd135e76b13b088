"""Overall score, report aggregation, and report files."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable

from .page import PageScores

METRICS = ("text_edit", "table_teds", "formula_edit", "read_order_edit", "chart_score", "cdm", "overall")


class ScoreRangeError(ValueError):
    pass


def overall_score(text_edit: float, table_teds: float) -> float:
    """Mean of text accuracy and table TEDS, both on a 0..100 scale."""
    if not 0.0 <= text_edit <= 1.0:
        raise ScoreRangeError(f"text_edit must lie in [0, 1], got {text_edit}")
    if not 0.0 <= table_teds <= 100.0:
        raise ScoreRangeError(f"table_teds must lie in [0, 100], got {table_teds}")
    return ((1.0 - text_edit) * 100.0 + table_teds) / 2.0


def _mean(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


def aggregate(rows: list[PageScores]) -> dict:
    """Metric means over pages (pages without a metric are skipped for it)."""
    out: dict = {"pages": len(rows)}
    for m in METRICS[:-1]:
        out[m] = _mean(getattr(r, m) for r in rows)
    te, tt = out["text_edit"], out["table_teds"]
    if te is None:
        out["overall"] = None
    elif tt is None:
        out["overall"] = (1.0 - te) * 100.0
    else:
        out["overall"] = overall_score(te, tt)
    return out


@dataclass
class EvalReport:
    per_page: list[PageScores]
    attributes: dict[str, dict[str, str]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def overall(self) -> float | None:
        return aggregate(self.per_page)["overall"]

    def by_language(self) -> dict[str, dict]:
        groups: dict[str, list[PageScores]] = {}
        for r in self.per_page:
            groups.setdefault(r.language or "und", []).append(r)
        return {k: aggregate(v) for k, v in sorted(groups.items())}

    def by_attribute(self) -> dict[str, dict[str, dict]]:
        out: dict[str, dict[str, list[PageScores]]] = {}
        for r in self.per_page:
            for name, value in sorted(self.attributes.get(r.page_id, {}).items()):
                out.setdefault(name, {}).setdefault(str(value), []).append(r)
        return {n: {v: aggregate(rows) for v, rows in sorted(vals.items())} for n, vals in sorted(out.items())}

    def to_dict(self) -> dict:
        return {
            "per_page": [r.to_dict() for r in self.per_page],
            "aggregate": aggregate(self.per_page),
            "by_language": self.by_language(),
            "by_attribute": self.by_attribute(),
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("page_id", "language") + METRICS)
        for r in self.per_page:
            w.writerow([r.page_id, r.language or ""] + ["" if getattr(r, m) is None else f"{getattr(r, m):.6f}"
                                                         for m in METRICS])
        return buf.getvalue()
