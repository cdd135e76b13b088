"""Position-log parsing, coordinate transforms, and pass-stability checks for typeset pages."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .align import AnnotatedPage, PageComponent
from .docmodel.kinds import ComponentKind

log = logging.getLogger(__name__)

POS_LOG_VERSION = 1
SP_PER_PT = 65536
DEFAULT_TOLERANCE_PT = 2.0
STABLE_CONFIDENCE = 1.0


@dataclass(frozen=True)
class PosRecord:
    element_id: str
    kind: ComponentKind
    x_sp: int
    y_sp: int  # bottom edge, bottom-left origin
    w_sp: int
    h_sp: int
    pass_no: int
    page: int

    def __post_init__(self):
        if self.w_sp <= 0 or self.h_sp <= 0:
            raise ValueError(f"{self.element_id}: width and height must be positive")
        if self.pass_no not in (1, 2, 3):
            raise ValueError(f"{self.element_id}: pass must be 1, 2 or 3, got {self.pass_no}")


@dataclass(frozen=True)
class PageGeometry:
    page_w_pt: float
    page_h_pt: float
    dpi: int

    def __post_init__(self):
        if self.page_w_pt <= 0 or self.page_h_pt <= 0 or self.dpi <= 0:
            raise ValueError("page geometry must be positive")

    @classmethod
    def parse(cls, spec: str) -> "PageGeometry":
        """Read ``WxH@DPI``, e.g. ``612x792@144``."""
        try:
            size, dpi = spec.split("@")
            w, h = size.lower().split("x")
            return cls(float(w), float(h), int(dpi))
        except ValueError as exc:
            raise ValueError(f"bad geometry {spec!r}, expected WxH@DPI") from exc


@dataclass
class PosLog:
    records: list[PosRecord]
    errors: list[tuple[int, str]] = field(default_factory=list)


def parse_pos_log(text: str) -> PosLog:
    """Parse ``POS <pass> <page> <id> <kind> <x_sp> <y_sp> <w_sp> <h_sp>`` lines.

    Bad lines are collected with their line numbers; parsing never stops early.
    """
    records, errors = [], []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("%"):
            continue
        f = line.split()
        if len(f) != 9 or f[0] != "POS":
            errors.append((n, f"expected 9 fields starting with POS, got {len(f)}"))
            continue
        try:
            rec = PosRecord(f[3], ComponentKind.parse(f[4]), int(f[5]), int(f[6]), int(f[7]), int(f[8]),
                            int(f[1]), int(f[2]))
        except ValueError as exc:
            errors.append((n, str(exc)))
            continue
        records.append(rec)
    return PosLog(records, errors)


def sp_to_pt(v_sp: int) -> float:
    return v_sp / SP_PER_PT


def to_image_px(x_pt: float, y_pt: float, geo: PageGeometry) -> tuple[float, float]:
    """Bottom-left pt to top-left px."""
    s = geo.dpi / 72.0
    return x_pt * s, (geo.page_h_pt - y_pt) * s


def from_image_px(x_px: float, y_px: float, geo: PageGeometry) -> tuple[float, float]:
    s = 72.0 / geo.dpi
    return x_px * s, geo.page_h_pt - y_px * s


def record_box_pt(rec: PosRecord, geo: PageGeometry) -> tuple[float, float, float, float]:
    """Top-left-origin pt box of a record."""
    x, y = sp_to_pt(rec.x_sp), sp_to_pt(rec.y_sp)
    w, h = sp_to_pt(rec.w_sp), sp_to_pt(rec.h_sp)
    return x, geo.page_h_pt - (y + h), x + w, geo.page_h_pt - y


def record_box_px(rec: PosRecord, geo: PageGeometry) -> tuple[float, float, float, float]:
    x1, y_top = to_image_px(sp_to_pt(rec.x_sp), sp_to_pt(rec.y_sp + rec.h_sp), geo)
    x2, y_bot = to_image_px(sp_to_pt(rec.x_sp + rec.w_sp), sp_to_pt(rec.y_sp), geo)
    return x1, y_top, x2, y_bot


@dataclass
class PassReport:
    stable: bool
    max_drift_pt: float
    offenders: list[str]


def _occurrences(records: Iterable[PosRecord], pass_no: int) -> dict[tuple[str, int], PosRecord]:
    # an id may repeat (e.g. split across pages); key on id plus occurrence index
    seen: dict[str, int] = {}
    out = {}
    for r in records:
        if r.pass_no != pass_no:
            continue
        k = seen.get(r.element_id, 0)
        seen[r.element_id] = k + 1
        out[(r.element_id, k)] = r
    return out


def validate_passes(records: Sequence[PosRecord], tolerance_pt: float = DEFAULT_TOLERANCE_PT) -> PassReport:
    """Compare pass 2 against pass 3; an element drifting beyond the tolerance is an offender."""
    p2, p3 = _occurrences(records, 2), _occurrences(records, 3)
    drifts: dict[str, float] = {}
    for key, r3 in p3.items():
        r2 = p2.get(key)
        if r2 is None or r2.page != r3.page:
            d = math.inf
        else:
            d = max(abs(sp_to_pt(a) - sp_to_pt(b)) for a, b in (
                (r2.x_sp, r3.x_sp), (r2.y_sp, r3.y_sp),
                (r2.x_sp + r2.w_sp, r3.x_sp + r3.w_sp), (r2.y_sp + r2.h_sp, r3.y_sp + r3.h_sp)))
        drifts[key[0]] = max(drifts.get(key[0], 0.0), d)
    offenders = [eid for eid, d in drifts.items() if d > tolerance_pt]
    max_drift = max(drifts.values(), default=0.0)
    return PassReport(not offenders, max_drift, offenders)


class UnstablePassesError(ValueError):
    pass


def assemble_synthetic_page(records: Sequence[PosRecord], texts: dict[str, str], geo: PageGeometry,
                            language: str | None = None, confidence: float = STABLE_CONFIDENCE,
                            check: Sequence[PosRecord] | None = None) -> AnnotatedPage:
    """Build an annotated page from final-pass records in declaration (logical) order.

    ``check`` optionally carries the full multi-pass log (defaults to ``records``
    when they include pass 2); unstable logs raise.
    """
    if check is None and any(r.pass_no == 2 for r in records):
        check = records
    if check is not None:
        rep = validate_passes(check)
        if not rep.stable:
            raise UnstablePassesError(f"unstable elements: {', '.join(rep.offenders)}")
    final = [r for r in records if r.pass_no == 3] or list(records)
    comps = []
    for rank, r in enumerate(final):
        text = texts.get(r.element_id)
        if text is None:
            log.warning("no text for element %s", r.element_id)
            text = ""
        comps.append(PageComponent(r.kind, record_box_pt(r, geo), text, confidence, rank, rank))
    return AnnotatedPage(comps, (geo.page_w_pt, geo.page_h_pt), language)
