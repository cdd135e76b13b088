"""Candidate URL extraction, canonicalization, dedup, and archive safety checks."""

from __future__ import annotations

import gzip
import hashlib
import io
import json
import re
import sqlite3
import zipfile
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator
from urllib.parse import parse_qsl, urlencode, urljoin, urlsplit, urlunsplit

ZIP_BOMB_RATIO = 100
OVERSIZE_BYTES = 256 * 1024 * 1024
DOC_SUFFIXES = (".doc", ".docx")
ZIP_MAGIC = b"PK\x03\x04"
EMPTY_ZIP_MAGIC = b"PK\x05\x06"
CFB_MAGIC = b"\xd0\xcf\x11\xe0\xa1\xb1\x1a\xe1"
MACRO_PART_RE = re.compile(r"(^|/)vba(Project|ProjectSignature)\.bin$|(^|/)vbaData\.xml$", re.IGNORECASE)
EMBEDDED_RE = re.compile(r"(^|/)embeddings/|oleObject\d*\.bin$|(^|/)activeX/", re.IGNORECASE)

DOCX_TYPES = {"docx", "application/vnd.openxmlformats-officedocument.wordprocessingml.document"}
DOC_TYPES = {"doc", "application/msword"}


class CanonicalizationError(ValueError):
    def __init__(self, raw: str, why: str):
        super().__init__(f"cannot canonicalize {raw!r}: {why}")
        self.raw = raw


def canonicalize_url(raw: str) -> str:
    """Lowercase scheme and host, sort the query, drop the fragment and trailing slash."""
    try:
        parts = urlsplit(raw.strip())
        port = parts.port
    except ValueError as exc:
        raise CanonicalizationError(raw, str(exc)) from exc
    scheme = parts.scheme.lower()
    if scheme not in ("http", "https"):
        raise CanonicalizationError(raw, "scheme must be http or https")
    host = (parts.hostname or "").lower()
    if not host:
        raise CanonicalizationError(raw, "missing host")
    netloc = host
    if parts.username is not None:
        cred = parts.username + (f":{parts.password}" if parts.password is not None else "")
        netloc = f"{cred}@{host}"
    if port is not None:
        netloc += f":{port}"
    path = parts.path
    while path.endswith("/"):
        path = path[:-1]
    query = urlencode(sorted(parse_qsl(parts.query, keep_blank_values=True)), doseq=True)
    return urlunsplit((scheme, netloc, path, query, ""))


def content_hash(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def url_key(canonical_url: str) -> bytes:
    return hashlib.sha256(canonical_url.encode("utf-8")).digest()


class DedupStoreError(RuntimeError):
    pass


class DedupStore:
    """Persistent set of 32-byte keys, remembering the snapshot of first sighting."""

    def __init__(self, backing_path):
        self.backing_path = Path(backing_path)
        try:
            self._db = sqlite3.connect(str(self.backing_path), isolation_level=None)
            self._db.execute("PRAGMA journal_mode=WAL")
            self._db.execute("PRAGMA synchronous=NORMAL")
            self._db.execute("CREATE TABLE IF NOT EXISTS entries (key BLOB PRIMARY KEY, snapshot TEXT NOT NULL)")
        except sqlite3.Error as exc:
            raise DedupStoreError(f"cannot open dedup store at {self.backing_path}: {exc}") from exc

    def insert(self, key: bytes, snapshot_id: str) -> bool:
        if len(key) != 32:
            raise ValueError("keys are 32-byte digests")
        try:
            cur = self._db.execute("INSERT OR IGNORE INTO entries (key, snapshot) VALUES (?, ?)", (key, snapshot_id))
        except sqlite3.Error as exc:
            raise DedupStoreError(f"dedup store write failed: {exc}") from exc
        return cur.rowcount == 1

    def __contains__(self, key: bytes) -> bool:
        return self.snapshot_of(key) is not None

    def snapshot_of(self, key: bytes) -> str | None:
        try:
            row = self._db.execute("SELECT snapshot FROM entries WHERE key = ?", (key,)).fetchone()
        except sqlite3.Error as exc:
            raise DedupStoreError(f"dedup store read failed: {exc}") from exc
        return row[0] if row else None

    def __len__(self) -> int:
        return self._db.execute("SELECT COUNT(*) FROM entries").fetchone()[0]

    def close(self):
        self._db.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def dedup_insert(store: DedupStore, url: str, snapshot_id: str) -> bool:
    """True when the canonical URL was not seen before in any snapshot."""
    return store.insert(url_key(url), snapshot_id)


class SafetyReason(str, Enum):
    MACRO_PART = "macro_part"
    EMBEDDED_OBJECT = "embedded_object"
    ENCRYPTED = "encrypted"
    ZIP_BOMB = "zip_bomb"
    OVERSIZE = "oversize"
    CONTENT_TYPE_MISMATCH = "content_type_mismatch"
    CORRUPT_ARCHIVE = "corrupt_archive"


@dataclass
class SafetyVerdict:
    reasons: list[SafetyReason] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.reasons

    def to_dict(self) -> dict:
        return {"passed": self.passed, "reasons": [r.value for r in self.reasons]}


def _utf16(name: str) -> bytes:
    return name.encode("utf-16-le")


def safety_check(archive_bytes: bytes, declared_type: str) -> SafetyVerdict:
    """Structural screening; problems become verdict reasons, never exceptions."""
    found: set[SafetyReason] = set()
    data = bytes(archive_bytes)
    declared = declared_type.strip().lower().lstrip(".")
    is_zip = data.startswith(ZIP_MAGIC) or data.startswith(EMPTY_ZIP_MAGIC)
    is_cfb = data.startswith(CFB_MAGIC)
    if (declared in DOCX_TYPES and not is_zip) or (declared in DOC_TYPES and not is_cfb):
        found.add(SafetyReason.CONTENT_TYPE_MISMATCH)

    if is_cfb:
        # legacy binary or an encrypted OOXML package; scan directory names only
        if _utf16("EncryptedPackage") in data or _utf16("EncryptionInfo") in data:
            found.add(SafetyReason.ENCRYPTED)
        if _utf16("Macros") in data or _utf16("_VBA_PROJECT") in data:
            found.add(SafetyReason.MACRO_PART)
        if _utf16("ObjectPool") in data:
            found.add(SafetyReason.EMBEDDED_OBJECT)
    elif is_zip or declared in DOCX_TYPES:
        try:
            with zipfile.ZipFile(io.BytesIO(data)) as zf:
                infos = zf.infolist()
        except (zipfile.BadZipFile, OSError, ValueError, EOFError):
            found.add(SafetyReason.CORRUPT_ARCHIVE)
            infos = []
        total = sum(i.file_size for i in infos)
        packed = sum(i.compress_size for i in infos)
        for i in infos:
            if MACRO_PART_RE.search(i.filename):
                found.add(SafetyReason.MACRO_PART)
            if EMBEDDED_RE.search(i.filename):
                found.add(SafetyReason.EMBEDDED_OBJECT)
            if i.flag_bits & 0x1:
                found.add(SafetyReason.ENCRYPTED)
        if infos and total / max(packed, 1) > ZIP_BOMB_RATIO:
            found.add(SafetyReason.ZIP_BOMB)
        if total > OVERSIZE_BYTES:
            found.add(SafetyReason.OVERSIZE)
    return SafetyVerdict([r for r in SafetyReason if r in found])


# -- crawl metadata ------------------------------------------------------------


@dataclass(frozen=True)
class CandidateUrl:
    raw: str
    snapshot_id: str
    source_record: str


_SNAPSHOT_RE = re.compile(r"CC-MAIN-\d{4}-\d{2}")


def snapshot_from_path(path) -> str:
    m = _SNAPSHOT_RE.search(str(path))
    return m.group() if m else Path(path).name.split(".")[0]


def _is_doc_url(url: str) -> bool:
    try:
        parts = urlsplit(url)
    except ValueError:
        return False
    return parts.scheme.lower() in ("http", "https") and bool(parts.netloc) and \
        parts.path.lower().endswith(DOC_SUFFIXES)


def _links(meta: dict) -> Iterator[str]:
    env = meta.get("Envelope", meta)
    base = env.get("WARC-Header-Metadata", {}).get("WARC-Target-URI", "")
    html_meta = env.get("Payload-Metadata", {}).get("HTTP-Response-Metadata", {}).get("HTML-Metadata", {})
    for link in html_meta.get("Links", []) or []:
        url = link.get("url") or link.get("href")
        if url:
            yield urljoin(base, url) if base else url
    if base:
        yield base


def _open_text(path: Path) -> io.TextIOBase:
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", errors="replace")
    return open(path, encoding="utf-8", errors="replace")


def parse_wat(path, snapshot_id: str | None = None) -> Iterator[CandidateUrl]:
    """Yield .doc/.docx link targets found in the JSON metadata lines of a WAT file."""
    path = Path(path)
    snap = snapshot_id or snapshot_from_path(path)
    with _open_text(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line.startswith("{"):
                continue
            try:
                meta = json.loads(line)
            except json.JSONDecodeError:
                continue
            if not isinstance(meta, dict):
                continue
            for url in _links(meta):
                if _is_doc_url(url):
                    yield CandidateUrl(url, snap, f"{path.name}:{n}")


@dataclass
class IngestResult:
    kept: list[CandidateUrl]
    canonical: list[str]
    total: int = 0
    invalid: int = 0
    duplicates: int = 0
    audit: list[dict] = field(default_factory=list)

    @property
    def removal_fraction(self) -> float:
        return (self.invalid + self.duplicates) / self.total if self.total else 0.0

    @property
    def duplicate_fraction(self) -> float:
        return self.duplicates / self.total if self.total else 0.0

    def funnel(self) -> dict:
        return {"candidates": self.total, "invalid": self.invalid, "duplicates": self.duplicates,
                "kept": len(self.kept), "removal_fraction": self.removal_fraction}


def ingest_candidates(candidates: Iterable[CandidateUrl], store: DedupStore) -> IngestResult:
    res = IngestResult([], [])
    for c in candidates:
        res.total += 1
        try:
            url = canonicalize_url(c.raw)
        except CanonicalizationError as exc:
            res.invalid += 1
            res.audit.append({"stage": "canonicalize", "url": c.raw, "reason": str(exc)})
            continue
        if dedup_insert(store, url, c.snapshot_id):
            res.kept.append(c)
            res.canonical.append(url)
        else:
            res.duplicates += 1
            res.audit.append({"stage": "dedup", "url": url, "reason": "duplicate",
                              "first_snapshot": store.snapshot_of(url_key(url))})
    return res
