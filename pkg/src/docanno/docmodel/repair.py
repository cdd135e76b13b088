"""Best-effort repair of malformed XML: tag balancing, ID dedup, namespace binding."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

SYNTHETIC_NS = "urn:docanno:repaired:"

_NAME = r"[A-Za-z_][\w.\-]*(?::[A-Za-z_][\w.\-]*)?"
_ATTR = rf"\s+{_NAME}\s*=\s*(?:\"[^\"<]*\"|'[^'<]*')"
_TOKEN = re.compile(
    r"(?P<comment><!--.*?-->)"
    r"|(?P<cdata><!\[CDATA\[.*?\]\]>)"
    r"|(?P<pi><\?.*?\?>)"
    r"|(?P<doctype><!DOCTYPE[^>]*>)"
    rf"|(?P<end></(?P<end_name>{_NAME})\s*>)"
    rf"|(?P<start><(?P<name>{_NAME})(?P<attrs>(?:{_ATTR})*)\s*(?P<selfclose>/?)>)"
    r"|(?P<text>[^<]+)",
    re.S,
)
_ATTR_ITEM = re.compile(rf"\s+(?P<key>{_NAME})\s*=\s*(?P<q>[\"'])(?P<val>.*?)(?P=q)", re.S)
_BARE_AMP = re.compile(r"&(?!(?:[A-Za-z][\w.]*|#\d+|#x[0-9A-Fa-f]+);)")
_ID_KEYS = ("id", "xml:id", "w:id")


class RepairError(ValueError):
    """Input cannot be tokenized as XML; the document must be filtered."""


@dataclass
class RepairResult:
    repaired_xml: str
    actions: list[str] = field(default_factory=list)


@dataclass
class _Elem:
    name: str
    attrs: list[list[str]]
    selfclose: bool


def _tokenize(xml: str) -> list[tuple[str, object]]:
    tokens: list[tuple[str, object]] = []
    pos = 0
    while pos < len(xml):
        m = _TOKEN.match(xml, pos)
        if m is None:
            line = xml.count("\n", 0, pos) + 1
            raise RepairError(f"untokenizable markup at line {line}: {xml[pos:pos + 20]!r}")
        kind = m.lastgroup
        if m.group("end") is not None:
            tokens.append(("end", m.group("end_name")))
        elif m.group("start") is not None:
            attrs = [[a.group("key"), a.group("val")] for a in _ATTR_ITEM.finditer(m.group("attrs"))]
            tokens.append(("start", _Elem(m.group("name"), attrs, bool(m.group("selfclose")))))
        elif m.group("text") is not None:
            tokens.append(("text", m.group("text")))
        else:
            tokens.append(("raw", m.group(kind)))
        pos = m.end()
    return tokens


def _prefix(name: str) -> str | None:
    return name.split(":", 1)[0] if ":" in name else None


def repair_markup(xml: str) -> RepairResult:
    """Make ``xml`` well-formed, listing every repair applied.

    Already well-formed input is returned byte-for-byte with no actions.
    """
    tokens = _tokenize(xml)
    actions: list[str] = []

    # pass 1: balance tags
    balanced: list[tuple[str, object]] = []
    stack: list[str] = []
    for kind, val in tokens:
        if kind == "start":
            balanced.append((kind, val))
            if not val.selfclose:
                stack.append(val.name)
        elif kind == "end":
            if val in stack:
                while stack[-1] != val:
                    name = stack.pop()
                    balanced.append(("end", name))
                    actions.append(f"balanced:{name}")
                stack.pop()
                balanced.append((kind, val))
            else:
                actions.append(f"dropped_close:{val}")
        else:
            balanced.append((kind, val))
    while stack:
        name = stack.pop()
        balanced.append(("end", name))
        actions.append(f"balanced:{name}")

    # pass 2: deduplicate ids, collect namespace usage
    seen_ids: dict[str, int] = {}
    used_prefixes: list[str] = []
    declared: set[str] = {"xml", "xmlns"}
    root: _Elem | None = None
    for kind, val in balanced:
        if kind != "start":
            continue
        if root is None:
            root = val
        for attr in val.attrs:
            key, v = attr
            if key.startswith("xmlns:"):
                if v.strip():
                    declared.add(key[6:])
                else:
                    attr[1] = SYNTHETIC_NS + key[6:]
                    declared.add(key[6:])
                    actions.append(f"namespace:{key[6:]}")
        for name in [val.name] + [a[0] for a in val.attrs]:
            p = _prefix(name)
            if p and p not in used_prefixes:
                used_prefixes.append(p)
        for attr in val.attrs:
            if attr[0] in _ID_KEYS:
                n = seen_ids.get(attr[1], 0) + 1
                seen_ids[attr[1]] = n
                if n > 1:
                    new = f"{attr[1]}-{n}"
                    while new in seen_ids:
                        n += 1
                        new = f"{attr[1]}-{n}"
                    seen_ids[attr[1]] = n
                    seen_ids[new] = 1
                    actions.append(f"dedup_id:{attr[1]}->{new}")
                    attr[1] = new
    undeclared = [p for p in used_prefixes if p not in declared]
    if undeclared:
        if root is None:
            raise RepairError("namespace prefixes used outside any element")
        for p in undeclared:
            root.attrs.append([f"xmlns:{p}", SYNTHETIC_NS + p])
            actions.append(f"namespace:{p}")

    # pass 3: escape stray ampersands in text
    for i, (kind, val) in enumerate(balanced):
        if kind == "text" and _BARE_AMP.search(val):
            balanced[i] = ("text", _BARE_AMP.sub("&amp;", val))
            actions.append("escaped:&")

    if not actions:
        return RepairResult(xml, [])
    return RepairResult(_emit(balanced), actions)


def _emit(tokens) -> str:
    out = []
    for kind, val in tokens:
        if kind == "start":
            attrs = "".join(f' {k}="{v.replace(chr(34), "&quot;")}"' for k, v in val.attrs)
            out.append(f"<{val.name}{attrs}{'/' if val.selfclose else ''}>")
        elif kind == "end":
            out.append(f"</{val}>")
        else:
            out.append(val)
    return "".join(out)
