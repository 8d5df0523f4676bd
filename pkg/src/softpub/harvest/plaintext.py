"""Rule-based README mining. Everything found here is only a heuristic guess."""

from __future__ import annotations

import re
from pathlib import Path

from ..model import Confidence, SourceKind
from .base import build_result

README_RE = re.compile(r"^README(\.(md|markdown|rst|txt))?$", re.I)
_README_ORDER = {".md": 0, ".markdown": 1, ".rst": 2, ".txt": 3, "": 4}

_ATX_H1 = re.compile(r"^#\s+(.+?)\s*#*\s*$")
_UNDERLINE = re.compile(r"^(=+)\s*$")
_DOI_LINK = re.compile(r"doi\.org/(10\.\d{4,9}/[^\s)\]\"'<>]+)", re.I)
_DOI_BADGE = re.compile(r"badge/DOI/(10\.\d{4,9}/[^\s)\]\"'<>]+?)\.svg", re.I)
_COPYRIGHT = re.compile(
    r"^\s*(?:[-*]\s*)?(?:copyright\b|\(c\)|©)\s*(?:\(c\)|©)?\s*:?\s*"
    r"(?:\d{4}(?:\s*[-–,]\s*\d{4})*)?\s*,?\s*(?:by\s+)?(?P<holder>.*?)\s*$",
    re.I,
)
_BIBTEX_ENTRY = re.compile(r"^\s*@\w+\s*\{", re.M)


def find_readme(unit_root: Path) -> Path | None:
    if not unit_root.is_dir():
        return None
    found = [p for p in unit_root.iterdir() if p.is_file() and README_RE.match(p.name)]
    if not found:
        return None
    return min(found, key=lambda p: (_README_ORDER.get(p.suffix.lower(), 5), p.name))


def first_heading(text: str) -> str | None:
    lines = text.splitlines()
    for i, line in enumerate(lines):
        m = _ATX_H1.match(line)
        if m:
            return m.group(1).strip()
        if i + 1 < len(lines) and line.strip() and _UNDERLINE.match(lines[i + 1]) \
                and not _UNDERLINE.match(line):
            return line.strip()
    return None


def find_dois(text: str) -> list[str]:
    out = []
    for rx in (_DOI_BADGE, _DOI_LINK):
        for m in rx.finditer(text):
            doi = m.group(1).rstrip(".,;")
            if doi.lower().endswith(".svg"):
                continue
            if doi not in out:
                out.append(doi)
    return out


def copyright_holders(text: str) -> list[str]:
    holders = []
    for line in text.splitlines():
        m = _COPYRIGHT.match(line)
        if not m:
            continue
        holder = re.sub(r"\.?\s*all rights reserved\.?$", "", m.group("holder"), flags=re.I).strip(" .,")
        if holder and not re.search(r"notice|holder|license", holder, re.I) and holder not in holders:
            holders.append(holder)
    return holders


def harvest_plaintext(unit_root, root=None):
    unit_root = Path(unit_root)
    warnings = []
    for name in ("CITATION", "CITATION.bib"):
        p = unit_root / name
        if p.is_file() and _BIBTEX_ENTRY.search(p.read_text(encoding="utf-8", errors="replace")):
            warnings.append(f"{name}: BibTeX citation detected but not parsed")

    readme = find_readme(unit_root)
    if readme is None:
        return build_result(SourceKind.PLAINTEXT, ".", [], Confidence.HEURISTIC, warnings)
    text = readme.read_text(encoding="utf-8", errors="replace")
    items = [
        ("heading", first_heading(text)),
        ("dois", find_dois(text)),
        ("copyright_holders", copyright_holders(text)),
    ]
    return build_result(SourceKind.PLAINTEXT, readme.name, items, Confidence.HEURISTIC, warnings)
