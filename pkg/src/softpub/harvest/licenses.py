"""License detection: REUSE ``LICENSES/`` directories and LICENSE/COPYING full texts.

Full texts are identified by word-bigram Dice similarity against the
reference texts bundled in ``softpub/data/licenses`` (one ``<SPDX-id>.txt``
per license).
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources
from pathlib import Path

from ..model import Confidence, SourceKind, spdx_expression_valid
from .base import build_result

SIMILARITY_THRESHOLD = 0.9
LICENSE_FILE_RE = re.compile(r"^(LICEN[CS]E|COPYING|UNLICENSE)([.\-_].*)?$", re.I)

_COPYRIGHT_LINE = re.compile(r"^\s*(copyright\b|\(c\)|©).*$", re.I | re.M)
_PLACEHOLDER = re.compile(r"<[^>\n]{1,60}>|\[[^\]\n]{1,60}\]")


def normalize_text(text: str) -> list[str]:
    text = _COPYRIGHT_LINE.sub(" ", text)
    text = _PLACEHOLDER.sub(" ", text)
    text = text.lower().replace("licence", "license")
    return re.findall(r"[a-z0-9]+", text)


def _bigrams(words: list[str]) -> set[tuple[str, str]]:
    return set(zip(words, words[1:]))


def dice(a: set, b: set) -> float:
    if not a and not b:
        return 1.0
    return 2 * len(a & b) / (len(a) + len(b))


@lru_cache(maxsize=1)
def reference_corpus() -> dict[str, set]:
    corpus = {}
    root = resources.files("softpub") / "data" / "licenses"
    for entry in root.iterdir():
        if entry.name.endswith(".txt"):
            corpus[entry.name[:-4]] = _bigrams(normalize_text(entry.read_text(encoding="utf-8")))
    return corpus


def identify_license_text(text: str) -> tuple[str | None, float]:
    """Best-matching SPDX id and its score; id is None below the threshold."""
    grams = _bigrams(normalize_text(text))
    best, score = None, 0.0
    for spdx_id, ref in sorted(reference_corpus().items()):
        s = dice(grams, ref)
        if s > score:
            best, score = spdx_id, s
    if score < SIMILARITY_THRESHOLD:
        return None, score
    return best, score


def harvest_license(unit_root, root=None):
    unit_root = Path(unit_root)
    warnings: list[str] = []
    locations: list[str] = []
    reuse_ids: list[str] = []
    text_ids: list[str] = []

    reuse_dir = unit_root / "LICENSES"
    if reuse_dir.is_dir():
        for f in sorted(reuse_dir.iterdir()):
            if not f.is_file():
                continue
            spdx_id = f.stem
            if spdx_expression_valid(spdx_id):
                reuse_ids.append(spdx_id)
                locations.append(f"LICENSES/{f.name}")
            else:
                warnings.append(f"LICENSES/{f.name}: file name is not an SPDX identifier")

    if unit_root.is_dir():
        for f in sorted(unit_root.iterdir()):
            if not f.is_file() or not LICENSE_FILE_RE.match(f.name):
                continue
            spdx_id, score = identify_license_text(f.read_text(encoding="utf-8", errors="replace"))
            if spdx_id is None:
                warnings.append(f"{f.name}: unidentified license (best similarity {score:.2f})")
                continue
            if spdx_id.startswith("GPL-") or spdx_id.startswith("LGPL-"):
                warnings.append(f"{f.name}: 'or later' clause cannot be read from the text, assumed {spdx_id}")
            if spdx_id not in text_ids:
                text_ids.append(spdx_id)
            locations.append(f.name)

    if reuse_ids:
        expr = " AND ".join(sorted(set(reuse_ids)))
    elif text_ids:
        # several top-level license files conventionally mean dual licensing
        expr = " OR ".join(text_ids)
    else:
        expr = None
    location = ", ".join(locations) if locations else "."
    return build_result(SourceKind.LICENSE_FILE, location, [("license", expr)], Confidence.MAPPED, warnings)
