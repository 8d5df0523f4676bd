""".zenodo.json harvesting."""

from __future__ import annotations

import json
from pathlib import Path

from ..model import Confidence, SourceKind
from .base import HarvestError, build_result, rel_location


def harvest_zenodo_json(path, root=None):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise HarvestError(f"{path}: JSON syntax error: {exc}") from exc
    if not isinstance(doc, dict):
        raise HarvestError(f"{path}: top level is not an object")
    warnings = [] if doc else ["empty .zenodo.json"]
    return build_result(SourceKind.ZENODO_JSON, rel_location(path, root and Path(root)),
                        doc.items(), Confidence.EXACT, warnings)
