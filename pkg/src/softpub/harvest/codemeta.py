"""codemeta.json harvesting."""

from __future__ import annotations

import json
from pathlib import Path

from ..model import Confidence, SourceKind
from .base import HarvestError, build_result, rel_location


def _has_codemeta_context(ctx) -> bool:
    if isinstance(ctx, str):
        return "codemeta" in ctx or "schema.org" in ctx
    if isinstance(ctx, list):
        return any(_has_codemeta_context(c) for c in ctx)
    if isinstance(ctx, dict):
        return any(_has_codemeta_context(v) for v in ctx.values())
    return False


def harvest_codemeta(path, root=None):
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise HarvestError(f"{path}: JSON syntax error: {exc}") from exc
    if not isinstance(doc, dict):
        raise HarvestError(f"{path}: top level is not an object")

    warnings = []
    if not _has_codemeta_context(doc.get("@context")):
        warnings.append("no CodeMeta/schema.org @context, treated as plain CodeMeta")
    items = [(k, v) for k, v in doc.items() if k not in ("@context", "@id")]
    return build_result(SourceKind.CODEMETA, rel_location(path, root and Path(root)), items,
                        Confidence.EXACT, warnings)
