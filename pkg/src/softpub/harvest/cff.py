"""CITATION.cff harvesting."""

from __future__ import annotations

from pathlib import Path

import yaml

from ..model import Confidence, SourceKind
from .base import HarvestError, SchemaViolation, build_result, rel_location

REQUIRED_KEYS = ("cff-version", "title", "authors", "message")
SUPPORTED_VERSIONS = {"1.2.0"}
# structural keys that carry no software metadata
_SKIP = {"cff-version", "message", "preferred-citation"}


def harvest_cff(path, root=None):
    path = Path(path)
    try:
        # every CFF scalar is a string; BaseLoader keeps "1.10" from becoming 1.1
        doc = yaml.load(path.read_text(encoding="utf-8"), Loader=yaml.BaseLoader)
    except yaml.YAMLError as exc:
        raise HarvestError(f"{path}: YAML syntax error: {exc}") from exc
    if not isinstance(doc, dict):
        raise HarvestError(f"{path}: top level is not a mapping")
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise SchemaViolation(key, f"{path.name}: missing required key {key!r}")

    warnings = []
    version = str(doc["cff-version"])
    if version not in SUPPORTED_VERSIONS:
        warnings.append(f"unsupported cff-version {version}, parsed best-effort")
    if "preferred-citation" in doc:
        warnings.append("preferred-citation ignored")

    items = [(k, v) for k, v in doc.items() if k not in _SKIP]
    return build_result(SourceKind.CFF, rel_location(path, root and Path(root)), items,
                        Confidence.EXACT, warnings)
