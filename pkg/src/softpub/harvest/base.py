from __future__ import annotations

import datetime as _dt
from pathlib import Path
from typing import Any, Iterable

from ..model import Confidence, HarvestResult, ProvenancedField, SourceKind


class HarvestError(Exception):
    """A harvester could not read its source at all."""


class SchemaViolation(HarvestError):
    def __init__(self, key: str, message: str | None = None):
        self.key = key
        super().__init__(message or f"missing required key {key!r}")


def jsonable(value: Any) -> Any:
    """Coerce YAML/TOML scalars (dates etc.) into plain JSON values."""
    if isinstance(value, (_dt.date, _dt.datetime)):
        return value.isoformat()
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return value


def build_result(kind: SourceKind, location: str, items: Iterable[tuple[str, Any]],
                 confidence: Confidence, warnings: Iterable[str] = (),
                 confidences: dict[str, Confidence] | None = None) -> HarvestResult:
    confidences = confidences or {}
    fields = [
        ProvenancedField(key, jsonable(value), kind, location, confidences.get(key, confidence))
        for key, value in items
        if value not in (None, "", [], {})
    ]
    return HarvestResult(kind, location, tuple(fields), tuple(warnings))


def rel_location(path: Path, root: Path | None) -> str:
    if root is None:
        return path.name
    try:
        return path.resolve().relative_to(root.resolve()).as_posix()
    except ValueError:
        return path.as_posix()
