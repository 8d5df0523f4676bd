"""Crosswalk tables: native key -> canonical field, via a named transform."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

from ..model import (AGENTS, CANONICAL_FIELDS, FIELD_KINDS, IDENTIFIERS, TEXT, TEXTS, Agent,
                     HarvestResult, Identifier, ProvenancedField, SourceKind)
from .transforms import TransformError, get_transform


@dataclass(frozen=True)
class CrosswalkRow:
    native_key: str
    canonical_field: str
    transform: str


@dataclass(frozen=True)
class CrosswalkTable:
    source_kind: SourceKind
    rows: tuple[CrosswalkRow, ...]

    def __post_init__(self):
        for row in self.rows:
            if row.canonical_field not in CANONICAL_FIELDS:
                raise ValueError(f"{self.source_kind.value}: unknown canonical field {row.canonical_field!r}")
            get_transform(row.transform)

    def rows_for(self, native_key: str) -> list[CrosswalkRow]:
        return [r for r in self.rows if r.native_key == native_key]


def parse_table(text: str, source_kind: SourceKind) -> CrosswalkTable:
    reader = csv.DictReader(io.StringIO(text))
    missing = {"native_key", "canonical_field", "transform"} - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"crosswalk table lacks columns {sorted(missing)}")
    rows = tuple(CrosswalkRow(r["native_key"].strip(), r["canonical_field"].strip(), r["transform"].strip())
                 for r in reader if r["native_key"].strip())
    return CrosswalkTable(SourceKind(source_kind), rows)


def load_table_file(path, source_kind: SourceKind) -> CrosswalkTable:
    return parse_table(Path(path).read_text(encoding="utf-8"), source_kind)


@lru_cache(maxsize=None)
def default_table(source_kind: SourceKind) -> CrosswalkTable:
    kind = SourceKind(source_kind)
    text = (resources.files("softpub") / "data" / "crosswalk" / f"{kind.value}.csv").read_text(encoding="utf-8")
    return parse_table(text, kind)


def _check_kind(path: str, value) -> None:
    kind = FIELD_KINDS[path]
    if kind == TEXT:
        ok = isinstance(value, str)
    elif kind == TEXTS:
        ok = isinstance(value, tuple) and all(isinstance(v, str) for v in value)
    elif kind == AGENTS:
        ok = isinstance(value, tuple) and all(isinstance(v, Agent) for v in value)
    else:
        assert kind == IDENTIFIERS
        ok = isinstance(value, tuple) and all(isinstance(v, Identifier) for v in value)
    if not ok:
        raise TransformError(f"{path}: transform produced {type(value).__name__}")


def crosswalk(result: HarvestResult, table: CrosswalkTable | None = None
              ) -> tuple[list[ProvenancedField], list[str]]:
    """Re-key a harvest result into canonical fields.

    Returns the canonical fields and the warnings raised on the way (unmapped
    native keys, values a transform could not convert).
    """
    table = table or default_table(result.source_kind)
    if table.source_kind is not result.source_kind:
        raise ValueError(f"table for {table.source_kind.value} applied to {result.source_kind.value} result")

    out: list[ProvenancedField] = []
    warnings: list[str] = []
    for f in result.fields:
        rows = table.rows_for(f.field_path)
        if not rows:
            warnings.append(f"{f.location}: unmapped native key {f.field_path!r}")
            continue
        for row in rows:
            def warn(msg, _key=f.field_path, _loc=f.location):
                warnings.append(f"{_loc}: {_key}: {msg}")
            try:
                value = get_transform(row.transform)(_thaw(f.value), warn)
                _check_kind(row.canonical_field, value)
            except (TransformError, ValueError) as exc:
                warnings.append(f"{f.location}: {f.field_path}: dropped ({exc})")
                continue
            if value in ("", ()):
                continue
            out.append(ProvenancedField(row.canonical_field, value, f.source_kind, f.location, f.confidence))
    return out, warnings


def _thaw(value):
    if isinstance(value, tuple):
        return [_thaw(v) for v in value]
    return value
