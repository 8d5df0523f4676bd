"""Merging canonical fields from many sources into one record.

Candidates are totally ordered by (precedence rank, confidence, location,
value), so the result never depends on input order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from ..model import (AGENTS, CANONICAL_FIELDS, FIELD_KINDS, IDENTIFIERS, TEXT, TEXTS,
                     CanonicalRecord, ProvenancedField, SourceKind, canonical_json)
from .identity import dedupe_agents, group_agents, same_agent_lists


class MergeError(ValueError):
    pass


@dataclass(frozen=True)
class MergeConflict:
    field_path: str
    winner: ProvenancedField
    losers: tuple[ProvenancedField, ...]
    resolution: str  # "precedence" | "confidence"

    def to_dict(self):
        return {
            "field_path": self.field_path,
            "winner": self.winner.to_dict(),
            "losers": [l.to_dict() for l in self.losers],
            "resolution": self.resolution,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["field_path"],
            ProvenancedField.from_dict(d["winner"], canonical=True),
            tuple(ProvenancedField.from_dict(l, canonical=True) for l in d["losers"]),
            d["resolution"],
        )


def _sort_key(rank: dict[SourceKind, int]):
    def key(f: ProvenancedField):
        return (rank[f.source_kind], f.confidence.rank, f.location, canonical_json(f.value))
    return key


def _identifier_key(ident):
    return (ident.relation.value, ident.scheme.value, ident.value)


def merge(fields: Iterable[ProvenancedField], precedence: Sequence[SourceKind]
          ) -> tuple[CanonicalRecord, list[MergeConflict]]:
    fields = list(fields)
    if not fields:
        raise MergeError("no metadata harvested")
    rank = {SourceKind(k): i for i, k in enumerate(precedence)}
    missing = {f.source_kind for f in fields} - set(rank)
    if missing:
        raise MergeError(f"precedence does not rank {sorted(m.value for m in missing)}")
    key = _sort_key(rank)

    by_path: dict[str, list[ProvenancedField]] = {}
    for f in fields:
        if f.field_path not in FIELD_KINDS:
            raise MergeError(f"not a canonical field: {f.field_path!r}")
        by_path.setdefault(f.field_path, []).append(f)
    for cands in by_path.values():
        cands.sort(key=key)

    values: dict[str, object] = {}
    provenance: dict[str, tuple[ProvenancedField, ...]] = {}
    conflicts: list[MergeConflict] = []

    def pick(path, cands, same):
        winner = cands[0]
        agreeing = [c for c in cands if same(c.value, winner.value)]
        losers = [c for c in cands if not same(c.value, winner.value)]
        if losers:
            strict = all(rank[l.source_kind] > rank[winner.source_kind] for l in losers)
            conflicts.append(MergeConflict(path, winner, tuple(losers),
                                           "precedence" if strict else "confidence"))
        provenance[path] = tuple(agreeing)
        return winner.value

    for path in CANONICAL_FIELDS:
        cands = by_path.get(path)
        if not cands:
            continue
        kind = FIELD_KINDS[path]
        if kind == TEXT:
            values[path] = pick(path, cands, lambda a, b: a == b)
        elif path == "authors":
            # VCS committers are never scholarly authors
            cands = [c for c in cands if c.source_kind is not SourceKind.VCS]
            if cands:
                values[path] = tuple(dedupe_agents(pick(path, cands, same_agent_lists)))
        elif kind == AGENTS:
            pass  # contributors are handled after authors
        elif kind == TEXTS:
            seen, out = set(), []
            for c in cands:
                for item in c.value:
                    if item.casefold() not in seen:
                        seen.add(item.casefold())
                        out.append(item)
            values[path] = tuple(out)
            provenance[path] = tuple(cands)
        else:
            assert kind == IDENTIFIERS
            out = []
            for r in sorted({rank[c.source_kind] for c in cands}):
                group = {i for c in cands if rank[c.source_kind] == r for i in c.value}
                out.extend(i for i in sorted(group, key=_identifier_key) if i not in out)
            values[path] = tuple(out)
            provenance[path] = tuple(cands)

    contrib_cands = by_path.get("contributors", [])
    if contrib_cands:
        authors = list(values.get("authors", ()))
        pool = [a for c in contrib_cands for a in c.value]
        groups = group_agents(authors + pool)
        author_groups = set(groups[:len(authors)])
        kept, seen = [], set()
        for agent, g in zip(pool, groups[len(authors):]):
            if g in author_groups or g in seen:
                continue
            seen.add(g)
            kept.append(agent)
        if kept:
            values["contributors"] = tuple(kept)
            provenance["contributors"] = tuple(contrib_cands)

    if not values.get("name"):
        raise MergeError("merged record has no name")
    conflicts.sort(key=lambda c: c.field_path)
    return CanonicalRecord(**values, provenance=provenance), conflicts
