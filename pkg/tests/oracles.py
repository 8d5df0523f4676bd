"""Brute-force reference implementations used to check the merge engine."""

from __future__ import annotations

from softpub.model import SCALAR_FIELDS, SourceKind, canonical_json
from softpub.process.identity import dedupe_agents, same_agent_lists


def _argmin_filter(items, key):
    best = min(key(i) for i in items)
    return [i for i in items if key(i) == best]


def expected_winner(cands, precedence):
    """Sort-and-pick by hand: precedence, then confidence, then location, then value."""
    order = {k: i for i, k in enumerate(precedence)}
    conf_order = {"exact": 0, "mapped": 1, "heuristic": 2}
    pool = list(cands)
    pool = _argmin_filter(pool, lambda c: order[c.source_kind])
    pool = _argmin_filter(pool, lambda c: conf_order[c.confidence.value])
    pool = _argmin_filter(pool, lambda c: c.location)
    pool = _argmin_filter(pool, lambda c: canonical_json(c.value))
    return pool[0]


def check_merge(fields, precedence, record, conflicts):
    """Return a list of human-readable mismatches between merge output and the oracle."""
    problems = []
    rank = {k: i for i, k in enumerate(precedence)}
    by_path = {}
    for f in fields:
        by_path.setdefault(f.field_path, []).append(f)
    conflict_paths = [c.field_path for c in conflicts]
    if len(conflict_paths) != len(set(conflict_paths)):
        problems.append(f"duplicate conflict entries: {conflict_paths}")
    conflict_by_path = {c.field_path: c for c in conflicts}

    for path in (*SCALAR_FIELDS, "authors"):
        cands = by_path.get(path, [])
        if path == "authors":
            cands = [c for c in cands if c.source_kind is not SourceKind.VCS]
        if not cands:
            if getattr(record, path) not in (None, ()):
                problems.append(f"{path}: value without candidates")
            continue
        win = expected_winner(cands, precedence)
        same = same_agent_lists if path == "authors" else (lambda a, b: a == b)
        got = getattr(record, path)
        expected = tuple(dedupe_agents(win.value)) if path == "authors" else win.value
        if got != expected:
            problems.append(f"{path}: got {got!r}, oracle {expected!r}")
        disagree = [c for c in cands if not same(c.value, win.value)]
        conflict = conflict_by_path.get(path)
        if disagree and conflict is None:
            problems.append(f"{path}: differing values but no conflict")
        if not disagree and conflict is not None:
            problems.append(f"{path}: conflict without disagreement")
        if conflict is not None:
            if sorted(map(_fkey, conflict.losers)) != sorted(map(_fkey, disagree)):
                problems.append(f"{path}: conflict losers incomplete")
            for loser in conflict.losers:
                if loser.source_kind is not conflict.winner.source_kind and \
                        rank[loser.source_kind] <= rank[conflict.winner.source_kind]:
                    problems.append(f"{path}: loser {loser.source_kind.value} outranks winner")
    return problems


def _fkey(f):
    return (f.source_kind.value, f.location, f.confidence.value, canonical_json(f.value))


def conflict_multiset(conflicts):
    return sorted(canonical_json(c.to_dict()) for c in conflicts)
