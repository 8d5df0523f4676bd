"""Crosswalk, merge and lint: turn harvest results into one checked record."""

from .crosswalk import CrosswalkRow, CrosswalkTable, crosswalk, default_table, load_table_file
from .identity import agent_identity, dedupe_agents, group_agents
from .lint import (BUILTIN_PROFILES, Finding, LintReport, RequirementProfile, lint,
                   resolve_profile)
from .merge import MergeConflict, MergeError, merge
from .transforms import TRANSFORMS, TransformError

__all__ = [
    "CrosswalkRow", "CrosswalkTable", "crosswalk", "default_table", "load_table_file",
    "agent_identity", "dedupe_agents", "group_agents",
    "BUILTIN_PROFILES", "Finding", "LintReport", "RequirementProfile", "lint", "resolve_profile",
    "MergeConflict", "MergeError", "merge", "TRANSFORMS", "TransformError",
    "process_results",
]


def process_results(results, precedence):
    """Crosswalk every harvest result and merge them.

    Returns ``(record, conflicts, warnings)``.
    """
    fields, warnings = [], []
    for r in results:
        out, warns = crosswalk(r)
        fields.extend(out)
        warnings.extend(f"{r.source_kind.value}: {w}" for w in warns)
    record, conflicts = merge(fields, precedence)
    return record, conflicts, warnings
