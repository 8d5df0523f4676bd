"""Requirement profiles and linting of a merged record against them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from ..model import ArtifactKind, CANONICAL_FIELDS, CanonicalRecord, Confidence
from .merge import MergeConflict

# lintable paths beyond the canonical fields
VIRTUAL_FIELDS = ("contact_email",)


@dataclass(frozen=True)
class RequirementProfile:
    name: str
    mandatory_fields: tuple[str, ...]
    allowed_artifact_kinds: tuple[str, ...] = tuple(k.value for k in ArtifactKind)
    license_required: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mandatory_fields", tuple(self.mandatory_fields))
        object.__setattr__(self, "allowed_artifact_kinds", tuple(self.allowed_artifact_kinds))
        for f in self.mandatory_fields:
            if f not in CANONICAL_FIELDS and f not in VIRTUAL_FIELDS:
                raise ValueError(f"profile {self.name}: unknown field {f!r}")

    def to_dict(self):
        return {
            "name": self.name,
            "mandatory_fields": list(self.mandatory_fields),
            "allowed_artifact_kinds": list(self.allowed_artifact_kinds),
            "license_required": self.license_required,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], name: str | None = None) -> "RequirementProfile":
        kwargs = {
            "name": d.get("name", name or "custom"),
            "mandatory_fields": d.get("mandatory_fields", d.get("mandatory", ())),
            "license_required": bool(d.get("license_required", False)),
        }
        if "allowed_artifact_kinds" in d:
            kwargs["allowed_artifact_kinds"] = d["allowed_artifact_kinds"]
        return cls(**kwargs)


BUILTIN_PROFILES = {
    "invenio-default": RequirementProfile(
        "invenio-default",
        mandatory_fields=("name", "authors", "description", "artifact_kind"),
        license_required=True,
    ),
    "dataverse-default": RequirementProfile(
        "dataverse-default",
        mandatory_fields=("name", "authors", "description", "contact_email", "keywords"),
    ),
}


def resolve_profile(spec, default: str = "invenio-default") -> RequirementProfile:
    """A built-in profile name, an inline mapping, or None for ``default``."""
    if spec is None:
        return BUILTIN_PROFILES[default]
    if isinstance(spec, str):
        if spec not in BUILTIN_PROFILES:
            raise KeyError(f"unknown requirement profile {spec!r}")
        return BUILTIN_PROFILES[spec]
    return RequirementProfile.from_dict(spec)


@dataclass(frozen=True)
class Finding:
    severity: str  # error | warning | info
    rule: str
    field_path: str
    message: str

    def to_dict(self):
        return {"severity": self.severity, "rule": self.rule, "field_path": self.field_path,
                "message": self.message}


@dataclass(frozen=True)
class LintReport:
    profile: str
    findings: tuple[Finding, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return not any(f.severity == "error" for f in self.findings)

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    def to_dict(self):
        return {"profile": self.profile, "passed": self.passed,
                "findings": [f.to_dict() for f in self.findings]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["profile"], tuple(Finding(**f) for f in d["findings"]))


def _show(value) -> str:
    if isinstance(value, tuple):
        return "[" + "; ".join(getattr(v, "display_name", str(v)) for v in value) + "]"
    return repr(value)


def contact_email(record: CanonicalRecord) -> str | None:
    for a in record.authors:
        if a.email:
            return a.email
    return None


def _present(record: CanonicalRecord, path: str) -> bool:
    if path == "contact_email":
        return contact_email(record) is not None
    return getattr(record, path) not in (None, "", ())


def lint(record: CanonicalRecord, profile: RequirementProfile,
         conflicts: Iterable[MergeConflict] = (), strict: bool = False) -> LintReport:
    findings: list[Finding] = []
    for path in profile.mandatory_fields:
        if path == "contact_email" and not record.authors and "authors" in profile.mandatory_fields:
            continue  # already reported as missing authors
        if not _present(record, path):
            findings.append(Finding("error", "mandatory-field", path,
                                    f"{path} is required by profile {profile.name}"))
            continue
        prov_path = "authors" if path == "contact_email" else path
        prov = record.provenance.get(prov_path, ())
        if prov and all(p.confidence is Confidence.HEURISTIC for p in prov):
            findings.append(Finding("warning", "heuristic-value", path,
                                    "heuristic value for mandatory field"))
    if profile.license_required and not record.license:
        findings.append(Finding("error", "license-required", "license",
                                f"a license is required by profile {profile.name}"))
    if record.artifact_kind and record.artifact_kind not in profile.allowed_artifact_kinds:
        findings.append(Finding("error", "artifact-kind", "artifact_kind",
                                f"artifact kind {record.artifact_kind!r} not accepted by {profile.name}"))
    for c in conflicts:
        values = ", ".join(sorted({_show(l.value) for l in c.losers}))
        findings.append(Finding(
            "error" if strict else "info", "merge-conflict", c.field_path,
            f"kept {_show(c.winner.value)} from {c.winner.source_kind.value}; discarded {values}",
        ))
    return LintReport(profile.name, tuple(findings))
