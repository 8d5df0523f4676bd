"""Canonical metadata vocabulary, provenance wrappers and pipeline configuration."""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field, fields as dc_fields
from typing import Any, Mapping

from license_expression import ExpressionError, get_spdx_licensing

SCHEMA_VERSION = "1.0"


class SourceKind(str, enum.Enum):
    CFF = "cff"
    CODEMETA = "codemeta"
    ZENODO_JSON = "zenodo_json"
    LICENSE_FILE = "license_file"
    MANIFEST = "manifest"
    VCS = "vcs"
    PLATFORM_API = "platform_api"
    PLAINTEXT = "plaintext"

    @property
    def stage(self) -> int:
        if self is SourceKind.MANIFEST:
            return 2
        if self is SourceKind.PLAINTEXT:
            return 3
        return 1


DEFAULT_PRECEDENCE: tuple[SourceKind, ...] = (
    SourceKind.CFF,
    SourceKind.CODEMETA,
    SourceKind.ZENODO_JSON,
    SourceKind.LICENSE_FILE,
    SourceKind.MANIFEST,
    SourceKind.PLATFORM_API,
    SourceKind.VCS,
    SourceKind.PLAINTEXT,
)


class Confidence(str, enum.Enum):
    EXACT = "exact"
    MAPPED = "mapped"
    HEURISTIC = "heuristic"

    @property
    def rank(self) -> int:
        # lower is stronger
        return _CONFIDENCE_RANK[self]


_CONFIDENCE_RANK = {Confidence.EXACT: 0, Confidence.MAPPED: 1, Confidence.HEURISTIC: 2}


class ArtifactKind(str, enum.Enum):
    SOFTWARE = "software"
    DATASET = "dataset"
    OTHER = "other"


# --------------------------------------------------------------------------- #
# identifiers and agents

ORCID_RE = re.compile(r"^\d{4}-\d{4}-\d{4}-\d{3}[\dX]$")
DOI_RE = re.compile(r"^10\.\d{4,9}/\S+$")


def orcid_checksum_ok(orcid: str) -> bool:
    """ISO 7064 MOD 11-2 check digit used by ORCID iDs."""
    digits = orcid.replace("-", "")
    total = 0
    for ch in digits[:-1]:
        total = (total + int(ch)) * 2
    check = (12 - total % 11) % 11
    expected = "X" if check == 10 else str(check)
    return digits[-1] == expected


def normalize_orcid(value: str) -> str:
    """Strip URL prefixes from an ORCID iD and validate it; raises ValueError."""
    v = value.strip()
    v = re.sub(r"^(https?://)?(www\.)?orcid\.org/", "", v, flags=re.I)
    v = v.upper()
    if not ORCID_RE.match(v) or not orcid_checksum_ok(v):
        raise ValueError(f"invalid ORCID iD: {value!r}")
    return v


def normalize_doi(value: str) -> str:
    v = value.strip()
    v = re.sub(r"^(https?://)?(dx\.)?doi\.org/", "", v, flags=re.I)
    v = re.sub(r"^doi:\s*", "", v, flags=re.I)
    return v


@dataclass(frozen=True, order=True)
class Agent:
    given_names: str | None = None
    family_names: str | None = None
    full_name: str | None = None
    orcid: str | None = None
    email: str | None = None
    affiliation: str | None = None

    def __post_init__(self):
        if not self.full_name and not (self.given_names or self.family_names):
            raise ValueError("agent needs a full name or given/family names")
        if self.orcid is not None:
            object.__setattr__(self, "orcid", normalize_orcid(self.orcid))

    @property
    def display_name(self) -> str:
        if self.given_names or self.family_names:
            return " ".join(p for p in (self.given_names, self.family_names) if p)
        return self.full_name or ""

    @property
    def citation_name(self) -> str:
        """``Family, Given`` form used by Invenio-style creators."""
        if self.family_names and self.given_names:
            return f"{self.family_names}, {self.given_names}"
        return self.family_names or self.given_names or self.full_name or ""

    def to_dict(self) -> dict[str, str]:
        return {f.name: getattr(self, f.name) for f in dc_fields(self) if getattr(self, f.name)}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Agent":
        return cls(**{f.name: data.get(f.name) for f in dc_fields(cls)})


class IdentifierScheme(str, enum.Enum):
    DOI = "doi"
    URL = "url"
    SWHID = "swhid"
    OTHER = "other"


class Relation(str, enum.Enum):
    IS_VERSION_OF = "is_version_of"
    CITES = "cites"
    IS_PART_OF = "is_part_of"
    SELF = "self"


@dataclass(frozen=True, order=True)
class Identifier:
    scheme: IdentifierScheme
    value: str
    relation: Relation = Relation.SELF

    def __post_init__(self):
        object.__setattr__(self, "scheme", IdentifierScheme(self.scheme))
        object.__setattr__(self, "relation", Relation(self.relation))
        if not self.value:
            raise ValueError("identifier value must be non-empty")
        if self.scheme is IdentifierScheme.DOI:
            doi = normalize_doi(self.value)
            if not DOI_RE.match(doi):
                raise ValueError(f"not a DOI: {self.value!r}")
            object.__setattr__(self, "value", doi)

    def to_dict(self) -> dict[str, str]:
        return {"scheme": self.scheme.value, "value": self.value, "relation": self.relation.value}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Identifier":
        return cls(data["scheme"], data["value"], data.get("relation", "self"))


def classify_identifier(value: str, relation: Relation = Relation.SELF) -> Identifier:
    """Infer the scheme of a bare identifier string."""
    v = value.strip()
    if DOI_RE.match(normalize_doi(v)) and (v.startswith("10.") or "doi" in v.lower()[:20]):
        return Identifier(IdentifierScheme.DOI, v, relation)
    if v.startswith("swh:"):
        return Identifier(IdentifierScheme.SWHID, v, relation)
    if re.match(r"^https?://", v):
        return Identifier(IdentifierScheme.URL, v, relation)
    return Identifier(IdentifierScheme.OTHER, v, relation)


# --------------------------------------------------------------------------- #
# licenses

_licensing = get_spdx_licensing()


def spdx_expression_valid(expr: str) -> bool:
    try:
        parsed = _licensing.parse(expr, validate=False)
    except ExpressionError:
        return False
    if parsed is None:
        return False
    for sym in _licensing.license_symbols(parsed, unique=True):
        key = sym.key
        if key.startswith("LicenseRef-"):
            continue
        if _licensing.validate(key).errors:
            return False
    return True


def normalize_spdx(expr: str) -> str:
    """Return the canonical casing of a valid SPDX expression; raises ValueError."""
    if not spdx_expression_valid(expr):
        raise ValueError(f"not a valid SPDX expression: {expr!r}")
    info = _licensing.validate(expr)
    return info.normalized_expression or expr.strip()


# --------------------------------------------------------------------------- #
# provenance

TEXT = "text"
TEXTS = "texts"
AGENTS = "agents"
IDENTIFIERS = "identifiers"

FIELD_KINDS: dict[str, str] = {
    "name": TEXT,
    "version": TEXT,
    "description": TEXT,
    "authors": AGENTS,
    "contributors": AGENTS,
    "license": TEXT,
    "keywords": TEXTS,
    "programming_languages": TEXTS,
    "repository_url": TEXT,
    "identifiers": IDENTIFIERS,
    "date_released": TEXT,
    "funding": TEXTS,
    "references": IDENTIFIERS,
    "artifact_kind": TEXT,
}
CANONICAL_FIELDS = tuple(FIELD_KINDS)
SCALAR_FIELDS = tuple(k for k, v in FIELD_KINDS.items() if v == TEXT)


def encode_value(value: Any) -> Any:
    """Plain-JSON form of a field value (Agents/Identifiers become dicts)."""
    if isinstance(value, (Agent, Identifier)):
        return value.to_dict()
    if isinstance(value, (list, tuple)):
        return [encode_value(v) for v in value]
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, dict):
        return {k: encode_value(v) for k, v in value.items()}
    return value


def decode_value(path: str, value: Any) -> Any:
    kind = FIELD_KINDS[path]
    if kind == AGENTS:
        return tuple(Agent.from_dict(v) for v in value)
    if kind == IDENTIFIERS:
        return tuple(Identifier.from_dict(v) for v in value)
    if kind == TEXTS:
        return tuple(value)
    return value


def canonical_json(obj: Any) -> str:
    return json.dumps(encode_value(obj), sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def dumps(obj: Any) -> str:
    """Stable, human-readable JSON used for every file handed between stages."""
    return json.dumps(encode_value(obj), sort_keys=True, ensure_ascii=False, indent=2) + "\n"


@dataclass(frozen=True)
class ProvenancedField:
    field_path: str
    value: Any
    source_kind: SourceKind
    location: str
    confidence: Confidence

    def __post_init__(self):
        object.__setattr__(self, "source_kind", SourceKind(self.source_kind))
        object.__setattr__(self, "confidence", Confidence(self.confidence))
        if isinstance(self.value, list):
            object.__setattr__(self, "value", _freeze(self.value))

    def to_dict(self) -> dict[str, Any]:
        return {
            "field_path": self.field_path,
            "value": encode_value(self.value),
            "source_kind": self.source_kind.value,
            "location": self.location,
            "confidence": self.confidence.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], *, canonical: bool = False) -> "ProvenancedField":
        value = data["value"]
        if canonical:
            value = decode_value(data["field_path"], value)
        return cls(data["field_path"], value, data["source_kind"], data["location"], data["confidence"])


def _freeze(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_freeze(v) for v in value)
    return value


def _thaw(value: Any) -> Any:
    if isinstance(value, tuple):
        return [_thaw(v) for v in value]
    if isinstance(value, dict):
        return {k: _thaw(v) for k, v in value.items()}
    return value


@dataclass(frozen=True)
class HarvestResult:
    source_kind: SourceKind
    location: str
    fields: tuple[ProvenancedField, ...] = ()
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "source_kind", SourceKind(self.source_kind))
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(self, "warnings", tuple(self.warnings))
        for f in self.fields:
            if f.source_kind is not self.source_kind:
                raise ValueError(f"field {f.field_path} has source {f.source_kind}, expected {self.source_kind}")

    def native(self, key: str) -> Any:
        """Value of the first native field named ``key`` (None if absent)."""
        for f in self.fields:
            if f.field_path == key:
                return _thaw(f.value)
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "source_kind": self.source_kind.value,
            "location": self.location,
            "fields": [f.to_dict() for f in self.fields],
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "HarvestResult":
        return cls(
            data["source_kind"],
            data["location"],
            tuple(ProvenancedField.from_dict(f) for f in data["fields"]),
            tuple(data.get("warnings", ())),
        )


@dataclass(frozen=True)
class CanonicalRecord:
    name: str | None = None
    version: str | None = None
    description: str | None = None
    authors: tuple[Agent, ...] = ()
    contributors: tuple[Agent, ...] = ()
    license: str | None = None
    keywords: tuple[str, ...] = ()
    programming_languages: tuple[str, ...] = ()
    repository_url: str | None = None
    identifiers: tuple[Identifier, ...] = ()
    date_released: str | None = None
    funding: tuple[str, ...] = ()
    references: tuple[Identifier, ...] = ()
    artifact_kind: str | None = None
    provenance: Mapping[str, tuple[ProvenancedField, ...]] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for name in CANONICAL_FIELDS:
            v = getattr(self, name)
            if isinstance(v, list):
                object.__setattr__(self, name, tuple(v))
        if self.license is not None and not spdx_expression_valid(self.license):
            raise ValueError(f"license is not a valid SPDX expression: {self.license!r}")
        if self.artifact_kind is not None:
            ArtifactKind(self.artifact_kind)

    def values(self) -> dict[str, Any]:
        """Present (non-empty) canonical fields, without provenance."""
        out = {}
        for name in CANONICAL_FIELDS:
            v = getattr(self, name)
            if v in (None, "", ()):
                continue
            out[name] = v
        return out

    def as_fields(self, source_kind: SourceKind, location: str,
                  confidence: Confidence = Confidence.EXACT) -> list[ProvenancedField]:
        return [ProvenancedField(k, v, source_kind, location, confidence) for k, v in self.values().items()]

    def to_dict(self) -> dict[str, Any]:
        return {
            "values": encode_value(self.values()),
            "provenance": {k: [f.to_dict() for f in v] for k, v in sorted(self.provenance.items())},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CanonicalRecord":
        values = {k: decode_value(k, v) for k, v in data["values"].items()}
        prov = {
            k: tuple(ProvenancedField.from_dict(f, canonical=True) for f in v)
            for k, v in data.get("provenance", {}).items()
        }
        return cls(**values, provenance=prov)


# --------------------------------------------------------------------------- #
# configuration

class ConfigError(ValueError):
    def __init__(self, message: str, *, key: str | None = None,
                 line: int | None = None, column: int | None = None):
        self.key = key
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        elif key is not None:
            where = f" [{key}]"
        super().__init__(message + where)


class TargetKind(str, enum.Enum):
    INVENIO_RDM = "invenio_rdm"
    DATAVERSE = "dataverse"


@dataclass(frozen=True)
class TargetConfig:
    name: str
    kind: TargetKind
    base_url: str
    requirement_profile: str | Mapping[str, Any] | None = None
    community_or_collection: str | None = None
    credentials_env: str | None = None

    @property
    def profile_name(self) -> str:
        if isinstance(self.requirement_profile, str):
            return self.requirement_profile
        if self.requirement_profile:
            return self.requirement_profile.get("name", f"{self.name}-inline")
        return "invenio-default" if self.kind is TargetKind.INVENIO_RDM else "dataverse-default"


@dataclass(frozen=True)
class PublishUnit:
    name: str
    paths: tuple[str, ...]
    root: str = "."


@dataclass(frozen=True)
class PlatformConfig:
    repository: str
    api_url: str = "https://api.github.com"
    fixtures: str | None = None


@dataclass(frozen=True)
class PipelineConfig:
    publish_units: tuple[PublishUnit, ...]
    targets: tuple[TargetConfig, ...] = ()
    precedence: tuple[SourceKind, ...] = DEFAULT_PRECEDENCE
    deposit_files: bool = False
    strict: bool = False
    writeback: bool = False
    writeback_target: str | None = None
    platform: PlatformConfig | None = None
    base_dir: str = field(default=".", compare=False)

    def __post_init__(self):
        if not self.publish_units:
            raise ConfigError("at least one publish unit is required", key="unit")
        names = [u.name for u in self.publish_units]
        if len(set(names)) != len(names):
            raise ConfigError("publish unit names must be unique", key="unit.name")
        tnames = [t.name for t in self.targets]
        if len(set(tnames)) != len(tnames):
            raise ConfigError("target names must be unique", key="target.name")
        if len(set(self.precedence)) != len(self.precedence):
            raise ConfigError("precedence lists a source kind twice", key="precedence")

    @property
    def credentials(self) -> dict[str, str]:
        return {t.name: t.credentials_env for t in self.targets if t.credentials_env}

    def unit(self, name: str) -> PublishUnit:
        for u in self.publish_units:
            if u.name == name:
                return u
        raise ConfigError(f"unknown unit {name!r}", key="unit")

    def target(self, name: str) -> TargetConfig:
        for t in self.targets:
            if t.name == name:
                return t
        raise ConfigError(f"unknown target {name!r}", key="target")

    def jobs(self) -> list[tuple[PublishUnit, TargetConfig]]:
        """The N x M (unit, target) pairs, units outermost."""
        return [(u, t) for u in self.publish_units for t in self.targets]


_UNIT_KEYS = {"name", "paths", "root"}
_TARGET_KEYS = {"name", "kind", "base_url", "profile", "credentials_env", "community"}
_TOP_KEYS = {"unit", "target", "precedence", "deposit_files", "strict", "writeback",
             "writeback_target", "platform"}


def _toml():
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    return tomllib


def parse_config(text: str, base_dir: str = ".") -> PipelineConfig:
    toml = _toml()
    try:
        doc = toml.loads(text)
    except toml.TOMLDecodeError as exc:
        m = re.search(r"line (\d+), column (\d+)", str(exc))
        if m:
            line, col = int(m.group(1)), int(m.group(2))
        else:  # "at end of document"
            lines = text.split("\n")
            line, col = len(lines), len(lines[-1]) + 1
        raise ConfigError(f"config parse error: {exc}", line=line, column=col) from exc
    return config_from_dict(doc, base_dir)


def config_from_dict(doc: Mapping[str, Any], base_dir: str = ".") -> PipelineConfig:
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown key {sorted(unknown)[0]!r}", key=sorted(unknown)[0])

    units = []
    for i, u in enumerate(doc.get("unit", [])):
        bad = set(u) - _UNIT_KEYS
        if bad:
            raise ConfigError(f"unknown key {sorted(bad)[0]!r}", key=f"unit[{i}].{sorted(bad)[0]}")
        if not u.get("name"):
            raise ConfigError("unit needs a name", key=f"unit[{i}].name")
        paths = u.get("paths", ["**/*"])
        if isinstance(paths, str):
            paths = [paths]
        if not paths:
            raise ConfigError("unit paths must not be empty", key=f"unit[{i}].paths")
        units.append(PublishUnit(u["name"], tuple(paths), u.get("root", ".")))

    targets = []
    for i, t in enumerate(doc.get("target", [])):
        bad = set(t) - _TARGET_KEYS
        if bad:
            raise ConfigError(f"unknown key {sorted(bad)[0]!r}", key=f"target[{i}].{sorted(bad)[0]}")
        try:
            kind = TargetKind(t.get("kind"))
        except ValueError:
            raise ConfigError(f"unknown target kind {t.get('kind')!r}", key=f"target[{i}].kind") from None
        if not t.get("base_url"):
            raise ConfigError("target needs base_url", key=f"target[{i}].base_url")
        targets.append(TargetConfig(
            name=t.get("name", kind.value if i == 0 else f"{kind.value}-{i}"),
            kind=kind,
            base_url=t["base_url"].rstrip("/"),
            requirement_profile=t.get("profile"),
            community_or_collection=t.get("community"),
            credentials_env=t.get("credentials_env"),
        ))

    precedence = DEFAULT_PRECEDENCE
    if "precedence" in doc:
        try:
            precedence = tuple(SourceKind(p) for p in doc["precedence"])
        except ValueError as exc:
            raise ConfigError(str(exc), key="precedence") from None

    platform = None
    if "platform" in doc:
        p = doc["platform"]
        if "repository" not in p:
            raise ConfigError("platform needs repository", key="platform.repository")
        platform = PlatformConfig(p["repository"], p.get("api_url", "https://api.github.com"), p.get("fixtures"))

    return PipelineConfig(
        publish_units=tuple(units),
        targets=tuple(targets),
        precedence=precedence,
        deposit_files=bool(doc.get("deposit_files", False)),
        strict=bool(doc.get("strict", False)),
        writeback=bool(doc.get("writeback", False)),
        writeback_target=doc.get("writeback_target"),
        platform=platform,
        base_dir=base_dir,
    )


def load_config(path) -> PipelineConfig:
    from pathlib import Path

    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config(text, str(p.resolve().parent))


def config_to_dict(config: PipelineConfig) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "unit": [{"name": u.name, "paths": list(u.paths), "root": u.root} for u in config.publish_units],
        "precedence": [s.value for s in config.precedence],
        "deposit_files": config.deposit_files,
        "strict": config.strict,
        "writeback": config.writeback,
    }
    targets = []
    for t in config.targets:
        d = {"name": t.name, "kind": t.kind.value, "base_url": t.base_url}
        if t.requirement_profile is not None:
            d["profile"] = t.requirement_profile if isinstance(t.requirement_profile, str) else dict(t.requirement_profile)
        if t.community_or_collection:
            d["community"] = t.community_or_collection
        if t.credentials_env:
            d["credentials_env"] = t.credentials_env
        targets.append(d)
    if targets:
        doc["target"] = targets
    if config.writeback_target:
        doc["writeback_target"] = config.writeback_target
    if config.platform:
        p = {"repository": config.platform.repository, "api_url": config.platform.api_url}
        if config.platform.fixtures:
            p["fixtures"] = config.platform.fixtures
        doc["platform"] = p
    return doc


def dump_config(config: PipelineConfig) -> str:
    import tomli_w

    return tomli_w.dumps(config_to_dict(config))
