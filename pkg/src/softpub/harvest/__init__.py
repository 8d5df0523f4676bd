"""Source discovery and the per-kind harvesters."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..model import HarvestResult, PipelineConfig, SourceKind
from .base import HarvestError, SchemaViolation
from .cff import harvest_cff
from .codemeta import harvest_codemeta
from .licenses import LICENSE_FILE_RE, harvest_license
from .manifest import DIALECTS, UnknownDialect, harvest_manifest
from .platform import (PlatformAuthError, PlatformError, PlatformNotFound, harvest_platform,
                       repository_endpoint)
from .plaintext import find_readme, harvest_plaintext
from .vcs import VcsError, harvest_vcs, is_work_tree
from .zenodo import harvest_zenodo_json

__all__ = [
    "SourceDescriptor", "discover_sources", "harvest_source", "harvest_unit",
    "harvest_cff", "harvest_codemeta", "harvest_zenodo_json", "harvest_license",
    "harvest_manifest", "harvest_vcs", "harvest_platform", "harvest_plaintext",
    "HarvestError", "SchemaViolation", "UnknownDialect", "VcsError",
    "PlatformError", "PlatformNotFound", "PlatformAuthError", "HARVESTERS",
]

# one harvester per source kind; tests assert this matches SourceKind exactly
HARVESTERS = {
    SourceKind.CFF: harvest_cff,
    SourceKind.CODEMETA: harvest_codemeta,
    SourceKind.ZENODO_JSON: harvest_zenodo_json,
    SourceKind.LICENSE_FILE: harvest_license,
    SourceKind.MANIFEST: harvest_manifest,
    SourceKind.VCS: harvest_vcs,
    SourceKind.PLATFORM_API: harvest_platform,
    SourceKind.PLAINTEXT: harvest_plaintext,
}

_FIXED_FILES = {
    SourceKind.CFF: "CITATION.cff",
    SourceKind.CODEMETA: "codemeta.json",
    SourceKind.ZENODO_JSON: ".zenodo.json",
}


@dataclass(frozen=True)
class SourceDescriptor:
    source_kind: SourceKind
    location: str
    stage: int

    @classmethod
    def of(cls, kind: SourceKind, location: str) -> "SourceDescriptor":
        return cls(kind, location, kind.stage)


def unit_root_of(config: PipelineConfig, unit) -> Path:
    return (Path(config.base_dir) / unit.root).resolve()


def platform_location(config: PipelineConfig) -> str | None:
    p = config.platform
    if p is None:
        return None
    url = repository_endpoint(p.api_url, p.repository)
    if p.fixtures is None:
        return url
    from ..transport import fixture_name

    fixture = Path(config.base_dir) / p.fixtures / fixture_name(url)
    return str(fixture) if fixture.is_file() else None


def discover_sources(unit_root, config: PipelineConfig) -> list[SourceDescriptor]:
    root = Path(unit_root)
    if not root.is_dir():
        raise HarvestError(f"unit root {root} is not a readable directory")
    try:
        entries = sorted(p.name for p in root.iterdir())
    except OSError as exc:
        raise HarvestError(f"cannot read {root}: {exc}") from exc

    enabled = set(config.precedence)
    found: list[SourceDescriptor] = []
    for kind, name in _FIXED_FILES.items():
        if kind in enabled and (root / name).is_file():
            found.append(SourceDescriptor.of(kind, name))
    if SourceKind.LICENSE_FILE in enabled:
        lic = [n for n in entries if LICENSE_FILE_RE.match(n) and (root / n).is_file()]
        if (root / "LICENSES").is_dir():
            lic.insert(0, "LICENSES")
        if lic:
            found.append(SourceDescriptor.of(SourceKind.LICENSE_FILE, lic[0]))
    if SourceKind.VCS in enabled and is_work_tree(root):
        found.append(SourceDescriptor.of(SourceKind.VCS, "."))
    if SourceKind.PLATFORM_API in enabled:
        loc = platform_location(config)
        if loc:
            found.append(SourceDescriptor.of(SourceKind.PLATFORM_API, loc))
    if SourceKind.MANIFEST in enabled:
        for name in DIALECTS:
            if (root / name).is_file():
                found.append(SourceDescriptor.of(SourceKind.MANIFEST, name))
    if SourceKind.PLAINTEXT in enabled:
        readme = find_readme(root)
        if readme is not None:
            found.append(SourceDescriptor.of(SourceKind.PLAINTEXT, readme.name))
    return sorted(found, key=lambda d: (d.stage, d.location))


def harvest_source(desc: SourceDescriptor, unit_root, config: PipelineConfig,
                   transport=None) -> HarvestResult:
    root = Path(unit_root)
    kind = desc.source_kind
    if kind in _FIXED_FILES:
        return HARVESTERS[kind](root / desc.location, root)
    if kind is SourceKind.MANIFEST:
        return harvest_manifest(root / desc.location, root=root)
    if kind is SourceKind.PLATFORM_API:
        if transport is None:
            from ..transport import FixtureTransport, HttpTransport

            p = config.platform
            transport = (FixtureTransport(Path(config.base_dir) / p.fixtures) if p.fixtures
                         else HttpTransport())
        return harvest_platform(config.platform.repository, transport, config.platform.api_url)
    return HARVESTERS[kind](root, root)


# broken dedicated metadata files are the user's to fix; everything else degrades to a warning
FATAL_KINDS = frozenset({SourceKind.CFF, SourceKind.CODEMETA, SourceKind.ZENODO_JSON})


def harvest_unit(unit_root, config: PipelineConfig, transport=None
                 ) -> tuple[list[HarvestResult], list[str]]:
    """Discover and harvest every available source, in discovery order.

    Returns the results and the messages of non-fatal harvester failures.
    """
    results, problems = [], []
    for desc in discover_sources(unit_root, config):
        try:
            results.append(harvest_source(desc, unit_root, config, transport))
        except HarvestError as exc:
            if desc.source_kind in FATAL_KINDS:
                raise
            problems.append(f"{desc.source_kind.value} ({desc.location}): {exc}")
    return results, problems
