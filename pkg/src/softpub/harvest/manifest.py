"""Package manifest harvesting for four dialects.

Native keys are emitted as ``<dialect>:<key>`` so one crosswalk table covers
every dialect.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from pathlib import Path

from ..model import Confidence, SourceKind, _toml
from .base import HarvestError, build_result, rel_location

DIALECTS = {
    "pyproject.toml": "python-project",
    "package.json": "node-package",
    "Cargo.toml": "rust-crate",
    "pom.xml": "maven-pom",
}


class UnknownDialect(HarvestError):
    pass


def _python_project(text):
    try:
        doc = _toml().loads(text)
    except Exception as exc:  # tomllib and tomli raise different classes
        raise HarvestError(f"TOML parse error: {exc}") from exc
    project = doc.get("project", {})
    items = [(k, project.get(k)) for k in ("name", "version", "description", "authors",
                                           "maintainers", "keywords", "dependencies")]
    lic = project.get("license")
    if isinstance(lic, dict):
        lic = lic.get("text")
    items.append(("license", lic))
    for label, url in (project.get("urls") or {}).items():
        items.append((f"urls.{label.lower().replace(' ', '-')}", url))
    return items


def _node_package(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise HarvestError(f"JSON parse error: {exc}") from exc
    if not isinstance(doc, dict):
        raise HarvestError("package.json top level is not an object")
    items = [(k, doc.get(k)) for k in ("name", "version", "description", "author",
                                       "contributors", "license", "keywords", "homepage")]
    repo = doc.get("repository")
    if isinstance(repo, dict):
        repo = repo.get("url")
    items.append(("repository", repo))
    deps = doc.get("dependencies") or {}
    items.append(("dependencies", [f"{k} {v}" for k, v in sorted(deps.items())]))
    return items


def _rust_crate(text):
    try:
        doc = _toml().loads(text)
    except Exception as exc:
        raise HarvestError(f"TOML parse error: {exc}") from exc
    pkg = doc.get("package", {})
    items = [(k, pkg.get(k)) for k in ("name", "version", "description", "authors",
                                       "license", "keywords", "repository", "homepage")]
    deps = []
    for name, spec in sorted((doc.get("dependencies") or {}).items()):
        version = spec.get("version", "*") if isinstance(spec, dict) else spec
        deps.append(f"{name} {version}")
    items.append(("dependencies", deps))
    return items


def _strip_ns(tree):
    for el in tree.iter():
        if isinstance(el.tag, str) and "}" in el.tag:
            el.tag = el.tag.split("}", 1)[1]
    return tree


def _maven_pom(text):
    try:
        root = _strip_ns(ET.fromstring(text))
    except ET.ParseError as exc:
        raise HarvestError(f"XML parse error: {exc}") from exc

    def txt(path):
        el = root.find(path)
        return el.text.strip() if el is not None and el.text else None

    items = [
        ("name", txt("name") or txt("artifactId")),
        ("version", txt("version")),
        ("description", txt("description")),
        ("url", txt("url")),
        ("scm.url", txt("scm/url")),
        ("licenses", [el.text.strip() for el in root.findall("licenses/license/name") if el.text]),
    ]
    devs = []
    for dev in root.findall("developers/developer"):
        d = {k: (dev.findtext(k) or "").strip() for k in ("name", "email", "organization")}
        devs.append({k: v for k, v in d.items() if v})
    items.append(("developers", devs))
    deps = []
    for dep in root.findall("dependencies/dependency"):
        coords = f"{dep.findtext('groupId', '').strip()}:{dep.findtext('artifactId', '').strip()}"
        deps.append(f"{coords} {dep.findtext('version', '*').strip()}")
    items.append(("dependencies", deps))
    return items


_PARSERS = {
    "python-project": _python_project,
    "node-package": _node_package,
    "rust-crate": _rust_crate,
    "maven-pom": _maven_pom,
}


def harvest_manifest(path, dialect=None, root=None):
    path = Path(path)
    dialect = dialect or DIALECTS.get(path.name)
    if dialect not in _PARSERS:
        raise UnknownDialect(f"unknown manifest dialect {dialect!r} for {path.name}")
    try:
        items = _PARSERS[dialect](path.read_text(encoding="utf-8"))
    except HarvestError as exc:
        raise HarvestError(f"{path}: {exc}") from exc
    return build_result(SourceKind.MANIFEST, rel_location(path, root and Path(root)),
                        [(f"{dialect}:{k}", v) for k, v in items], Confidence.MAPPED)
