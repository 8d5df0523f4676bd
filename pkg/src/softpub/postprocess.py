"""After deposit: write the DOI back, export CodeMeta, emit the run report."""

from __future__ import annotations

import datetime as _dt
import json
import logging
import os
import re
from pathlib import Path
from typing import Any, Sequence

import yaml

from .model import (DOI_RE, SCHEMA_VERSION, ArtifactKind, CanonicalRecord, Identifier, IdentifierScheme,
                    Relation, normalize_doi, spdx_expression_valid)

log = logging.getLogger(__name__)

REPORT_NAME = "hermes-report.json"
CODEMETA_CONTEXT = "https://w3id.org/codemeta/3.0"


class WritebackError(Exception):
    pass


def atomic_write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


# --------------------------------------------------------------------------- #
# writeback

def _pick_receipt(receipts, target: str | None):
    published = [r for r in receipts if r.state == "published" and r.pid is not None]
    units = {r.unit for r in published}
    if len(units) > 1:
        raise WritebackError(f"receipts for several units passed at once: {sorted(units)}")
    if target is not None:
        published = [r for r in published if r.target == target]
    if not published:
        return None
    if len(published) > 1:
        raise WritebackError(
            f"unit {published[0].unit} has receipts from {sorted(r.target for r in published)}; "
            "set writeback_target to choose one")
    return published[0]


_CFF_DOI = re.compile(r"^doi:[ \t]*(?P<value>.*?)[ \t]*(?:#.*)?$", re.M)


def _cff_with_doi(text: str, doi: str) -> str | None:
    """Return the edited text, or None when the doi is already there."""
    m = _CFF_DOI.search(text)
    if m:
        current = m.group("value").strip("'\"")
        if current and normalize_doi(current) == doi:
            return None
        return text[:m.start()] + f"doi: {doi}" + text[m.end():]
    if text and not text.endswith("\n"):
        text += "\n"
    return text + f"doi: {doi}\n"


def _top_level_key(text: str, key: str) -> tuple[int, int] | None:
    """Span of the value of ``key`` in the top-level JSON object of ``text``."""
    depth, i, n = 0, 0, len(text)
    decoder = json.JSONDecoder()
    while i < n:
        c = text[i]
        if c == '"':
            s, end = json.decoder.scanstring(text, i + 1)
            if depth == 1:
                j = end
                while j < n and text[j] in " \t\r\n":
                    j += 1
                if j < n and text[j] == ":":
                    if s == key:
                        j += 1
                        while text[j] in " \t\r\n":
                            j += 1
                        _, vend = decoder.raw_decode(text, j)
                        return j, vend
            i = end
            continue
        if c in "{[":
            depth += 1
        elif c in "}]":
            depth -= 1
        i += 1
    return None


def _is_doi_value(v) -> bool:
    return (isinstance(v, str) and (v.startswith("10.") or "doi.org/" in v)
            and DOI_RE.match(normalize_doi(v)) is not None)


def _codemeta_with_doi(text: str, doi: str) -> str | None:
    doc = json.loads(text)
    url = f"https://doi.org/{doi}"
    span = _top_level_key(text, "identifier")
    if span is None:
        close = text.rstrip().rfind("}")
        body = text[:close].rstrip()
        indent = re.search(r'\n([ \t]+)"', text)
        pad = indent.group(1) if indent else "  "
        sep = "," if not body.endswith("{") else ""
        return f'{body}{sep}\n{pad}"identifier": {json.dumps(url)}\n' + text[close:]
    current = doc["identifier"]
    values = current if isinstance(current, list) else [current]
    if any(_is_doi_value(v) and normalize_doi(v) == doi for v in values):
        return None
    # a previous version's DOI is replaced, anything else is kept alongside
    kept = [v for v in values if not _is_doi_value(v)]
    new = url if not kept else [*kept, url]
    return text[:span[0]] + json.dumps(new) + text[span[1]:]


def minimal_cff(record: CanonicalRecord, doi: str) -> str:
    authors = []
    for a in record.authors:
        entry = {}
        if a.family_names or a.given_names:
            if a.family_names:
                entry["family-names"] = a.family_names
            if a.given_names:
                entry["given-names"] = a.given_names
        else:
            entry["name"] = a.full_name
        if a.orcid:
            entry["orcid"] = f"https://orcid.org/{a.orcid}"
        authors.append(entry)
    doc: dict[str, Any] = {
        "cff-version": "1.2.0",
        "message": "If you use this software, please cite it using the metadata from this file.",
        "type": "dataset" if record.artifact_kind == ArtifactKind.DATASET.value else "software",
        "title": record.name,
        "authors": authors,
    }
    if record.version:
        doc["version"] = record.version
    doc["doi"] = doi
    return yaml.safe_dump(doc, sort_keys=False, allow_unicode=True)


def writeback(receipts: Sequence, unit_root, record: CanonicalRecord | None = None,
              target: str | None = None, notes: list | None = None) -> list[Path]:
    """Put the minted DOI into CITATION.cff and codemeta.json under ``unit_root``.

    Returns the files actually changed. ``notes`` collects warnings.
    """
    notes = notes if notes is not None else []
    receipt = _pick_receipt(receipts, target)
    if receipt is None:
        return []
    doi = receipt.pid.value
    root = Path(unit_root)
    cff, codemeta = root / "CITATION.cff", root / "codemeta.json"
    changed: list[Path] = []
    if cff.is_file():
        text = cff.read_text(encoding="utf-8")
        edited = _cff_with_doi(text, doi)
        if edited is not None:
            changed.append(atomic_write(cff, edited))
    if codemeta.is_file():
        text = codemeta.read_text(encoding="utf-8")
        edited = _codemeta_with_doi(text, doi)
        if edited is not None:
            changed.append(atomic_write(codemeta, edited))
    if not cff.is_file() and not codemeta.is_file():
        if record is None or not record.authors:
            notes.append(f"{receipt.unit}: no CITATION.cff or codemeta.json and no authors to create one")
            log.warning(notes[-1])
            return changed
        changed.append(atomic_write(cff, minimal_cff(record, doi)))
        notes.append(f"{receipt.unit}: created a minimal CITATION.cff for the new DOI")
        log.warning(notes[-1])
    return changed


# --------------------------------------------------------------------------- #
# CodeMeta export

_CODEMETA_TYPES = {
    ArtifactKind.SOFTWARE.value: "SoftwareSourceCode",
    ArtifactKind.DATASET.value: "Dataset",
    ArtifactKind.OTHER.value: "CreativeWork",
}

_RELATION_TERMS = {
    Relation.SELF: "identifier",
    Relation.IS_PART_OF: "isPartOf",
    Relation.IS_VERSION_OF: "isBasedOn",
    Relation.CITES: "citation",
}


def _person(agent) -> dict:
    out: dict[str, Any] = {"@type": "Person"}
    if agent.orcid:
        out["@id"] = f"https://orcid.org/{agent.orcid}"
    if agent.given_names:
        out["givenName"] = agent.given_names
    if agent.family_names:
        out["familyName"] = agent.family_names
    if agent.full_name:
        out["name"] = agent.full_name
    if agent.email:
        out["email"] = agent.email
    if agent.affiliation:
        out["affiliation"] = {"@type": "Organization", "name": agent.affiliation}
    return out


def _identifier(ident: Identifier):
    if ident.scheme is IdentifierScheme.DOI:
        return f"https://doi.org/{ident.value}"
    return {"@type": "PropertyValue", "propertyID": ident.scheme.value, "value": ident.value}


def _license(expr: str):
    if re.fullmatch(r"[A-Za-z0-9.+-]+", expr) and spdx_expression_valid(expr):
        return f"https://spdx.org/licenses/{expr}"
    return expr


def codemeta_document(record: CanonicalRecord) -> dict:
    doc: dict[str, Any] = {
        "@context": CODEMETA_CONTEXT,
        "@type": _CODEMETA_TYPES.get(record.artifact_kind or "software", "SoftwareSourceCode"),
        "name": record.name,
    }
    simple = [("version", record.version), ("description", record.description),
              ("codeRepository", record.repository_url), ("datePublished", record.date_released)]
    for key, value in simple:
        if value:
            doc[key] = value
    if record.license:
        doc["license"] = _license(record.license)
    if record.authors:
        doc["author"] = [_person(a) for a in record.authors]
    if record.contributors:
        doc["contributor"] = [_person(a) for a in record.contributors]
    for key, values in (("keywords", record.keywords), ("programmingLanguage", record.programming_languages),
                        ("funding", record.funding)):
        if values:
            doc[key] = list(values)
    for ident in record.identifiers:
        doc.setdefault(_RELATION_TERMS[ident.relation], []).append(_identifier(ident))
    for ref in record.references:
        if ref.scheme is IdentifierScheme.OTHER:
            doc.setdefault("softwareRequirements", []).append(ref.value)
        else:
            doc.setdefault("referencePublication", []).append(_identifier(ref))
    return doc


def export_codemeta(record: CanonicalRecord, path) -> Path:
    return atomic_write(path, json.dumps(codemeta_document(record), indent=2, ensure_ascii=False) + "\n")


# --------------------------------------------------------------------------- #
# report

def build_report(units: list[dict], exit_status: int, errors: Sequence[str] = (),
                 now: _dt.datetime | None = None) -> dict:
    now = now or _dt.datetime.now(_dt.timezone.utc)
    return {
        "schema_version": SCHEMA_VERSION,
        "generated_at": now.replace(microsecond=0).isoformat(),
        "exit_status": exit_status,
        "units": units,
        "errors": list(errors),
    }


def write_report(report: dict, path) -> Path:
    """Write ``report`` (see :func:`build_report`) as indented JSON."""
    return atomic_write(path, json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


def comparable(report: dict) -> dict:
    """The report minus fields that legitimately change between runs."""
    return {k: v for k, v in report.items() if k != "generated_at"}
