"""Canonical record -> target-native deposit payloads."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..model import ArtifactKind, CanonicalRecord, IdentifierScheme, Relation
from ..process.lint import contact_email


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class Payload:
    """A target document plus the bookkeeping the run report needs.

    ``mapped`` lists canonical fields with a native slot in ``document``;
    ``unmapped`` lists the others as ``{"field", "handling"}`` entries.
    """

    document: dict
    mapped: tuple[str, ...] = ()
    unmapped: tuple[dict, ...] = field(default_factory=tuple)


UPLOAD_TYPES = {
    ArtifactKind.SOFTWARE.value: "software",
    ArtifactKind.DATASET.value: "dataset",
    ArtifactKind.OTHER.value: "other",
}

INVENIO_RELATIONS = {
    Relation.SELF: "isVersionOf",
    Relation.IS_VERSION_OF: "isVersionOf",
    Relation.IS_PART_OF: "isPartOf",
    Relation.CITES: "cites",
}


def _upload_type(kind: str | None) -> str:
    if kind is None:
        raise MappingError("record has no artifact_kind to map to an upload type")
    if kind not in UPLOAD_TYPES:
        raise MappingError(f"artifact_kind {kind!r} has no upload type")
    return UPLOAD_TYPES[kind]


def _creator(agent) -> dict:
    out = {"name": agent.citation_name}
    if agent.orcid:
        out["orcid"] = agent.orcid
    if agent.affiliation:
        out["affiliation"] = agent.affiliation
    return out


def map_to_invenio(record: CanonicalRecord) -> Payload:
    doc: dict = {"title": record.name, "upload_type": _upload_type(record.artifact_kind)}
    mapped = ["name", "artifact_kind"]
    unmapped = []

    def put(key, value, canonical):
        if value not in (None, "", (), []):
            doc[key] = value
            mapped.append(canonical)

    put("creators", [_creator(a) for a in record.authors], "authors")
    put("contributors", [{**_creator(a), "type": "Other"} for a in record.contributors], "contributors")
    put("description", record.description, "description")
    put("license", record.license, "license")
    put("keywords", list(record.keywords), "keywords")
    related = [{"identifier": i.value, "relation": INVENIO_RELATIONS[i.relation], "scheme": i.scheme.value}
               for i in record.identifiers]
    if record.repository_url:
        related.append({"identifier": record.repository_url, "relation": "isSupplementTo", "scheme": "url"})
        mapped.append("repository_url")
    if record.identifiers:
        mapped.append("identifiers")
    if related:
        doc["related_identifiers"] = related
    put("version", record.version, "version")
    put("publication_date", record.date_released, "date_released")
    put("references", [i.value for i in record.references], "references")
    for name in ("programming_languages", "funding"):
        if getattr(record, name):
            unmapped.append({"field": name, "handling": "dropped: no native slot"})
    return Payload(doc, tuple(mapped), tuple(unmapped))


# Dataverse citation-block field helpers

def _prim(name, value, multiple=False):
    return {"typeName": name, "multiple": multiple, "typeClass": "primitive", "value": value}


def _vocab(name, value, multiple=False):
    return {"typeName": name, "multiple": multiple, "typeClass": "controlledVocabulary", "value": value}


def _compound(name, rows):
    return {"typeName": name, "multiple": True, "typeClass": "compound", "value": rows}


DATAVERSE_SUBJECT = "Computer and Information Science"


def map_to_dataverse(record: CanonicalRecord, require_contact: bool = True) -> Payload:
    fields = [_prim("title", record.name)]
    mapped = ["name"]
    unmapped = []

    if record.authors:
        rows = []
        for a in record.authors:
            row = {"authorName": _prim("authorName", a.citation_name)}
            if a.affiliation:
                row["authorAffiliation"] = _prim("authorAffiliation", a.affiliation)
            if a.orcid:
                row["authorIdentifierScheme"] = _vocab("authorIdentifierScheme", "ORCID")
                row["authorIdentifier"] = _prim("authorIdentifier", a.orcid)
            rows.append(row)
        fields.append(_compound("author", rows))
        mapped.append("authors")

    email = contact_email(record)
    if email:
        name = next(a.citation_name for a in record.authors if a.email == email)
        fields.append(_compound("datasetContact", [{
            "datasetContactName": _prim("datasetContactName", name),
            "datasetContactEmail": _prim("datasetContactEmail", email),
        }]))
    elif require_contact:
        raise MappingError("no author carries an email address for the dataset contact")

    if record.description:
        fields.append(_compound("dsDescription", [
            {"dsDescriptionValue": _prim("dsDescriptionValue", record.description)}]))
        mapped.append("description")

    keywords = [*record.keywords, *(f"lang:{l}" for l in record.programming_languages)]
    if keywords:
        fields.append(_compound("keyword", [{"keywordValue": _prim("keywordValue", k)} for k in keywords]))
    if record.keywords:
        mapped.append("keywords")
    if record.programming_languages:
        unmapped.append({"field": "programming_languages", "handling": "carried as keyword 'lang:<name>'"})

    fields.append(_vocab("subject", [DATAVERSE_SUBJECT], multiple=True))

    other = [{"otherIdAgency": _prim("otherIdAgency", i.scheme.value.upper()),
              "otherIdValue": _prim("otherIdValue", i.value)} for i in record.identifiers]
    if record.version:
        other.append({"otherIdAgency": _prim("otherIdAgency", "software-version"),
                      "otherIdValue": _prim("otherIdValue", record.version)})
        unmapped.append({"field": "version", "handling": "carried as otherId 'software-version'"})
    if record.identifiers:
        unmapped.append({"field": "identifiers", "handling": "carried as otherId"})
    if other:
        fields.append(_compound("otherId", other))

    if record.date_released:
        fields.append(_prim("distributionDate", record.date_released))
        mapped.append("date_released")
    if record.contributors:
        fields.append(_compound("contributor", [{
            "contributorType": _vocab("contributorType", "Other"),
            "contributorName": _prim("contributorName", a.citation_name),
        } for a in record.contributors]))
        mapped.append("contributors")
    if record.funding:
        fields.append(_compound("grantNumber", [
            {"grantNumberAgency": _prim("grantNumberAgency", f)} for f in record.funding]))
        mapped.append("funding")
    if record.artifact_kind:
        fields.append(_prim("kindOfData", [record.artifact_kind.capitalize()], multiple=True))
        mapped.append("artifact_kind")
    if record.references:
        fields.append(_compound("publication", [{
            "publicationIDType": _vocab("publicationIDType", _pub_id_type(i.scheme)),
            "publicationIDNumber": _prim("publicationIDNumber", i.value),
        } for i in record.references]))
        mapped.append("references")
    if record.repository_url:
        fields.append(_prim("relatedMaterial", [record.repository_url], multiple=True))
        unmapped.append({"field": "repository_url", "handling": "carried as relatedMaterial"})

    doc: dict = {"metadataBlocks": {"citation": {"displayName": "Citation Metadata", "fields": fields}}}
    if record.license:
        doc["license"] = {"name": record.license}
        mapped.append("license")
    return Payload(doc, tuple(mapped), tuple(unmapped))


def _pub_id_type(scheme: IdentifierScheme) -> str:
    return {IdentifierScheme.DOI: "doi", IdentifierScheme.URL: "url"}.get(scheme, "other")


def covered_fields(payload: Payload) -> set[str]:
    return set(payload.mapped) | {u["field"] for u in payload.unmapped}
