"""Value transforms referenced by name from crosswalk tables.

A transform takes the native value and a ``warn`` callback and returns the
canonical value, or raises :class:`TransformError`. A table cell may carry an
argument after a colon, e.g. ``identifier-list:cites``.
"""

from __future__ import annotations

import datetime as _dt
import re
from typing import Any, Callable

from ..model import (Agent, ArtifactKind, Identifier, IdentifierScheme, Relation,
                     classify_identifier, normalize_orcid, normalize_spdx)


class TransformError(ValueError):
    pass


Warn = Callable[[str], None]


def _as_list(value):
    if value is None:
        return []
    return value if isinstance(value, (list, tuple)) else [value]


def identity(value, warn: Warn, arg=None):
    if isinstance(value, (dict, list, tuple)):
        raise TransformError(f"expected a scalar, got {type(value).__name__}")
    if isinstance(value, bool):
        raise TransformError("expected text, got a boolean")
    return str(value).strip()


def version_tag(value, warn: Warn, arg=None):
    v = identity(value, warn)
    return re.sub(r"^v(?=\d)", "", v)


# --------------------------------------------------------------------------- #
# licenses

_SPDX_URL = re.compile(r"^https?://(www\.)?spdx\.org/licenses/(?P<id>[^/?#]+?)(\.html|\.json)?/?$", re.I)


def _license_token(value) -> str:
    if isinstance(value, dict):
        for key in ("@id", "url", "identifier", "id", "spdx_id", "name"):
            if value.get(key):
                return _license_token(value[key])
        raise TransformError(f"license object without identifier: {value!r}")
    text = str(value).strip()
    m = _SPDX_URL.match(text)
    return m.group("id") if m else text


def spdx_url_suffix(value, warn: Warn, arg=None):
    parts = [_license_token(v) for v in _as_list(value)]
    if not parts:
        raise TransformError("empty license")
    if len(parts) == 1:
        expr = parts[0]
    else:
        expr = " OR ".join(p if " " not in p else f"({p})" for p in parts)
    try:
        return normalize_spdx(expr)
    except ValueError as exc:
        raise TransformError(str(exc)) from None


# long-form names seen in pom.xml <license><name> (aliases from the SPDX list)
LICENSE_NAMES = {
    "apache license, version 2.0": "Apache-2.0",
    "apache license version 2.0": "Apache-2.0",
    "apache 2.0": "Apache-2.0",
    "apache-2.0": "Apache-2.0",
    "apache 2": "Apache-2.0",
    "the apache software license, version 2.0": "Apache-2.0",
    "the apache license, version 2.0": "Apache-2.0",
    "mit license": "MIT",
    "the mit license": "MIT",
    "mit": "MIT",
    "bsd 2-clause license": "BSD-2-Clause",
    "bsd 2-clause \"simplified\" license": "BSD-2-Clause",
    "bsd 3-clause license": "BSD-3-Clause",
    "bsd 3-clause \"new\" or \"revised\" license": "BSD-3-Clause",
    "new bsd license": "BSD-3-Clause",
    "revised bsd license": "BSD-3-Clause",
    "gnu general public license v3.0": "GPL-3.0-only",
    "gnu general public license, version 3": "GPL-3.0-only",
    "gnu general public license v3.0 or later": "GPL-3.0-or-later",
    "gnu general public license v2.0": "GPL-2.0-only",
    "gnu general public license, version 2": "GPL-2.0-only",
    "gnu lesser general public license v3.0": "LGPL-3.0-only",
    "gnu lesser general public license v2.1": "LGPL-2.1-only",
    "gnu affero general public license v3.0": "AGPL-3.0-only",
    "mozilla public license 2.0": "MPL-2.0",
    "mozilla public license, version 2.0": "MPL-2.0",
    "eclipse public license 2.0": "EPL-2.0",
    "eclipse public license - v 2.0": "EPL-2.0",
    "eclipse public license 1.0": "EPL-1.0",
    "eclipse public license - v 1.0": "EPL-1.0",
    "isc license": "ISC",
    "the unlicense": "Unlicense",
    "cc0 1.0 universal": "CC0-1.0",
    "boost software license 1.0": "BSL-1.0",
}


def license_name_lookup(value, warn: Warn, arg=None):
    ids = []
    for name in _as_list(value):
        key = re.sub(r"\s+", " ", str(name).strip().lower())
        if key in LICENSE_NAMES:
            ids.append(LICENSE_NAMES[key])
            continue
        try:
            ids.append(spdx_url_suffix(name, warn))
        except TransformError:
            raise TransformError(f"no SPDX mapping for license name {name!r}") from None
    return spdx_url_suffix(ids, warn)


# GitHub/GitLab license keys (lower-case slugs)
PLATFORM_LICENSE_SLUGS = {
    "0bsd": "0BSD",
    "afl-3.0": "AFL-3.0",
    "agpl-3.0": "AGPL-3.0-only",
    "apache-2.0": "Apache-2.0",
    "artistic-2.0": "Artistic-2.0",
    "bsd-2-clause": "BSD-2-Clause",
    "bsd-3-clause": "BSD-3-Clause",
    "bsd-3-clause-clear": "BSD-3-Clause-Clear",
    "bsl-1.0": "BSL-1.0",
    "cc-by-4.0": "CC-BY-4.0",
    "cc-by-sa-4.0": "CC-BY-SA-4.0",
    "cc0-1.0": "CC0-1.0",
    "ecl-2.0": "ECL-2.0",
    "epl-1.0": "EPL-1.0",
    "epl-2.0": "EPL-2.0",
    "eupl-1.1": "EUPL-1.1",
    "eupl-1.2": "EUPL-1.2",
    "gpl-2.0": "GPL-2.0-only",
    "gpl-3.0": "GPL-3.0-only",
    "isc": "ISC",
    "lgpl-2.1": "LGPL-2.1-only",
    "lgpl-3.0": "LGPL-3.0-only",
    "lppl-1.3c": "LPPL-1.3c",
    "mit": "MIT",
    "mit-0": "MIT-0",
    "mpl-2.0": "MPL-2.0",
    "ms-pl": "MS-PL",
    "ms-rl": "MS-RL",
    "ncsa": "NCSA",
    "odbl-1.0": "ODbL-1.0",
    "ofl-1.1": "OFL-1.1",
    "osl-3.0": "OSL-3.0",
    "postgresql": "PostgreSQL",
    "unlicense": "Unlicense",
    "upl-1.0": "UPL-1.0",
    "vim": "Vim",
    "wtfpl": "WTFPL",
    "zlib": "Zlib",
}


def platform_license_slug(value, warn: Warn, arg=None):
    slug = str(value).strip().lower()
    if slug not in PLATFORM_LICENSE_SLUGS:
        raise TransformError(f"unknown platform license key {value!r}")
    return PLATFORM_LICENSE_SLUGS[slug]


# --------------------------------------------------------------------------- #
# dates and kinds

def date_normalize(value, warn: Warn, arg=None):
    text = str(value).strip()
    m = re.match(r"^(\d{4})[-/](\d{1,2})[-/](\d{1,2})(?:[T ].*)?$", text)
    if not m:
        raise TransformError(f"unparseable date {value!r}")
    try:
        return _dt.date(*(int(g) for g in m.groups())).isoformat()
    except ValueError as exc:
        raise TransformError(f"invalid date {value!r}: {exc}") from None


_KINDS = {
    "software": ArtifactKind.SOFTWARE,
    "softwaresourcecode": ArtifactKind.SOFTWARE,
    "softwareapplication": ArtifactKind.SOFTWARE,
    "dataset": ArtifactKind.DATASET,
}


def artifact_kind(value, warn: Warn, arg=None):
    token = str(value).strip()
    token = token.rsplit("/", 1)[-1].rsplit(":", 1)[-1].lower()
    return _KINDS.get(token, ArtifactKind.OTHER).value


# --------------------------------------------------------------------------- #
# text lists

def text_list(value, warn: Warn, arg=None):
    out = []
    for item in _as_list(value):
        if isinstance(item, dict):
            item = item.get("name") or item.get("identifier") or item.get("id")
            if item is None:
                continue
        if isinstance(item, (list, dict)):
            raise TransformError(f"nested value in text list: {item!r}")
        parts = str(item).split(",") if arg == "split" else [str(item)]
        for p in parts:
            p = p.strip()
            if p and p not in out:
                out.append(p)
    return tuple(out)


# --------------------------------------------------------------------------- #
# people

_GIVEN = ("given-names", "givenName", "given_names", "given", "first_name")
_FAMILY = ("family-names", "familyName", "family_names", "family", "last_name")
_ANGLE = re.compile(r"^(?P<name>[^<(]*?)\s*(?:<(?P<email>[^>]+)>)?\s*(?:\((?P<url>[^)]+)\))?\s*$")


def _first(d: dict, keys) -> str | None:
    for k in keys:
        v = d.get(k)
        if v:
            return str(v).strip()
    return None


def _affiliation(value) -> str | None:
    if isinstance(value, list):
        names = [_affiliation(v) for v in value]
        return "; ".join(n for n in names if n) or None
    if isinstance(value, dict):
        return value.get("name") or value.get("legalName")
    return str(value).strip() if value else None


def _orcid(d: dict, warn: Warn) -> str | None:
    candidates = [d.get("orcid")]
    for key in ("@id", "identifier"):
        v = d.get(key)
        if isinstance(v, str) and "orcid.org" in v:
            candidates.append(v)
    for c in candidates:
        if not c:
            continue
        try:
            return normalize_orcid(str(c))
        except ValueError:
            warn(f"dropped invalid ORCID {c!r}")
    return None


def _split_comma(name: str) -> tuple[str | None, str | None, str | None]:
    """``Family, Given`` -> (given, family, None); anything else stays a full name."""
    if name.count(",") == 1:
        family, given = (p.strip() for p in name.split(","))
        if family and given:
            return given, family, None
    return None, None, name


def _person(item, warn: Warn, split: bool) -> Agent | None:
    if isinstance(item, str):
        m = _ANGLE.match(item.strip())
        name = (m.group("name") if m else item).strip()
        email = m.group("email") if m else None
        if not name:
            return None
        given, family, full = _split_comma(name) if split else (None, None, name)
        return Agent(given_names=given, family_names=family, full_name=full, email=email)
    if not isinstance(item, dict):
        raise TransformError(f"cannot read a person from {item!r}")
    given = _first(item, _GIVEN)
    family = _first(item, _FAMILY)
    particle = item.get("name-particle")
    if family and particle:
        family = f"{particle} {family}"
    full = _first(item, ("name", "legalName"))
    if full and split and not (given or family):
        given, family, full = _split_comma(full)
    if not (given or family or full):
        warn(f"skipped person without a name: {item!r}")
        return None
    email = item.get("email")
    return Agent(
        given_names=given,
        family_names=family,
        full_name=full,
        orcid=_orcid(item, warn),
        email=str(email).strip() if email else None,
        affiliation=_affiliation(item.get("affiliation") or item.get("organization")),
    )


def person(value, warn: Warn, arg=None):
    return tuple(a for a in (_person(v, warn, split=False) for v in _as_list(value)) if a)


def person_name_split(value, warn: Warn, arg=None):
    return tuple(a for a in (_person(v, warn, split=True) for v in _as_list(value)) if a)


# --------------------------------------------------------------------------- #
# identifiers

_CFF_TYPES = {"doi": IdentifierScheme.DOI, "url": IdentifierScheme.URL,
              "swh": IdentifierScheme.SWHID, "other": IdentifierScheme.OTHER}
_RELATIONS = {
    "ispartof": Relation.IS_PART_OF,
    "haspart": None,
    "cites": Relation.CITES,
    "references": Relation.CITES,
    "isversionof": Relation.IS_VERSION_OF,
    "isnewversionof": Relation.IS_VERSION_OF,
    "ispreviousversionof": Relation.IS_VERSION_OF,
    "isidenticalto": Relation.SELF,
    "is_part_of": Relation.IS_PART_OF,
    "is_version_of": Relation.IS_VERSION_OF,
    "self": Relation.SELF,
}


def _identifier(item, relation: Relation, warn: Warn) -> Identifier | None:
    if isinstance(item, str):
        return classify_identifier(item, relation)
    if not isinstance(item, dict):
        raise TransformError(f"cannot read an identifier from {item!r}")
    if "relation" in item:
        rel = _RELATIONS.get(str(item["relation"]).replace(" ", "").lower(), None)
        if rel is None:
            warn(f"skipped identifier with unsupported relation {item['relation']!r}")
            return None
        relation = rel
    # schema.org PropertyValue: scheme travels in propertyID
    if item.get("@type") == "PropertyValue" and item.get("value"):
        try:
            scheme = IdentifierScheme(str(item.get("propertyID", "other")).lower())
        except ValueError:
            scheme = IdentifierScheme.OTHER
        return Identifier(scheme, str(item["value"]), relation)
    # CFF identifiers: {type, value}
    if "type" in item and "value" in item and str(item["type"]).lower() in _CFF_TYPES:
        return Identifier(_CFF_TYPES[str(item["type"]).lower()], str(item["value"]), relation)
    # Zenodo related_identifiers: {identifier, scheme}
    if "identifier" in item and isinstance(item["identifier"], str):
        scheme = str(item.get("scheme", "")).lower()
        if scheme in ("doi", "url", "swhid"):
            return Identifier(scheme, item["identifier"], relation)
        return classify_identifier(item["identifier"], relation)
    # CFF reference objects / CreativeWork
    for key in ("doi", "@id", "url"):
        if item.get(key):
            return classify_identifier(str(item[key]), relation)
    warn(f"skipped identifier object without a usable value: {item!r}")
    return None


def identifier_list(value, warn: Warn, arg=None):
    relation = Relation(arg) if arg else Relation.SELF
    out = []
    for item in _as_list(value):
        try:
            ident = _identifier(item, relation, warn)
        except ValueError as exc:
            warn(f"skipped identifier: {exc}")
            continue
        if ident is not None and ident not in out:
            out.append(ident)
    return tuple(out)


def dependency_list(value, warn: Warn, arg=None):
    out = []
    for item in _as_list(value):
        text = item.get("name") if isinstance(item, dict) else item
        if text:
            ident = Identifier(IdentifierScheme.OTHER, str(text).strip(), Relation.CITES)
            if ident not in out:
                out.append(ident)
    return tuple(out)


TRANSFORMS: dict[str, Callable[..., Any]] = {
    "identity": identity,
    "spdx-url-suffix": spdx_url_suffix,
    "person-name-split": person_name_split,
    "date-normalize": date_normalize,
    "platform-license-slug": platform_license_slug,
    "person": person,
    "license-name-lookup": license_name_lookup,
    "version-tag": version_tag,
    "text-list": text_list,
    "identifier-list": identifier_list,
    "dependency-list": dependency_list,
    "artifact-kind": artifact_kind,
}


def get_transform(spec: str):
    name, _, arg = spec.partition(":")
    if name not in TRANSFORMS:
        raise KeyError(f"unknown transform {name!r}")
    if name == "identifier-list" and arg:
        Relation(arg)
    fn = TRANSFORMS[name]
    return lambda value, warn: fn(value, warn, arg or None)
