"""Thin REST clients for the two target kinds.

Both expose the same small surface so the deposit state machine does not
care which platform it is talking to.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

from ..model import TargetConfig, TargetKind
from ..transport import TransportError

log = logging.getLogger(__name__)


class DepositError(Exception):
    """A deposit step failed; ``step`` names it."""

    def __init__(self, message: str, step: str | None = None):
        self.step = step
        super().__init__(f"{step}: {message}" if step else message)


class CredentialError(DepositError):
    pass


class AuthenticationError(DepositError):
    pass


class TargetValidationError(DepositError):
    """The target rejected the payload; ``body`` is its response, verbatim."""

    def __init__(self, body: str, step: str):
        self.body = body
        super().__init__(f"target rejected the request: {body}", step)


class ChecksumMismatch(DepositError):
    pass


@dataclass(frozen=True)
class Draft:
    record_id: str
    concept_id: str | None
    version_index: int | None = None


@dataclass(frozen=True)
class Published:
    record_id: str
    concept_id: str | None
    pid: str
    version_index: int
    landing_url: str


class _Client:
    def __init__(self, target: TargetConfig, transport, token: str):
        self.target = target
        self.transport = transport
        self.token = token
        self.base = target.base_url.rstrip("/")

    def _headers(self) -> dict[str, str]:
        raise NotImplementedError

    def call(self, step: str, method: str, path: str, ok=(200, 201, 202), allow=(), **kw):
        headers = {**self._headers(), **kw.pop("headers", {})}
        try:
            resp = self.transport.request(method, self.base + path, headers=headers, **kw)
        except TransportError as exc:
            raise DepositError(str(exc), step) from exc
        status = resp.status_code
        if status in (401, 403):
            raise AuthenticationError(f"{self.target.name} refused the credentials ({status})", step)
        if status in (400, 422):
            raise TargetValidationError(resp.text, step)
        if status not in ok and status not in allow:
            raise DepositError(f"{method} {path} answered {status}: {resp.text[:300]}", step)
        return status, (resp.json() if resp.text else {})


class InvenioClient(_Client):
    def _headers(self):
        return {"Authorization": f"Bearer {self.token}"}

    def check_auth(self):
        self.call("auth", "GET", "/api/me")

    @staticmethod
    def _draft(doc) -> Draft:
        return Draft(str(doc["id"]), str(doc["parent"]["id"]), doc.get("version_index"))

    def _published(self, doc) -> Published:
        return Published(str(doc["id"]), str(doc["parent"]["id"]), doc["pids"]["doi"]["identifier"],
                         int(doc["version_index"]), doc["links"]["self_html"])

    def create(self, document) -> Draft:
        _, doc = self.call("create", "POST", "/api/records", json={"metadata": document})
        return self._draft(doc)

    def new_version(self, prior_record_id, document) -> Draft:
        _, doc = self.call("create", "POST", f"/api/records/{prior_record_id}/versions")
        return self._draft(doc)

    def state(self, record_id) -> str | None:
        status, _ = self.call("resume", "GET", f"/api/records/{record_id}/draft", allow=(404,))
        if status == 200:
            return "draft"
        status, _ = self.call("resume", "GET", f"/api/records/{record_id}", allow=(404,))
        return "published" if status == 200 else None

    def update(self, record_id, document):
        self.call("update", "PUT", f"/api/records/{record_id}/draft", json={"metadata": document})

    def upload(self, record_id, key, data: bytes) -> str:
        _, doc = self.call("upload", "PUT", f"/api/records/{record_id}/draft/files/{key}", data=data,
                           headers={"Content-Type": "application/octet-stream"})
        return str(doc.get("checksum", "")).removeprefix("sha256:")

    def draft_files(self, record_id) -> dict[str, str]:
        _, doc = self.call("publish", "GET", f"/api/records/{record_id}/draft")
        return {e["key"]: e["checksum"].removeprefix("sha256:") for e in doc["files"]["entries"]}

    def publish(self, record_id) -> Published:
        status, doc = self.call("publish", "POST", f"/api/records/{record_id}/draft/actions/publish",
                                allow=(409,))
        if status == 409:
            log.info("record %s already published as %s", record_id, doc.get("pid"))
            return self.fetch(record_id)
        return self._published(doc)

    def fetch(self, record_id) -> Published:
        _, doc = self.call("fetch", "GET", f"/api/records/{record_id}")
        return self._published(doc)


class DataverseClient(_Client):
    def _headers(self):
        return {"X-Dataverse-key": self.token}

    @property
    def collection(self) -> str:
        return self.target.community_or_collection or "root"

    def check_auth(self):
        self.call("auth", "GET", "/api/users/:me")

    def create(self, document) -> Draft:
        _, doc = self.call("create", "POST", f"/api/dataverses/{self.collection}/datasets",
                           json={"datasetVersion": document})
        data = doc["data"]
        return Draft(str(data["id"]), str(data.get("concept") or data["id"]), 1)

    def new_version(self, prior_record_id, document) -> Draft:
        # editing a released dataset opens its next draft version
        _, doc = self.call("create", "PUT", f"/api/datasets/{prior_record_id}/versions/:draft", json=document)
        data = doc["data"]
        return Draft(str(prior_record_id), str(data.get("concept") or prior_record_id), data.get("versionNumber"))

    def state(self, record_id) -> str | None:
        status, _ = self.call("resume", "GET", f"/api/datasets/{record_id}/versions/:draft", allow=(404,))
        if status == 200:
            return "draft"
        status, _ = self.call("resume", "GET", f"/api/datasets/{record_id}", allow=(404,))
        return "published" if status == 200 else None

    def update(self, record_id, document):
        self.call("update", "PUT", f"/api/datasets/{record_id}/versions/:draft", json=document)

    def upload(self, record_id, key, data: bytes) -> str:
        _, doc = self.call("upload", "POST", f"/api/datasets/{record_id}/add",
                           files={"file": (key, data, "application/octet-stream")})
        entry = doc["data"]["files"][0]["dataFile"]
        return str(entry["checksum"]["value"])

    def draft_files(self, record_id) -> dict[str, str]:
        _, doc = self.call("publish", "GET", f"/api/datasets/{record_id}/versions/:draft")
        return {f["dataFile"]["filename"]: f["dataFile"]["checksum"]["value"] for f in doc["data"]["files"]}

    def _published(self, record_id, data: dict[str, Any]) -> Published:
        pid = str(data["persistentId"]).removeprefix("doi:")
        return Published(str(record_id), str(data.get("concept") or record_id), pid,
                         int(data["versionNumber"]),
                         f"{self.base}/dataset.xhtml?persistentId=doi:{pid}")

    def publish(self, record_id) -> Published:
        status, doc = self.call("publish", "POST", f"/api/datasets/{record_id}/actions/:publish?type=major",
                                allow=(409,))
        if status == 409:
            log.info("dataset %s has no pending draft; reading its latest version", record_id)
            return self.fetch(record_id)
        return self._published(record_id, doc["data"])

    def fetch(self, record_id) -> Published:
        _, doc = self.call("fetch", "GET", f"/api/datasets/{record_id}")
        latest = doc["data"]["latestVersion"]
        return self._published(record_id, {"persistentId": latest["datasetPersistentId"],
                                           "versionNumber": latest["versionNumber"],
                                           "concept": latest.get("concept")})


def client_for(target: TargetConfig, transport, token: str) -> _Client:
    cls = InvenioClient if target.kind is TargetKind.INVENIO_RDM else DataverseClient
    return cls(target, transport, token)
