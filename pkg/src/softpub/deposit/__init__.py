"""Deposit: map the record, drive draft -> upload -> publish, return the PID.

Every step of a job is recorded in a JSON step log, so a run that died half
way resumes where it stopped instead of creating a sibling record.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from filelock import FileLock

from ..model import (CanonicalRecord, Identifier, IdentifierScheme, PipelineConfig, TargetConfig,
                     TargetKind, canonical_json)
from ..process.lint import BUILTIN_PROFILES, RequirementProfile, resolve_profile
from ..transport import TransportError
from .clients import (AuthenticationError, ChecksumMismatch, CredentialError, DataverseClient,
                      DepositError, InvenioClient, TargetValidationError, client_for)
from .mapping import MappingError, Payload, covered_fields, map_to_dataverse, map_to_invenio

__all__ = [
    "DepositJob", "DepositReceipt", "StepLog", "ReceiptState", "run_deposit", "map_payload",
    "map_to_invenio", "map_to_dataverse", "elicit_requirements", "plan_jobs", "resolve_token",
    "DepositError", "CredentialError", "AuthenticationError", "TargetValidationError",
    "ChecksumMismatch", "MappingError", "Payload", "covered_fields",
    "InvenioClient", "DataverseClient",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DepositJob:
    unit: str
    target: TargetConfig
    record: CanonicalRecord
    files: tuple[str, ...] = ()
    prior_record_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "files", tuple(str(f) for f in self.files))
        keys = [Path(f).name for f in self.files]
        if len(set(keys)) != len(keys):
            raise ValueError(f"unit {self.unit}: two deposit files share a file name")


@dataclass(frozen=True)
class DepositReceipt:
    unit: str
    target: str
    target_kind: TargetKind
    record_id: str
    concept_id: str | None
    pid: Identifier | None
    version_index: int
    state: str  # draft | published
    landing_url: str
    unmapped: tuple[dict, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.state not in ("draft", "published"):
            raise ValueError(f"bad receipt state {self.state!r}")
        if self.state == "published" and (self.pid is None or self.pid.scheme is not IdentifierScheme.DOI):
            raise ValueError("a published receipt needs a DOI")
        if self.version_index < 1:
            raise ValueError("version_index must be positive")

    def to_dict(self):
        return {
            "unit": self.unit, "target": self.target, "target_kind": self.target_kind.value,
            "record_id": self.record_id, "concept_id": self.concept_id,
            "pid": self.pid.to_dict() if self.pid else None,
            "version_index": self.version_index, "state": self.state,
            "landing_url": self.landing_url, "unmapped": list(self.unmapped),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["unit"], d["target"], TargetKind(d["target_kind"]), d["record_id"],
                   d.get("concept_id"), Identifier.from_dict(d["pid"]) if d.get("pid") else None,
                   int(d["version_index"]), d["state"], d["landing_url"],
                   tuple(d.get("unmapped", ())))


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


class StepLog:
    """Per-job progress record; ``path=None`` keeps it in memory only."""

    def __init__(self, path=None, data: dict | None = None):
        self.path = Path(path) if path else None
        self.data = data or {}

    @classmethod
    def load(cls, path, job: DepositJob) -> "StepLog":
        fresh = {"unit": job.unit, "target": job.target.name, "prior_record_id": job.prior_record_id,
                 "files": {}}
        if path is None or not Path(path).is_file():
            return cls(path, fresh)
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if data.get("prior_record_id") != job.prior_record_id:
            # left over from a different deposit of this pair
            return cls(path, fresh)
        return cls(path, data)

    def get(self, key, default=None):
        return self.data.get(key, default)

    def set(self, **kw):
        self.data.update(kw)
        self.save()

    def reset(self):
        keep = {k: self.data.get(k) for k in ("unit", "target", "prior_record_id")}
        self.data = {**keep, "files": {}}
        self.save()

    def save(self):
        if self.path is not None:
            _atomic_write(self.path, json.dumps(self.data, indent=2, sort_keys=True) + "\n")


def resolve_token(target: TargetConfig, env: Mapping[str, str] | None = None) -> str:
    env = os.environ if env is None else env
    if not target.credentials_env:
        raise CredentialError(f"target {target.name} names no credentials_env", "auth")
    token = env.get(target.credentials_env)
    if not token:
        raise CredentialError(f"environment variable {target.credentials_env} is not set", "auth")
    return token


def map_payload(record: CanonicalRecord, target: TargetConfig) -> Payload:
    if target.kind is TargetKind.INVENIO_RDM:
        return map_to_invenio(record)
    profile = resolve_profile(target.requirement_profile, "dataverse-default")
    return map_to_dataverse(record, require_contact="contact_email" in profile.mandatory_fields)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def run_deposit(job: DepositJob, transport, *, env: Mapping[str, str] | None = None,
                step_log=None) -> DepositReceipt:
    """Run one job to a published record, resuming from ``step_log`` if given."""
    target = job.target
    token = resolve_token(target, env)
    client = client_for(target, transport, token)
    client.check_auth()  # fail fast, before anything is created

    payload = map_payload(job.record, target)
    document = payload.document
    doc_sha = _sha256(canonical_json(document).encode())
    steps = step_log if isinstance(step_log, StepLog) else StepLog.load(step_log, job)

    record_id = steps.get("record_id")
    if record_id and not steps.get("published"):
        state = client.state(record_id)
        if state == "published" and steps.get("publish_attempted"):
            steps.set(published=True)
        elif state != "draft":
            log.warning("%s/%s: draft %s is gone; starting over", job.unit, target.name, record_id)
            steps.reset()
            record_id = None

    if not steps.get("published"):
        if not record_id:
            draft = (client.new_version(job.prior_record_id, document) if job.prior_record_id
                     else client.create(document))
            record_id = draft.record_id
            steps.set(record_id=record_id, concept_id=draft.concept_id, files={}, metadata_sha=None)

        if steps.get("metadata_sha") != doc_sha:
            client.update(record_id, document)
            steps.set(metadata_sha=doc_sha)

        expected = {}
        for path in job.files:
            key = Path(path).name
            data = Path(path).read_bytes()
            digest = expected[key] = _sha256(data)
            if steps.get("files", {}).get(key) == digest:
                continue
            reported = client.upload(record_id, key, data)
            if reported != digest:
                raise ChecksumMismatch(f"{key}: local sha256 {digest}, target reported {reported}", "upload")
            steps.set(files={**steps.get("files", {}), key: digest})

        if expected:
            present = client.draft_files(record_id)
            missing = sorted(k for k, v in expected.items() if present.get(k) != v)
            if missing:
                steps.set(files={k: v for k, v in steps.get("files", {}).items() if k not in missing})
                raise DepositError(f"draft lacks {', '.join(missing)}; refusing to publish", "publish")

        steps.set(publish_attempted=True)
        published = client.publish(record_id)
        steps.set(published=True)
    published = client.fetch(record_id)
    steps.set(done=True, pid=published.pid, version_index=published.version_index)

    return DepositReceipt(
        unit=job.unit, target=target.name, target_kind=target.kind,
        record_id=published.record_id, concept_id=published.concept_id or steps.get("concept_id"),
        pid=Identifier(IdentifierScheme.DOI, published.pid), version_index=published.version_index,
        state="published", landing_url=published.landing_url, unmapped=payload.unmapped,
    )


class ReceiptState:
    """Receipts of earlier runs, keyed by (unit, target), in a locked JSON file."""

    def __init__(self, path):
        self.path = Path(path)
        self.lock = FileLock(str(self.path) + ".lock")

    def _read(self) -> dict:
        if not self.path.is_file():
            return {}
        return json.loads(self.path.read_text(encoding="utf-8"))

    def get(self, unit: str, target: str) -> DepositReceipt | None:
        with self.lock:
            entry = self._read().get(unit, {}).get(target)
        return DepositReceipt.from_dict(entry) if entry else None

    def prior_record_id(self, unit: str, target: str) -> str | None:
        r = self.get(unit, target)
        return r.record_id if r else None

    def update(self, receipt: DepositReceipt):
        with self.lock:
            doc = self._read()
            doc.setdefault(receipt.unit, {})[receipt.target] = receipt.to_dict()
            _atomic_write(self.path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def plan_jobs(config: PipelineConfig, records: Mapping[str, CanonicalRecord],
              state: ReceiptState | None = None, files: Mapping[str, list] | None = None,
              unit: str | None = None, target: str | None = None) -> list[DepositJob]:
    """One job per (unit, target) pair, with versioning from ``state``."""
    jobs = []
    for u, t in config.jobs():
        if (unit and u.name != unit) or (target and t.name != target):
            continue
        prior = state.prior_record_id(u.name, t.name) if state else None
        jobs.append(DepositJob(u.name, t, records[u.name], tuple((files or {}).get(u.name, ())), prior))
    return jobs


def requirements_url(target: TargetConfig) -> str:
    path = "/api/requirements" if target.kind is TargetKind.INVENIO_RDM else "/api/info/requirements"
    return target.base_url.rstrip("/") + path


def elicit_requirements(target: TargetConfig, transport=None, notes: list | None = None) -> RequirementProfile:
    """The profile to lint against before depositing to ``target``.

    A profile set in the config wins. Otherwise the target's requirements
    endpoint is asked, and the built-in profile for the target kind is the
    fallback when that fails (with a warning, also appended to ``notes``).
    """
    if target.requirement_profile is not None:
        return resolve_profile(target.requirement_profile)
    builtin = BUILTIN_PROFILES["invenio-default" if target.kind is TargetKind.INVENIO_RDM
                               else "dataverse-default"]
    if transport is None:
        return builtin
    url = requirements_url(target)
    try:
        resp = transport.request("GET", url)
        if resp.status_code == 200:
            return RequirementProfile.from_dict(resp.json(), name=f"{target.name}-requirements")
        reason = f"HTTP {resp.status_code}"
    except (TransportError, ValueError, KeyError) as exc:
        reason = str(exc)
    msg = f"target {target.name}: no requirements from {url} ({reason}); using {builtin.name}"
    log.warning(msg)
    if notes is not None:
        notes.append(msg)
    return builtin
