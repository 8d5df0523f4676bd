"""In-memory stand-in for InvenioRDM- and Dataverse-style deposit APIs.

The wire contract served here is the one :mod:`softpub.deposit` speaks.

InvenioRDM mode (``Authorization: Bearer <token>``)::

    GET  /api/me
    POST /api/records                               {"metadata": {...}}   -> new draft
    POST /api/records/<id>/versions                                       -> new-version draft
    GET  /api/records/<id>/draft
    PUT  /api/records/<id>/draft                    {"metadata": {...}}
    PUT  /api/records/<id>/draft/files/<key>        raw bytes
    POST /api/records/<id>/draft/actions/publish
    GET  /api/records/<id>
    GET  /api/requirements

Dataverse mode (``X-Dataverse-key: <token>``)::

    GET  /api/users/:me
    POST /api/dataverses/<alias>/datasets           {"datasetVersion": {...}}
    GET  /api/datasets/<id>/versions/:draft
    PUT  /api/datasets/<id>/versions/:draft         {...datasetVersion...}
    POST /api/datasets/<id>/add                     multipart, part "file"
    POST /api/datasets/<id>/actions/:publish
    GET  /api/datasets/<id>
    GET  /api/info/requirements

Both modes answer ``GET /_snapshot`` with the whole store. Faults are
injected with ``X-Sim-Fault: fail=<step>,drop=<step>,corrupt=upload,slow=<ms>``
where step is create|update|upload|publish|fetch. ``fail`` answers 500
before acting, ``drop`` acts and then answers 500, ``corrupt`` reports a wrong
checksum; each fires once per server. Minted DOIs look like
``10.5072/sim.<concept>.<version>``.
"""

from __future__ import annotations

import argparse
import email.parser
import email.policy
import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import unquote, urlsplit

DOI_PREFIX = "10.5072"
MODES = ("invenio", "dataverse")


class SimError(Exception):
    def __init__(self, status: int, body):
        self.status = status
        self.body = body
        super().__init__(f"{status}: {body}")


@dataclass
class SimVersion:
    record_id: str
    version_index: int
    metadata: dict
    files: dict = field(default_factory=dict)
    state: str = "draft"
    pid: str | None = None

    def to_dict(self):
        return {
            "record_id": self.record_id,
            "version_index": self.version_index,
            "state": self.state,
            "pid": self.pid,
            "metadata": self.metadata,
            "files": [{"key": k, **v} for k, v in sorted(self.files.items())],
        }


@dataclass
class SimRecord:
    record_id: str
    concept_id: str
    versions: list[SimVersion] = field(default_factory=list)

    @property
    def draft(self) -> SimVersion | None:
        return next((v for v in self.versions if v.state == "draft"), None)

    @property
    def latest_published(self) -> SimVersion | None:
        pub = [v for v in self.versions if v.state == "published"]
        return pub[-1] if pub else None

    def to_dict(self):
        return {"record_id": self.record_id, "concept_id": self.concept_id,
                "versions": [v.to_dict() for v in self.versions]}


def mint_pid(concept_id: str, version_index: int) -> str:
    return f"{DOI_PREFIX}/sim.{concept_id}.{version_index}"


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Simulator:
    """Transport-independent store and request dispatcher."""

    def __init__(self, mode: str = "invenio", *, base_url: str = "", requirements: dict | None = None,
                 tokens: set[str] | None = None, faults: tuple[str, ...] = ()):
        if mode not in MODES:
            raise ValueError(f"unknown simulator mode {mode!r}")
        self.mode = mode
        self.base_url = base_url
        self.requirements = requirements
        self.tokens = tokens
        self.faults = tuple(faults)
        self.records: dict[str, SimRecord] = {}
        self._version_ids: dict[str, tuple[str, int]] = {}  # version record id -> (concept, index)
        self._next_record = 1
        self._next_concept = 1
        self._consumed: set[tuple[str, str]] = set()
        self._lock = threading.RLock()

    # ------------------------------------------------------------------ store

    def snapshot(self) -> dict:
        with self._lock:
            recs = sorted(self.records.values(), key=lambda r: int(r.concept_id))
            return {"mode": self.mode, "records": [r.to_dict() for r in recs]}

    def _new_record(self, metadata: dict) -> tuple[SimRecord, SimVersion]:
        concept = str(self._next_concept)
        self._next_concept += 1
        rid = self._alloc_id()
        rec = SimRecord(rid, concept)
        ver = SimVersion(rid, 1, metadata)
        rec.versions.append(ver)
        self.records[concept] = rec
        self._version_ids[rid] = (concept, 1)
        return rec, ver

    def _alloc_id(self) -> str:
        rid = str(self._next_record)
        self._next_record += 1
        return rid

    def _lookup(self, rid: str) -> tuple[SimRecord, SimVersion]:
        if rid not in self._version_ids:
            raise SimError(404, {"status": 404, "message": f"record {rid} not found"})
        concept, index = self._version_ids[rid]
        rec = self.records[concept]
        if self.mode == "dataverse":
            return rec, rec.versions[-1]
        return rec, rec.versions[index - 1]

    def _new_version(self, rec: SimRecord, record_id: str | None = None) -> SimVersion:
        base = rec.latest_published
        index = len(rec.versions) + 1
        rid = record_id or self._alloc_id()
        ver = SimVersion(rid, index, dict(base.metadata) if base else {})
        rec.versions.append(ver)
        self._version_ids.setdefault(rid, (rec.concept_id, index))
        return ver

    def _publish(self, rec: SimRecord, ver: SimVersion):
        ver.state = "published"
        ver.pid = mint_pid(rec.concept_id, ver.version_index)

    # ----------------------------------------------------------------- faults

    def _faults(self, headers) -> dict[str, set[str]]:
        specs = list(self.faults)
        raw = headers.get("X-Sim-Fault") or headers.get("x-sim-fault")
        if raw:
            specs.extend(p.strip() for p in raw.split(","))
        out: dict[str, set[str]] = {}
        for spec in specs:
            kind, _, arg = spec.partition("=")
            out.setdefault(kind.strip(), set()).add(arg.strip())
        return out

    def _fires(self, faults, kind: str, step: str) -> bool:
        if step in faults.get(kind, ()) and (kind, step) not in self._consumed:
            self._consumed.add((kind, step))
            return True
        return False

    # --------------------------------------------------------------- dispatch

    def handle(self, method: str, path: str, headers, body: bytes):
        """Return ``(status, json_body)`` for one request."""
        path = urlsplit(path).path
        if method == "GET" and path == "/_snapshot":
            return 200, self.snapshot()
        faults = self._faults(headers)
        for ms in faults.get("slow", ()):
            time.sleep(int(ms or 0) / 1000)
        table = self._INVENIO if self.mode == "invenio" else self._DATAVERSE
        for m, rx, step, fn in table:
            match = re.fullmatch(rx, path)
            if m != method or not match:
                continue
            if fn is not Simulator.requirements_doc and not self._authorized(headers):
                return 401, {"status": 401, "message": "missing or invalid credentials"}
            with self._lock:
                if step and self._fires(faults, "fail", step):
                    return 500, {"status": 500, "message": f"injected failure at {step}"}
                try:
                    status, doc = fn(self, *[unquote(g) for g in match.groups()], body=body,
                                     headers=headers, corrupt=self._fires(faults, "corrupt", step or ""))
                except SimError as exc:
                    return exc.status, exc.body
                if step and self._fires(faults, "drop", step):
                    return 500, {"status": 500, "message": f"injected failure after {step}"}
                return status, doc
        return 404, {"status": 404, "message": f"no route for {method} {path}"}

    def _authorized(self, headers) -> bool:
        if self.mode == "invenio":
            auth = headers.get("Authorization") or ""
            token = auth[7:].strip() if auth.startswith("Bearer ") else ""
        else:
            token = (headers.get("X-Dataverse-key") or "").strip()
        if not token:
            return False
        return self.tokens is None or token in self.tokens

    # ---------------------------------------------------------------- invenio

    def _inv_doc(self, rec: SimRecord, ver: SimVersion) -> dict:
        doc = {
            "id": ver.record_id,
            "parent": {"id": rec.concept_id},
            "state": ver.state,
            "version_index": ver.version_index,
            "metadata": ver.metadata,
            "files": {"entries": [{"key": k, **v} for k, v in sorted(ver.files.items())]},
            "links": {"self_html": f"{self.base_url}/records/{ver.record_id}"},
        }
        if ver.pid:
            doc["pids"] = {"doi": {"identifier": ver.pid, "provider": "datacite"}}
        return doc

    def inv_me(self, **kw):
        return 200, {"id": "1", "username": "sim"}

    def inv_create(self, body, **kw):
        payload = json.loads(body or b"{}")
        rec, ver = self._new_record(payload.get("metadata", {}))
        return 201, self._inv_doc(rec, ver)

    def inv_new_version(self, rid, **kw):
        rec, ver = self._lookup(rid)
        if rec.latest_published is None:
            raise SimError(400, {"status": 400, "message": "record has no published version"})
        draft = rec.draft or self._new_version(rec)
        return 201, self._inv_doc(rec, draft)

    def _inv_draft(self, rid) -> tuple[SimRecord, SimVersion]:
        rec, ver = self._lookup(rid)
        if ver.state != "draft":
            raise SimError(409, {"status": 409, "message": f"version {rid} is published and immutable",
                                 "pid": ver.pid})
        return rec, ver

    def inv_get_draft(self, rid, **kw):
        rec, ver = self._lookup(rid)
        if ver.state != "draft":
            raise SimError(404, {"status": 404, "message": f"no draft for {rid}"})
        return 200, self._inv_doc(rec, ver)

    def inv_update(self, rid, body, **kw):
        rec, ver = self._inv_draft(rid)
        ver.metadata = json.loads(body or b"{}").get("metadata", {})
        return 200, self._inv_doc(rec, ver)

    def inv_upload(self, rid, key, body, corrupt=False, **kw):
        rec, ver = self._inv_draft(rid)
        digest = sha256_hex(body)
        ver.files[key] = {"checksum": f"sha256:{digest}", "size": len(body)}
        reported = f"sha256:{sha256_hex(body + b'corrupt')}" if corrupt else f"sha256:{digest}"
        return 201, {"key": key, "checksum": reported, "size": len(body)}

    def inv_publish(self, rid, **kw):
        rec, ver = self._lookup(rid)
        if ver.state == "published":
            raise SimError(409, {"status": 409, "message": "already published", "pid": ver.pid,
                                 "id": ver.record_id})
        missing = [k for k in ("title", "creators", "upload_type") if not ver.metadata.get(k)]
        if missing:
            raise SimError(400, {"status": 400, "message": "validation error",
                                 "errors": [{"field": f"metadata.{k}", "messages": ["Missing data for required field."]}
                                            for k in missing]})
        self._publish(rec, ver)
        return 202, self._inv_doc(rec, ver)

    def inv_fetch(self, rid, **kw):
        rec, ver = self._lookup(rid)
        if ver.state != "published":
            raise SimError(404, {"status": 404, "message": f"record {rid} is not published"})
        return 200, self._inv_doc(rec, ver)

    def requirements_doc(self, **kw):
        if self.requirements is None:
            raise SimError(404, {"status": 404, "message": "no requirements published"})
        return 200, self.requirements

    # -------------------------------------------------------------- dataverse

    def _dv_version_doc(self, rec: SimRecord, ver: SimVersion) -> dict:
        return {
            "id": ver.record_id,
            "datasetPersistentId": f"doi:{ver.pid}" if ver.pid else None,
            "versionNumber": ver.version_index,
            "versionState": "RELEASED" if ver.state == "published" else "DRAFT",
            "concept": rec.concept_id,
            **ver.metadata,
            "files": [{"dataFile": {"filename": k, "checksum": {"type": "SHA-256",
                                                                "value": v["checksum"].split(":", 1)[1]}}}
                      for k, v in sorted(ver.files.items())],
        }

    def dv_me(self, **kw):
        return 200, {"status": "OK", "data": {"identifier": "@sim"}}

    def dv_create(self, alias, body, **kw):
        payload = json.loads(body or b"{}")
        version = payload.get("datasetVersion", {})
        if not _dv_title(version):
            raise SimError(400, {"status": "ERROR", "message": "Validation Failed: Title is required."})
        rec, ver = self._new_record(version)
        return 201, {"status": "OK", "data": {"id": rec.record_id, "persistentId": None,
                                              "concept": rec.concept_id}}

    def dv_get_draft(self, rid, **kw):
        rec, ver = self._lookup(rid)
        if rec.draft is None:
            raise SimError(404, {"status": "ERROR", "message": "no draft version"})
        return 200, {"status": "OK", "data": self._dv_version_doc(rec, rec.draft)}

    def dv_update(self, rid, body, **kw):
        rec, _ = self._lookup(rid)
        version = json.loads(body or b"{}")
        if not _dv_title(version):
            raise SimError(400, {"status": "ERROR", "message": "Validation Failed: Title is required."})
        # editing a released dataset opens the next draft version
        draft = rec.draft or self._new_version(rec, record_id=rec.record_id)
        draft.metadata = version
        return 200, {"status": "OK", "data": self._dv_version_doc(rec, draft)}

    def dv_upload(self, rid, body, headers, corrupt=False, **kw):
        rec, _ = self._lookup(rid)
        draft = rec.draft
        if draft is None:
            raise SimError(409, {"status": "ERROR", "message": "dataset has no draft version"})
        name, data = _multipart_file(headers, body)
        digest = sha256_hex(data)
        draft.files[name] = {"checksum": f"sha256:{digest}", "size": len(data)}
        reported = sha256_hex(data + b"corrupt") if corrupt else digest
        return 200, {"status": "OK", "data": {"files": [
            {"dataFile": {"filename": name, "checksum": {"type": "SHA-256", "value": reported}}}]}}

    def dv_publish(self, rid, **kw):
        rec, _ = self._lookup(rid)
        draft = rec.draft
        if draft is None:
            latest = rec.latest_published
            raise SimError(409, {"status": "ERROR", "message": "no draft to publish",
                                 "persistentId": f"doi:{latest.pid}" if latest else None,
                                 "versionNumber": latest.version_index if latest else None})
        self._publish(rec, draft)
        return 200, {"status": "OK", "data": {"persistentId": f"doi:{draft.pid}",
                                              "versionNumber": draft.version_index,
                                              "concept": rec.concept_id,
                                              "persistentUrl": f"https://doi.org/{draft.pid}"}}

    def dv_fetch(self, rid, **kw):
        rec, _ = self._lookup(rid)
        latest = rec.latest_published
        if latest is None:
            raise SimError(404, {"status": "ERROR", "message": "dataset not published"})
        return 200, {"status": "OK", "data": {
            "id": rec.record_id,
            "persistentUrl": f"https://doi.org/{latest.pid}",
            "latestVersion": self._dv_version_doc(rec, latest),
        }}

    _INVENIO = [
        ("GET", r"/api/me", None, inv_me),
        ("GET", r"/api/requirements", None, requirements_doc),
        ("POST", r"/api/records", "create", inv_create),
        ("POST", r"/api/records/([^/]+)/versions", "create", inv_new_version),
        ("GET", r"/api/records/([^/]+)/draft", None, inv_get_draft),
        ("PUT", r"/api/records/([^/]+)/draft", "update", inv_update),
        ("PUT", r"/api/records/([^/]+)/draft/files/(.+)", "upload", inv_upload),
        ("POST", r"/api/records/([^/]+)/draft/actions/publish", "publish", inv_publish),
        ("GET", r"/api/records/([^/]+)", "fetch", inv_fetch),
    ]
    _DATAVERSE = [
        ("GET", r"/api/users/:me", None, dv_me),
        ("GET", r"/api/info/requirements", None, requirements_doc),
        ("POST", r"/api/dataverses/([^/]+)/datasets", "create", dv_create),
        ("GET", r"/api/datasets/([^/]+)/versions/:draft", None, dv_get_draft),
        ("PUT", r"/api/datasets/([^/]+)/versions/:draft", "update", dv_update),
        ("POST", r"/api/datasets/([^/]+)/add", "upload", dv_upload),
        ("POST", r"/api/datasets/([^/]+)/actions/:publish", "publish", dv_publish),
        ("GET", r"/api/datasets/([^/]+)", "fetch", dv_fetch),
    ]


def _dv_title(version: dict) -> str | None:
    fields = version.get("metadataBlocks", {}).get("citation", {}).get("fields", [])
    for f in fields:
        if f.get("typeName") == "title":
            return f.get("value")
    return None


def _multipart_file(headers, body: bytes) -> tuple[str, bytes]:
    ctype = headers.get("Content-Type", "")
    if not ctype.startswith("multipart/form-data"):
        raise SimError(400, {"status": "ERROR", "message": "expected multipart/form-data"})
    msg = email.parser.BytesParser(policy=email.policy.HTTP).parsebytes(
        f"Content-Type: {ctype}\r\n\r\n".encode() + body)
    for part in msg.iter_parts():
        if part.get_param("name", header="content-disposition") == "file":
            return part.get_filename() or "file", part.get_payload(decode=True) or b""
    raise SimError(400, {"status": "ERROR", "message": "no 'file' part in upload"})


# ---------------------------------------------------------------------- HTTP

class _Handler(BaseHTTPRequestHandler):
    sim: Simulator

    def _dispatch(self):
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        status, doc = self.server.sim.handle(self.command, self.path, self.headers, body)
        data = json.dumps(doc).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    do_GET = do_POST = do_PUT = do_DELETE = _dispatch

    def log_message(self, fmt, *args):
        pass


class SimulatorHandle:
    """A running simulator; use as a context manager or call :meth:`close`."""

    def __init__(self, server: ThreadingHTTPServer, sim: Simulator):
        self.server = server
        self.sim = sim
        host, port = server.server_address[:2]
        self.url = f"http://{host}:{port}"
        sim.base_url = self.url
        self._thread = threading.Thread(target=server.serve_forever, kwargs={"poll_interval": 0.05},
                                        daemon=True)
        self._thread.start()

    def snapshot(self) -> dict:
        return self.sim.snapshot()

    def close(self):
        self.server.shutdown()
        self.server.server_close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def serve(bind=("127.0.0.1", 0), mode: str = "invenio", **options) -> SimulatorHandle:
    sim = Simulator(mode, **options)
    server = ThreadingHTTPServer(tuple(bind), _Handler)
    server.daemon_threads = True
    server.sim = sim
    return SimulatorHandle(server, sim)


def snapshot(handle: SimulatorHandle) -> dict:
    return handle.snapshot()


def main(argv=None):
    parser = argparse.ArgumentParser(description="Serve a deposit-API simulator.")
    parser.add_argument("--mode", choices=MODES, default="invenio")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--requirements", help="JSON file served as the requirements document")
    args = parser.parse_args(argv)
    reqs = None
    if args.requirements:
        with open(args.requirements, encoding="utf-8") as fh:
            reqs = json.load(fh)
    handle = serve((args.host, args.port), args.mode, requirements=reqs)
    print(f"{args.mode} simulator listening on {handle.url}", flush=True)
    try:
        handle._thread.join()
    except KeyboardInterrupt:
        handle.close()


if __name__ == "__main__":
    main()
