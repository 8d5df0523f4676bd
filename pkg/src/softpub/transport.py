"""HTTP transport handles shared by the platform harvester and the deposit clients.

Anything with ``request(method, url, **kwargs)`` returning an object with
``status_code``, ``text`` and ``json()`` works; :class:`HttpTransport` wraps
:mod:`requests`, :class:`FixtureTransport` replays recorded responses.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from urllib.parse import urlsplit

import requests

log = logging.getLogger(__name__)


class TransportError(Exception):
    """The remote end could not be reached at all."""


class HttpTransport:
    def __init__(self, headers: dict[str, str] | None = None, timeout: float = 30.0):
        self.session = requests.Session()
        self.session.headers.update(headers or {})
        self.timeout = timeout

    def request(self, method, url, **kwargs):
        kwargs.setdefault("timeout", self.timeout)
        try:
            return self.session.request(method, url, **kwargs)
        except requests.ConnectionError as exc:
            raise TransportError(f"{method} {url}: {exc}") from exc
        except requests.Timeout as exc:
            raise TransportError(f"{method} {url}: timed out") from exc


class RecordedResponse:
    def __init__(self, status_code: int, body, url: str):
        self.status_code = status_code
        self._body = body
        self.url = url
        self.headers = {"Content-Type": "application/json"}

    @property
    def ok(self) -> bool:
        return self.status_code < 400

    @property
    def text(self) -> str:
        return self._body if isinstance(self._body, str) else json.dumps(self._body)

    def json(self):
        return json.loads(self.text)


def fixture_name(url: str) -> str:
    path = urlsplit(url).path.strip("/")
    return path.replace("/", "__") + ".json"


class FixtureTransport:
    """Serves ``GET`` requests from ``<dir>/<url-path-with-__>.json`` files.

    A fixture file is either the raw response body or
    ``{"status": <int>, "body": <any>}``. Missing files answer 404.
    """

    def __init__(self, directory):
        self.directory = Path(directory)
        self.requests: list[tuple[str, str]] = []

    def request(self, method, url, **kwargs):
        self.requests.append((method, url))
        path = self.directory / fixture_name(url)
        if not path.is_file():
            return RecordedResponse(404, {"message": "Not Found"}, url)
        doc = json.loads(path.read_text(encoding="utf-8"))
        if isinstance(doc, dict) and set(doc) <= {"status", "body"} and "status" in doc:
            return RecordedResponse(int(doc["status"]), doc.get("body"), url)
        return RecordedResponse(200, doc, url)
