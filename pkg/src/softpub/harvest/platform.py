"""Development-platform API harvesting (GitHub-style repository endpoint)."""

from __future__ import annotations

from ..model import Confidence, SourceKind
from .base import HarvestError, build_result


class PlatformError(HarvestError):
    def __init__(self, message, status=None):
        self.status = status
        super().__init__(message)


class PlatformNotFound(PlatformError):
    pass


class PlatformAuthError(PlatformError):
    pass


def repository_endpoint(api_url: str, repository: str) -> str:
    return f"{api_url.rstrip('/')}/repos/{repository}"


def harvest_platform(repository: str, transport, api_url: str = "https://api.github.com"):
    url = repository_endpoint(api_url, repository)
    resp = transport.request("GET", url, headers={"Accept": "application/vnd.github+json"})
    if resp.status_code == 404:
        raise PlatformNotFound(f"repository {repository!r} not found on platform", 404)
    if resp.status_code in (401, 403):
        raise PlatformAuthError(f"platform refused access to {repository!r} ({resp.status_code})",
                                resp.status_code)
    if resp.status_code >= 400:
        raise PlatformError(f"platform error {resp.status_code} for {repository!r}: {resp.text[:200]}",
                            resp.status_code)
    doc = resp.json()
    lic = doc.get("license") or {}
    items = [
        ("description", doc.get("description")),
        ("topics", doc.get("topics")),
        ("license.key", lic.get("key") if isinstance(lic, dict) else None),
        ("clone_url", doc.get("clone_url") or doc.get("html_url")),
    ]
    return build_result(SourceKind.PLATFORM_API, url, items, Confidence.MAPPED)
