"""Git history harvesting (contributors, release tag, last commit date)."""

from __future__ import annotations

import re
import subprocess
from pathlib import Path

from ..model import Agent, Confidence, SourceKind
from ..process.identity import dedupe_agents
from .base import HarvestError, build_result

TAG_RE = re.compile(r"^v?(\d+)\.(\d+)(?:\.(\d+))?$")


class VcsError(HarvestError):
    pass


def _git(root: Path, *args: str) -> str:
    proc = subprocess.run(["git", "-C", str(root), *args], capture_output=True, text=True)
    if proc.returncode != 0:
        raise VcsError(proc.stderr.strip() or f"git {args[0]} failed")
    return proc.stdout


def is_work_tree(path) -> bool:
    try:
        return _git(Path(path), "rev-parse", "--is-inside-work-tree").strip() == "true"
    except (VcsError, FileNotFoundError, NotADirectoryError):
        return False


def _latest_tag(root: Path) -> str | None:
    tags = [t for t in _git(root, "tag", "--merged", "HEAD").split() if TAG_RE.match(t)]
    if not tags:
        return None

    def key(tag):
        distance = int(_git(root, "rev-list", "--count", f"{tag}..HEAD").strip())
        version = tuple(int(g or 0) for g in TAG_RE.match(tag).groups())
        return (distance, tuple(-v for v in version))

    return min(tags, key=key)


def harvest_vcs(unit_root, root=None):
    unit_root = Path(unit_root)
    if not is_work_tree(unit_root):
        raise VcsError(f"{unit_root} is not inside a git work tree")
    try:
        log = _git(unit_root, "log", "--format=%an%x1f%ae%x1f%at", "--", ".")
    except VcsError as exc:
        raise VcsError(f"no commits in {unit_root}: {exc}") from exc
    lines = [l for l in log.splitlines() if l.strip()]
    if not lines:
        raise VcsError(f"no commits touching {unit_root}")

    first_seen: dict[tuple[str, str], int] = {}
    for line in lines:
        name, email, ts = line.split("\x1f")
        pair = (name, email)
        first_seen[pair] = min(int(ts), first_seen.get(pair, int(ts)))
    ordered = sorted(first_seen, key=lambda p: (first_seen[p], p[0], p[1]))
    agents = dedupe_agents([Agent(full_name=n, email=e or None) for n, e in ordered])
    contributors = [{"name": a.full_name, **({"email": a.email} if a.email else {})} for a in agents]

    warnings = []
    tag = _latest_tag(unit_root)
    if tag is None:
        warnings.append("no release tag matching v?X.Y[.Z] reachable from HEAD")
    last_date = _git(unit_root, "log", "-1", "--date=short", "--format=%ad", "--", ".").strip()

    return build_result(
        SourceKind.VCS, ".",
        [("contributors", contributors), ("tag", tag), ("last_commit_date", last_date)],
        Confidence.HEURISTIC, warnings,
        confidences={"tag": Confidence.MAPPED},
    )
