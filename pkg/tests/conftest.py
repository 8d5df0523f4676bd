from __future__ import annotations

import os
import shutil
import subprocess
from pathlib import Path

import pytest

from softpub import simulator

FIXTURES = Path(__file__).parent / "fixtures"

# (name, email, date, files touched); dates fixed so history is reproducible
HISTORY = [
    ("Jane Doe", "jane.doe@example.org", "2021-03-01T10:00:00+00:00", ["README.md", "LICENSE"]),
    ("Bob Builder", "bob@example.org", "2021-04-02T10:00:00+00:00", ["pyproject.toml", "src"]),
    ("Carol Commit", "carol@example.org", "2021-05-03T10:00:00+00:00", ["CITATION.cff"]),
    ("Jane Doe", "jane.doe@example.org", "2021-06-30T10:00:00+00:00", ["codemeta.json"]),
]


def git(repo: Path, *args: str, env: dict | None = None) -> str:
    full_env = {**os.environ, "GIT_CONFIG_GLOBAL": os.devnull, "GIT_CONFIG_NOSYSTEM": "1", **(env or {})}
    out = subprocess.run(["git", "-C", str(repo), *args], check=True, capture_output=True,
                         text=True, env=full_env)
    return out.stdout


def commit_as(repo: Path, name: str, email: str, date: str, message: str) -> None:
    env = {"GIT_AUTHOR_NAME": name, "GIT_AUTHOR_EMAIL": email, "GIT_AUTHOR_DATE": date,
           "GIT_COMMITTER_NAME": name, "GIT_COMMITTER_EMAIL": email, "GIT_COMMITTER_DATE": date}
    git(repo, "commit", "-q", "--no-gpg-sign", "-m", message, env=env)


def make_goodsoft(dest: Path, with_git: bool = True) -> Path:
    """Copy the GoodSoft fixture to ``dest`` and script its git history."""
    shutil.copytree(FIXTURES / "goodsoft", dest)
    if not with_git:
        return dest
    git(dest, "init", "-q", "-b", "main")
    for i, (name, email, date, paths) in enumerate(HISTORY):
        git(dest, "add", *paths)
        commit_as(dest, name, email, date, f"change {i}")
    git(dest, "tag", "v1.2.0")
    return dest


@pytest.fixture
def goodsoft(tmp_path) -> Path:
    return make_goodsoft(tmp_path / "goodsoft")


@pytest.fixture
def goodsoft_plain(tmp_path) -> Path:
    return make_goodsoft(tmp_path / "goodsoft", with_git=False)


@pytest.fixture
def invenio_sim():
    with simulator.serve(mode="invenio") as handle:
        yield handle


@pytest.fixture
def dataverse_sim():
    with simulator.serve(mode="dataverse") as handle:
        yield handle


def write_config(root: Path, targets: list[dict], units: list[dict] | None = None, **top) -> Path:
    """Write a hermes.toml into ``root``; returns its path."""
    import tomli_w

    doc = {"unit": units or [{"name": "goodsoft", "paths": ["dist/*"]}], "target": targets, **top}
    path = root / "hermes.toml"
    path.write_text(tomli_w.dumps(doc), encoding="utf-8")
    return path


def invenio_target(url: str, name: str = "sandbox", **extra) -> dict:
    return {"name": name, "kind": "invenio_rdm", "base_url": url, "credentials_env": "SIM_TOKEN", **extra}


def dataverse_target(url: str, name: str = "dv", **extra) -> dict:
    return {"name": name, "kind": "dataverse", "base_url": url, "credentials_env": "SIM_TOKEN", **extra}


@pytest.fixture(autouse=True)
def _sim_token(monkeypatch):
    monkeypatch.setenv("SIM_TOKEN", "secret-token")


# ---- acceptance summary --------------------------------------------------- #
# Tests marked ``@pytest.mark.acceptance(n, title)`` get one PASS/FAIL line each
# at the end of the run.

_ACCEPTANCE: dict[int, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    entry = _ACCEPTANCE.setdefault(number, [title, "PASS"])
    if report.failed:
        entry[1] = "FAIL"
    elif report.skipped and report.when == "setup":
        entry[1] = "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, verdict = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {title}")
