"""The four pipeline stages, handing files to each other through a work directory.

Layout of the work directory::

    harvest.json        harvest bundle (all HarvestResults per unit)
    record.json         merged record, conflicts and per-target lint per unit
    receipts.json       receipts and failures of the last deposit stage
    postprocess.json    writeback and export actions
    status.json         exit status and errors per stage
    state.json          receipts of every successful deposit (drives versioning)
    steps/              per-job deposit step logs
    export/<unit>/codemeta.json
    hermes-report.json  the run report
"""

from __future__ import annotations

import json
import logging
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .deposit import (CredentialError, DepositError, DepositReceipt, MappingError, ReceiptState,
                      elicit_requirements, plan_jobs, resolve_token, run_deposit)
from .harvest import HarvestError, harvest_unit, unit_root_of
from .model import SCHEMA_VERSION, CanonicalRecord, HarvestResult, PipelineConfig, dumps
from .postprocess import (REPORT_NAME, WritebackError, atomic_write, build_report, export_codemeta,
                          write_report, writeback)
from .process import MergeError, lint, process_results, resolve_profile
from .transport import HttpTransport

log = logging.getLogger(__name__)

OK, USER_ERROR, FAILURE = 0, 1, 2
STAGES = ("harvest", "process", "deposit", "postprocess")


class UserError(Exception):
    """Bad input from the user: exit status 1."""


@dataclass(frozen=True)
class Workspace:
    config: PipelineConfig
    work_dir: Path

    @classmethod
    def open(cls, config: PipelineConfig, work_dir=None) -> "Workspace":
        wd = Path(work_dir) if work_dir else Path(config.base_dir) / ".hermes"
        return cls(config, wd.resolve())

    @property
    def harvest_path(self):
        return self.work_dir / "harvest.json"

    @property
    def record_path(self):
        return self.work_dir / "record.json"

    @property
    def receipts_path(self):
        return self.work_dir / "receipts.json"

    @property
    def postprocess_path(self):
        return self.work_dir / "postprocess.json"

    @property
    def status_path(self):
        return self.work_dir / "status.json"

    @property
    def state(self) -> ReceiptState:
        return ReceiptState(self.work_dir / "state.json")

    @property
    def report_path(self):
        return self.work_dir / REPORT_NAME

    def step_log(self, unit: str, target: str) -> Path:
        return self.work_dir / "steps" / f"{unit}__{target}.json"

    def export_path(self, unit: str) -> Path:
        return self.work_dir / "export" / unit / "codemeta.json"

    def units(self, unit: str | None):
        if unit is None:
            return list(self.config.publish_units)
        return [self.config.unit(unit)]  # raises ConfigError for unknown names

    def rel(self, path) -> str:
        try:
            return Path(path).resolve().relative_to(Path(self.config.base_dir).resolve()).as_posix()
        except ValueError:
            return str(path)

    # file helpers

    def read(self, path: Path, what: str) -> dict:
        if not path.is_file():
            raise UserError(f"{what} not found at {path}; run the earlier stage first")
        return json.loads(path.read_text(encoding="utf-8"))

    def read_optional(self, path: Path) -> dict:
        return json.loads(path.read_text(encoding="utf-8")) if path.is_file() else {}

    def write(self, path: Path, doc: dict):
        atomic_write(path, dumps({"schema_version": SCHEMA_VERSION, **doc}))

    def set_status(self, stage: str, code: int, errors: list[str]):
        status = self.read_optional(self.status_path)
        status.pop("schema_version", None)
        # a stage invalidates the status of everything after it
        for later in STAGES[STAGES.index(stage):]:
            status.pop(later, None)
        status[stage] = {"exit_status": code, "errors": errors}
        self.write(self.status_path, status)


# --------------------------------------------------------------------------- #
# stages

def stage_harvest(ws: Workspace, unit: str | None = None, transport=None) -> int:
    units, errors, code = {}, [], OK
    for u in ws.units(unit):
        root = unit_root_of(ws.config, u)
        if not root.is_dir():
            raise UserError(f"unit {u.name}: root {root} is not a readable directory")
        try:
            results, problems = harvest_unit(root, ws.config, transport)
        except HarvestError as exc:
            errors.append(f"{u.name}: {exc}")
            code = FAILURE
            continue
        if not results:
            problems.append("no metadata sources found")
            log.warning("unit %s: no metadata sources found under %s", u.name, root)
        for p in problems:
            log.warning("unit %s: %s", u.name, p)
        units[u.name] = {"root": ws.rel(root), "results": [r.to_dict() for r in results],
                         "problems": problems}
    ws.write(ws.harvest_path, {"units": units})
    ws.set_status("harvest", code, errors)
    return code


def _profiles(ws: Workspace, transport, notes: list):
    targets = ws.config.targets
    if not targets:
        return {"default": resolve_profile(None)}
    out = {}
    for t in targets:
        out[t.name] = elicit_requirements(t, transport, notes)
    return out


def stage_process(ws: Workspace, unit: str | None = None, strict: bool = False,
                  offline: bool = False, transport=None) -> int:
    bundle = ws.read(ws.harvest_path, "harvest bundle")
    strict = strict or ws.config.strict
    notes: list[str] = []
    if offline:
        transport = None
    elif transport is None:
        transport = HttpTransport(timeout=10)
    profiles = _profiles(ws, transport, notes)
    wanted = {u.name for u in ws.units(unit)}

    units, errors, code = {}, [], OK
    for name, entry in sorted(bundle["units"].items()):
        if name not in wanted:
            continue
        results = [HarvestResult.from_dict(r) for r in entry["results"]]
        try:
            record, conflicts, warnings = process_results(results, ws.config.precedence)
        except MergeError as exc:
            errors.append(f"{name}: {exc}")
            code = FAILURE
            continue
        reports = {t: lint(record, p, conflicts, strict) for t, p in profiles.items()}
        if strict and not all(r.passed for r in reports.values()):
            errors.append(f"{name}: lint failed in strict mode")
            code = FAILURE
        units[name] = {
            "record": record.to_dict(),
            "conflicts": [c.to_dict() for c in conflicts],
            "warnings": warnings,
            "lint": {t: r.to_dict() for t, r in reports.items()},
        }
    ws.write(ws.record_path, {"units": units, "strict": strict, "notes": notes})
    ws.set_status("process", code, errors)
    return code


def _unit_files(ws: Workspace, unit) -> tuple[str, ...]:
    if not ws.config.deposit_files:
        return ()
    root = unit_root_of(ws.config, unit)
    found = set()
    for pattern in unit.paths:
        found.update(p for p in root.glob(pattern) if p.is_file())
    return tuple(str(p) for p in sorted(found))


def stage_deposit(ws: Workspace, unit: str | None = None, target: str | None = None,
                  force: bool = False, env=None, transport=None, max_workers: int = 4) -> int:
    processed = ws.read(ws.record_path, "processed record")
    units = processed["units"]
    if target is not None:
        ws.config.target(target)
    wanted = [u for u in ws.units(unit) if u.name in units]
    records = {u.name: CanonicalRecord.from_dict(units[u.name]["record"]) for u in wanted}
    files = {u.name: _unit_files(ws, u) for u in wanted}
    state = ws.state
    jobs = [j for j in plan_jobs(ws.config, records, state, files, target=target)
            if j.unit in records]

    # all gates run before the first request leaves the machine
    errors = []
    if not force:
        for job in jobs:
            report = units[job.unit]["lint"].get(job.target.name)
            if report is not None and not report["passed"]:
                errors.append(f"{job.unit} -> {job.target.name}: record failed lint "
                              f"against {report['profile']}; use --force to deposit anyway")
    try:
        for job in jobs:
            resolve_token(job.target, env)
    except CredentialError as exc:
        raise UserError(str(exc)) from exc
    if errors:
        ws.write(ws.receipts_path, {"receipts": [], "errors": errors})
        ws.set_status("deposit", FAILURE, errors)
        return FAILURE

    transport = transport or HttpTransport()

    def run(job):
        try:
            receipt = run_deposit(job, transport, env=env, step_log=ws.step_log(job.unit, job.target.name))
        except (DepositError, MappingError, OSError) as exc:
            return None, f"{job.unit} -> {job.target.name}: {exc}"
        state.update(receipt)
        return receipt, None

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        outcomes = list(pool.map(run, jobs))
    receipts = [r for r, _ in outcomes if r]
    errors = [e for _, e in outcomes if e]
    ws.write(ws.receipts_path, {"receipts": [r.to_dict() for r in receipts], "errors": errors})
    code = FAILURE if errors else OK
    ws.set_status("deposit", code, errors)
    return code


def stage_postprocess(ws: Workspace, unit: str | None = None) -> int:
    processed = ws.read(ws.record_path, "processed record")
    receipts = [DepositReceipt.from_dict(r)
                for r in ws.read_optional(ws.receipts_path).get("receipts", [])]
    units, errors, code = {}, [], OK
    for u in ws.units(unit):
        if u.name not in processed["units"]:
            continue
        record = CanonicalRecord.from_dict(processed["units"][u.name]["record"])
        entry = {"export": ws.rel(export_codemeta(record, ws.export_path(u.name))),
                 "writeback": [], "notes": []}
        mine = [r for r in receipts if r.unit == u.name]
        if ws.config.writeback and mine:
            try:
                changed = writeback(mine, unit_root_of(ws.config, u), record,
                                    ws.config.writeback_target, entry["notes"])
                entry["writeback"] = [ws.rel(p) for p in changed]
            except (WritebackError, OSError) as exc:
                errors.append(f"{u.name}: {exc}")
                code = FAILURE
        units[u.name] = entry
    ws.write(ws.postprocess_path, {"units": units})
    ws.set_status("postprocess", code, errors)
    return code


# --------------------------------------------------------------------------- #
# report

def assemble_report(ws: Workspace) -> dict:
    harvest = ws.read_optional(ws.harvest_path).get("units", {})
    processed = ws.read_optional(ws.record_path)
    deposits = ws.read_optional(ws.receipts_path)
    post = ws.read_optional(ws.postprocess_path).get("units", {})
    status = ws.read_optional(ws.status_path)
    status.pop("schema_version", None)

    units = []
    for u in ws.config.publish_units:
        h = harvest.get(u.name)
        p = processed.get("units", {}).get(u.name, {})
        if h is None and not p:
            continue
        units.append({
            "unit": u.name,
            "harvest": {
                "sources": [{"source_kind": r["source_kind"], "location": r["location"],
                             "fields": len(r["fields"]), "warnings": r["warnings"]}
                            for r in (h or {}).get("results", [])],
                "problems": (h or {}).get("problems", []),
            },
            "record": p.get("record", {}).get("values"),
            "conflicts": p.get("conflicts", []),
            "process_warnings": p.get("warnings", []),
            "lint": p.get("lint", {}),
            "receipts": [r for r in deposits.get("receipts", []) if r["unit"] == u.name],
            "writeback": post.get(u.name, {}).get("writeback", []),
            "export": post.get(u.name, {}).get("export"),
            "notes": post.get(u.name, {}).get("notes", []),
        })
    exit_status = max((s["exit_status"] for s in status.values()), default=OK)
    errors = [f"{stage}: {e}" for stage in STAGES for e in status.get(stage, {}).get("errors", [])]
    report = build_report(units, exit_status, errors)
    report["notes"] = processed.get("notes", [])
    report["stages"] = {s: status[s]["exit_status"] for s in STAGES if s in status}
    return report


def emit_report(ws: Workspace) -> Path:
    return write_report(assemble_report(ws), ws.report_path)


def run_pipeline(ws: Workspace, unit=None, target=None, strict=False, force=False, dry_run=False,
                 env=None, transport=None) -> int:
    """harvest -> process -> deposit -> postprocess; stops at the first failing stage."""
    code = stage_harvest(ws, unit)
    if code == OK:
        code = stage_process(ws, unit, strict=strict, offline=dry_run, transport=transport)
    if code == OK and not dry_run:
        code = stage_deposit(ws, unit, target, force=force, env=env, transport=transport)
        if code == OK:
            code = stage_postprocess(ws, unit)
    emit_report(ws)
    return code


def clean(ws: Workspace, keep_state: bool = True) -> list[Path]:
    """Delete work-directory contents; the receipt state survives unless asked."""
    removed = []
    if not ws.work_dir.is_dir():
        return removed
    for child in sorted(ws.work_dir.iterdir()):
        if keep_state and child.name in ("state.json", "state.json.lock"):
            continue
        if child.is_dir():
            shutil.rmtree(child)
        else:
            child.unlink()
        removed.append(child)
    return removed
