"""Command line entry point: ``softpub harvest|process|deposit|postprocess|run|clean``.

Exit status is 0 on success, 1 for user errors (bad config, unknown unit,
missing credentials or intermediate files) and 2 when a pipeline stage fails.
"""

from __future__ import annotations

import functools
import logging
import sys

import click

from . import pipeline
from .model import ConfigError, load_config
from .pipeline import FAILURE, OK, USER_ERROR, UserError, Workspace

log = logging.getLogger("softpub")


def _common(fn):
    @click.option("--config", "-c", "config_path", default="hermes.toml", show_default=True,
                  type=click.Path(dir_okay=False), help="Pipeline configuration file.")
    @click.option("--work-dir", type=click.Path(file_okay=False),
                  help="Where stages exchange files (default: .hermes next to the config).")
    @click.option("-v", "--verbose", count=True, help="More log output.")
    @functools.wraps(fn)
    def wrapper(config_path, work_dir, verbose, **kw):
        logging.basicConfig(level=logging.DEBUG if verbose > 1 else logging.INFO if verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        try:
            ws = Workspace.open(load_config(config_path), work_dir)
            code = fn(ws, **kw)
        except (ConfigError, UserError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(USER_ERROR)
        if code != OK:
            click.echo(f"failed (exit {code}); see {ws.report_path}", err=True)
        sys.exit(code)
    return wrapper


unit_opt = click.option("--unit", help="Only this publish unit.")
target_opt = click.option("--target", help="Only this deposit target.")
strict_opt = click.option("--strict", is_flag=True, help="Treat merge conflicts and lint errors as failures.")
force_opt = click.option("--force", is_flag=True, help="Deposit even if the record failed lint.")


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Harvest, merge, lint, deposit and write back software publication metadata."""


@main.command()
@_common
@unit_opt
def harvest(ws: Workspace, unit):
    """Collect metadata from every source in each unit."""
    code = pipeline.stage_harvest(ws, unit)
    pipeline.emit_report(ws)
    click.echo(f"harvest bundle: {ws.harvest_path}")
    return code


@main.command()
@_common
@unit_opt
@strict_opt
@click.option("--dry-run", is_flag=True, help="Lint with configured or built-in profiles only (no network).")
def process(ws: Workspace, unit, strict, dry_run):
    """Crosswalk, merge and lint the harvested metadata."""
    code = pipeline.stage_process(ws, unit, strict=strict, offline=dry_run)
    pipeline.emit_report(ws)
    click.echo(f"processed record: {ws.record_path}")
    return code


@main.command()
@_common
@unit_opt
@target_opt
@force_opt
def deposit(ws: Workspace, unit, target, force):
    """Publish each unit's record to each target."""
    code = pipeline.stage_deposit(ws, unit, target, force=force)
    pipeline.emit_report(ws)
    click.echo(f"receipts: {ws.receipts_path}")
    return code


@main.command()
@_common
@unit_opt
def postprocess(ws: Workspace, unit):
    """Write minted DOIs back, export CodeMeta and write the run report."""
    code = pipeline.stage_postprocess(ws, unit)
    pipeline.emit_report(ws)
    click.echo(f"report: {ws.report_path}")
    return code


@main.command()
@_common
@unit_opt
@target_opt
@strict_opt
@force_opt
@click.option("--dry-run", is_flag=True, help="Stop after lint; no network I/O.")
def run(ws: Workspace, unit, target, strict, force, dry_run):
    """All four stages in sequence."""
    code = pipeline.run_pipeline(ws, unit, target, strict=strict, force=force, dry_run=dry_run)
    click.echo(f"report: {ws.report_path}")
    return code


@main.command()
@_common
@click.option("--all", "everything", is_flag=True, help="Also forget earlier receipts (next deposit creates a new record).")
def clean(ws: Workspace, everything):
    """Remove intermediate files from the work directory."""
    removed = pipeline.clean(ws, keep_state=not everything)
    click.echo(f"removed {len(removed)} entries from {ws.work_dir}")
    return OK


__all__ = ["main", "FAILURE"]
