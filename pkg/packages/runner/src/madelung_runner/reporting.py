"""
Madelung Lab - Run Reports

Writes one deterministic JSON report per scenario, field files for evolution
suites and a run-metadata file, and prints the summary table.
"""

from __future__ import annotations

import json
import logging
import math
import platform
from collections.abc import Mapping, Sequence
from datetime import datetime
from importlib import metadata
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, Field
from rich.console import Console
from rich.table import Table

from madelung_lab.field_formats import save_binary, save_csv
from madelung_lab.grids_fields import Field as LabField
from madelung_lab.records import Check, Record

logger = logging.getLogger(__name__)

METADATA_FILE = "run-metadata.json"
VERSIONED = ("lab", "runner", "numpy", "scipy", "pydantic")


class ScenarioReport(Record):
    """Everything a scenario produced except timestamps."""

    scenario: str
    suite: str
    seed: int | None
    passed: bool
    summary: str
    checks: list[Check] = []
    details: dict[str, Any] = {}
    error: str | None = None
    fields: list[str] = []

    def failing(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]


class RunMetadata(BaseModel):
    started_at: datetime
    finished_at: datetime
    config: str
    exit_code: int
    python: str = Field(default_factory=platform.python_version)
    platform: str = Field(default_factory=platform.platform)
    versions: dict[str, str] = Field(default_factory=dict)
    seeds: dict[str, int | None] = Field(default_factory=dict)
    scenarios: list[str] = Field(default_factory=list)


def jsonable(value: Any) -> Any:
    """Plain JSON values: numpy scalars unwrapped, inf/nan spelled out."""
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return [jsonable(value.real), jsonable(value.imag)]
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


def render(model: BaseModel) -> str:
    return json.dumps(jsonable(model.model_dump(mode="json")), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_report(report: ScenarioReport, out_dir: Path) -> Path:
    path = out_dir / f"{report.scenario}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(report), encoding="utf-8")
    logger.debug("wrote %s", path)
    return path


def write_fields(scenario: str, fields: Mapping[str, LabField], out_dir: Path) -> list[Path]:
    """``<scenario>-<key>.csv`` plus the binary pair for every field."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for key, field in fields.items():
        stem = out_dir / f"{scenario}-{key}"
        written.append(save_csv(field, stem.with_suffix(".csv"), scenario=scenario, field=key))
        written.extend(save_binary(field, stem, scenario=scenario, field=key))
    return written


def package_versions(names: Sequence[str] = VERSIONED) -> dict[str, str]:
    versions = {}
    for name in names:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "unknown"
    return versions


def write_metadata(meta: RunMetadata, out_dir: Path) -> Path:
    path = out_dir / METADATA_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(meta), encoding="utf-8")
    return path


def summary_table(reports: Sequence[ScenarioReport]) -> Table:
    table = Table(title="Madelung Lab run")
    table.add_column("Scenario", style="bold")
    table.add_column("Suite")
    table.add_column("Result")
    table.add_column("Checks", justify="right")
    table.add_column("Summary")
    for report in reports:
        passed = sum(c.passed for c in report.checks)
        result = "[green]pass[/green]" if report.passed else "[red]FAIL[/red]"
        table.add_row(report.scenario, report.suite, result, f"{passed}/{len(report.checks)}", report.summary)
    return table


def print_summary(reports: Sequence[ScenarioReport], console: Console | None = None) -> None:
    console = console or Console()
    console.print(summary_table(reports))
    for report in reports:
        if report.error:
            console.print(f"[red]{report.scenario}[/red]: {report.error}")
        elif not report.passed:
            console.print(f"[red]{report.scenario}[/red]: failing {', '.join(report.failing())}")
