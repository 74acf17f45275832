"""
Madelung Lab - Command Line

``madelung-lab run`` executes the scenarios of a TOML file, ``list`` shows
the built-in suites and ``describe`` prints one suite's purpose and
parameters. Exit codes: 0 all checks pass, 1 a check failed, 2 the
configuration was rejected.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from pydantic import ValidationError
from rich.table import Table

from .bootstrap import configure_logging, get_console, init_worker
from .config import ConfigError, Scenario, load_config
from .reporting import (
    RunMetadata,
    ScenarioReport,
    package_versions,
    print_summary,
    write_fields,
    write_metadata,
    write_report,
)
from .scenarios import SUITES, execute, suggest
from .settings import Settings, get_settings

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="madelung-lab", description="Numerical checks for the Madelung-derived wave equation.")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    run_cmd = sub.add_parser("run", help="Run every scenario of a config file")
    run_cmd.add_argument("config", type=Path)
    run_cmd.add_argument("--only", action="append", default=None, metavar="NAME", help="Run only the named scenario (repeatable)")
    run_cmd.add_argument("--out", type=Path, default=None, help="Output directory for every scenario")
    run_cmd.add_argument("--parallel", action="store_true", help="Run scenarios in worker processes")
    run_cmd.add_argument("--workers", type=int, default=None)

    sub.add_parser("list", help="List the built-in suites")

    describe_cmd = sub.add_parser("describe", help="Show what a suite checks and its parameters")
    describe_cmd.add_argument("suite")
    return parser


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_list() -> int:
    table = Table(title="Suites")
    table.add_column("Suite", style="bold")
    table.add_column("Title")
    table.add_column("Checks")
    table.add_column("Seeded", justify="center")
    for suite in SUITES.values():
        table.add_row(suite.name, suite.title, suite.anchor, "yes" if suite.randomized else "")
    get_console().print(table)
    return EXIT_PASS


def cmd_describe(name: str) -> int:
    suite = SUITES.get(name)
    if suite is None:
        hint = suggest(name)
        message = f"unknown suite '{name}'"
        if hint:
            message += f"; did you mean {', '.join(hint)}?"
        print(message, file=sys.stderr)
        return EXIT_CONFIG
    console = get_console()
    console.print(f"[bold]{suite.name}[/bold] - {suite.title}")
    console.print(f"Checks: {suite.anchor}")
    console.print()
    console.print(suite.description, soft_wrap=True)
    console.print()
    table = Table(title="Parameters")
    table.add_column("Name", style="bold")
    table.add_column("Default")
    for key, info in suite.params.model_fields.items():
        default = info.get_default(call_default_factory=True)
        if hasattr(default, "model_dump"):
            default = default.model_dump()
        table.add_row(key, repr(default))
    console.print(table)
    if suite.randomized:
        console.print("Needs a seed (scenario, file or MADELUNG_LAB_SEED).")
    return EXIT_PASS


def _run_all(scenarios: Sequence[Scenario], parallel: bool, workers: int | None, level: str) -> list[tuple[ScenarioReport, dict]]:
    if not parallel or len(scenarios) < 2:
        return [execute(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=workers, initializer=init_worker, initargs=(level,)) as pool:
        # map keeps declaration order
        return list(pool.map(execute, scenarios))


def cmd_run(args: argparse.Namespace, settings: Settings, level: str) -> int:
    started = datetime.now(timezone.utc)
    try:
        scenarios = load_config(args.config, SUITES, settings)
    except ConfigError as exc:
        logger.error("config rejected: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.only:
        known = {s.name for s in scenarios}
        missing = [name for name in args.only if name not in known]
        if missing:
            print(f"error: --only: no scenario named {', '.join(missing)} in {args.config}", file=sys.stderr)
            return EXIT_CONFIG
        scenarios = [s for s in scenarios if s.name in args.only]
    if args.out is not None:
        scenarios = [dataclasses.replace(s, output_dir=args.out) for s in scenarios]

    results = _run_all(scenarios, args.parallel, args.workers or settings.max_workers, level)
    reports = []
    for scenario, (report, fields) in zip(scenarios, results):
        write_report(report, scenario.output_dir)
        if fields:
            write_fields(scenario.name, fields, scenario.output_dir)
        reports.append(report)

    print_summary(reports, get_console())
    exit_code = EXIT_PASS if all(r.passed for r in reports) else EXIT_FAIL
    finished = datetime.now(timezone.utc)
    versions = package_versions()
    for out_dir in dict.fromkeys(s.output_dir for s in scenarios):
        members = [s for s in scenarios if s.output_dir == out_dir]
        meta = RunMetadata(
            started_at=started,
            finished_at=finished,
            config=str(args.config),
            exit_code=exit_code,
            versions=versions,
            seeds={s.name: s.seed for s in members},
            scenarios=[s.name for s in members],
        )
        write_metadata(meta, out_dir)
    logger.info("%d/%d scenarios passed", sum(r.passed for r in reports), len(reports))
    return exit_code


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
    except ValidationError as exc:
        print(f"error: invalid MADELUNG_LAB_* setting: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    level = args.log_level or settings.log_level
    configure_logging(level)
    match args.command:
        case "list":
            return cmd_list()
        case "describe":
            return cmd_describe(args.suite)
        case _:
            return cmd_run(args, settings, level)


if __name__ == "__main__":
    raise SystemExit(main())
