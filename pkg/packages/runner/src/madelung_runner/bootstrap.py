"""
Madelung Lab - Process Wiring

Logging and console setup for the CLI and its worker processes.
"""

import logging

from rich.console import Console
from rich.logging import RichHandler


def get_console(stderr: bool = False) -> Console:
    """Console for the summary table (stdout) or for log lines (stderr)."""
    return Console(stderr=stderr)


def configure_logging(level: str = "INFO") -> None:
    """Rich log lines on stderr; stdout stays reserved for tables and text."""
    handler = RichHandler(console=get_console(stderr=True), show_path=False, rich_tracebacks=True)
    logging.basicConfig(level=level, format="%(message)s", datefmt="[%X]", handlers=[handler], force=True)


def init_worker(level: str) -> None:
    """ProcessPoolExecutor initializer; spawned workers start without handlers."""
    configure_logging(level)
