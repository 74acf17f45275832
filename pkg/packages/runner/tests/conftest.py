from collections.abc import Callable
from pathlib import Path

import pytest

from madelung_runner.settings import Settings


@pytest.fixture(autouse=True)
def isolated_env(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    # no stray .env or MADELUNG_LAB_* values from the developer shell
    monkeypatch.chdir(tmp_path)
    for name in ("SEED", "OUTPUT_DIR", "LOG_LEVEL", "MAX_WORKERS"):
        monkeypatch.delenv(f"MADELUNG_LAB_{name}", raising=False)
    monkeypatch.setenv("COLUMNS", "200")


@pytest.fixture
def settings() -> Settings:
    return Settings(_env_file=None)


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[[str], Path]:
    def write(text: str, name: str = "lab.toml") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write
