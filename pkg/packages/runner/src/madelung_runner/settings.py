from pathlib import Path
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide overrides read from MADELUNG_LAB_* variables or a .env file."""

    model_config = SettingsConfigDict(env_prefix="MADELUNG_LAB_", env_file=".env", env_file_encoding="utf-8", extra="ignore")

    # replaces every scenario seed when set, for fuzzing
    seed: int | None = None
    output_dir: Path = Path("results")
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    max_workers: int | None = Field(default=None, ge=1)


def get_settings() -> Settings:
    return Settings()
