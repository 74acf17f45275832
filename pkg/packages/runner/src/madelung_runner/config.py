"""
Madelung Lab - Scenario Configuration

Loads a TOML scenario file, validates it against the suite registry and
resolves seeds, tolerances and output directories into runnable scenarios.
"""

from __future__ import annotations

import logging
import tomllib
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any

from pydantic import BaseModel, ConfigDict, Field, RootModel, ValidationError, model_validator

from madelung_lab.conditions import TolerancePolicy
from madelung_lab.errors import GridError
from madelung_lab.grids_fields import Grid

from .settings import Settings

if TYPE_CHECKING:
    from .scenarios import Suite

logger = logging.getLogger(__name__)

AxisSpec = tuple[float, float, int]
ComplexPair = tuple[float, float]


class ConfigError(Exception):
    """Invalid scenario file; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key
        self.message = message


# --------------------------------------------------------------------------
# Shared parameter types
# --------------------------------------------------------------------------


class SuiteParams(BaseModel):
    """Base of every suite's parameter model; unknown keys are errors."""

    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSpec(RootModel[dict[str, AxisSpec]]):
    """Axis name -> (start, stop, count), in axis order."""

    @model_validator(mode="after")
    def _buildable(self) -> GridSpec:
        try:
            self.build()
        except GridError as exc:
            raise ValueError(str(exc)) from exc
        return self

    def build(self) -> Grid:
        return Grid.of(**self.root)


def plane(t: tuple[float, float] = (0.0, 1.0), q: tuple[float, float] = (-1.0, 1.0), count: int = 17) -> GridSpec:
    return GridSpec({"t": (t[0], t[1], count), "q": (q[0], q[1], count)})


def as_complex(pair: ComplexPair) -> complex:
    return complex(pair[0], pair[1])


# --------------------------------------------------------------------------
# File models
# --------------------------------------------------------------------------


class ToleranceOverrides(BaseModel):
    model_config = ConfigDict(extra="forbid")

    analytic: float | None = Field(default=None, gt=0)
    min_order: float | None = Field(default=None, gt=0)
    floor: float | None = Field(default=None, gt=0)

    def apply(self, base: TolerancePolicy) -> TolerancePolicy:
        return base.model_copy(update=self.model_dump(exclude_none=True))


class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(min_length=1, pattern=r"^[A-Za-z0-9][A-Za-z0-9_-]*$")
    suite: str
    seed: int | None = None
    output_dir: Path | None = None
    params: dict[str, Any] = Field(default_factory=dict)
    tolerances: ToleranceOverrides = Field(default_factory=ToleranceOverrides)


class LabConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int | None = None
    output_dir: Path | None = None
    scenario: list[ScenarioConfig] = Field(min_length=1)


@dataclass(frozen=True)
class Scenario:
    """One validated scenario, ready to hand to a worker process."""

    name: str
    suite: str
    seed: int | None
    params: SuiteParams
    policy: TolerancePolicy
    output_dir: Path
    base_dir: Path


# --------------------------------------------------------------------------
# Loading
# --------------------------------------------------------------------------


def _key(*parts: object) -> str:
    return ".".join(str(p) for p in parts)


def _from_validation(exc: ValidationError, *prefix: object) -> ConfigError:
    first = exc.errors()[0]
    return ConfigError(_key(*prefix, *first["loc"]), first["msg"])


def read_config(path: str | Path) -> LabConfig:
    source = Path(path)
    try:
        with source.open("rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("", f"config file {source} does not exist") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("", f"{source} is not valid TOML: {exc}") from exc
    try:
        return LabConfig.model_validate(raw)
    except ValidationError as exc:
        raise _from_validation(exc) from exc


def resolve(
    config: LabConfig,
    suites: Mapping[str, Suite],
    settings: Settings,
    base_dir: Path = Path("."),
) -> list[Scenario]:
    """Validate suite names, parameters and seeds; keep declaration order."""
    seen: dict[str, int] = {}
    scenarios = []
    for n, entry in enumerate(config.scenario):
        if entry.name in seen:
            raise ConfigError(_key("scenario", n, "name"), f"duplicate scenario name '{entry.name}' (first used by scenario.{seen[entry.name]})")
        seen[entry.name] = n
        suite = suites.get(entry.suite)
        if suite is None:
            raise ConfigError(_key("scenario", n, "suite"), f"unknown suite '{entry.suite}'; run 'madelung-lab list'")
        try:
            params = suite.params.model_validate(entry.params)
        except ValidationError as exc:
            raise _from_validation(exc, "scenario", n, "params") from exc
        seed = next((s for s in (settings.seed, entry.seed, config.seed) if s is not None), None)
        if suite.randomized and seed is None:
            raise ConfigError(_key("scenario", n, "seed"), f"suite '{suite.name}' draws random fields and needs a seed")
        output_dir = entry.output_dir or config.output_dir or settings.output_dir
        scenarios.append(
            Scenario(
                name=entry.name,
                suite=suite.name,
                seed=seed,
                params=params,
                policy=entry.tolerances.apply(TolerancePolicy()),
                output_dir=output_dir,
                base_dir=base_dir,
            )
        )
    if settings.seed is not None:
        logger.info("MADELUNG_LAB_SEED=%d overrides every scenario seed", settings.seed)
    return scenarios


def load_config(path: str | Path, suites: Mapping[str, Suite], settings: Settings) -> list[Scenario]:
    """Read and resolve a scenario file.

    Input files named by scenario parameters resolve against the config
    file's directory; output directories against the working directory.
    """
    return resolve(read_config(path), suites, settings, Path(path).resolve().parent)
