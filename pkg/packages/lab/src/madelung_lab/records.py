"""
Madelung Lab - Records

JSON-serializable result records shared across modules.
"""

from __future__ import annotations

import math

from pydantic import BaseModel, ConfigDict, Field, field_serializer


class Record(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    @field_serializer("*", when_used="json")
    def _finite(self, value: object) -> object:
        # JSON has no inf/nan; keep the output loadable by strict parsers
        if isinstance(value, float) and not math.isfinite(value):
            return repr(value)
        return value


class ResidualSummary(Record):
    """Norms of one residual field."""

    linf: float
    l2: float
    nodes: int
    masked_nodes: int = 0
    interior_only: bool = True


class Check(Record):
    """One named pass/fail comparison of a measured value against a threshold."""

    name: str
    value: float
    threshold: float
    passed: bool
    comparison: str = "<="
    detail: dict[str, float | int | str | bool | None] = Field(default_factory=dict)

    @classmethod
    def at_most(cls, name: str, value: float, threshold: float, **detail: float | int | str | bool | None) -> Check:
        return cls(name=name, value=float(value), threshold=float(threshold),
                   passed=bool(value <= threshold), comparison="<=", detail=detail)

    @classmethod
    def at_least(cls, name: str, value: float, threshold: float, **detail: float | int | str | bool | None) -> Check:
        return cls(name=name, value=float(value), threshold=float(threshold),
                   passed=bool(value >= threshold), comparison=">=", detail=detail)
