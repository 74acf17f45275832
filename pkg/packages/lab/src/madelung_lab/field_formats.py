"""
Madelung Lab - Field Files

CSV and JSON-header + binary payload formats for RealField / ComplexField.

CSV layout: a ``#``-prefixed JSON metadata line, a column header line, then one
row per node (C order) with the node coordinates followed by the value
(``value`` for real fields, ``re,im`` for complex ones).

Binary layout: ``<stem>.json`` holds the metadata, ``<stem>.bin`` the values as
little-endian float64 (complex values interleaved re, im).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import FormatError
from .grids_fields import ComplexField, Field, Grid, RealField, field_like

FORMAT_TAG = "madelung-field/1"


def _metadata(field: Field, **extra: object) -> dict[str, object]:
    kind = "complex" if isinstance(field, ComplexField) else "real"
    return {"format": FORMAT_TAG, "kind": kind, "grid": field.grid.describe(), **extra}


def _check_tag(meta: dict[str, object], source: Path) -> None:
    if meta.get("format") != FORMAT_TAG:
        raise FormatError(f"{source}: expected format '{FORMAT_TAG}', found {meta.get('format')!r}")


def save_csv(field: Field, path: str | Path, **extra: object) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    grid = field.grid
    coords = np.column_stack([m.ravel() for m in grid.mesh()])
    if isinstance(field, ComplexField):
        data = np.column_stack([coords, field.values.real.ravel(), field.values.imag.ravel()])
        columns = [*grid.names, "re", "im"]
    else:
        data = np.column_stack([coords, field.values.ravel()])
        columns = [*grid.names, "value"]
    header = json.dumps(_metadata(field, **extra), sort_keys=True) + "\n" + ",".join(columns)
    np.savetxt(path, data, delimiter=",", header=header, comments="# ", fmt="%.17g")
    return path


def load_csv(path: str | Path) -> Field:
    path = Path(path)
    with path.open(encoding="utf-8") as handle:
        first = handle.readline()
    if not first.startswith("#"):
        raise FormatError(f"{path}: missing metadata line")
    meta = json.loads(first.lstrip("#").strip())
    _check_tag(meta, path)
    grid = Grid.from_description(meta["grid"])
    data = np.atleast_2d(np.loadtxt(path, delimiter=",", comments="#"))
    if meta["kind"] == "complex":
        values = (data[:, grid.ndim] + 1j * data[:, grid.ndim + 1]).reshape(grid.shape)
        return ComplexField(grid, values)
    return RealField(grid, data[:, grid.ndim].reshape(grid.shape))


def save_binary(field: Field, stem: str | Path, **extra: object) -> tuple[Path, Path]:
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    header, payload = stem.with_suffix(".json"), stem.with_suffix(".bin")
    meta = _metadata(field, byte_order="little", dtype="float64", **extra)
    header.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    values = field.values
    if isinstance(field, ComplexField):
        values = np.stack([values.real, values.imag], axis=-1)
    np.ascontiguousarray(values, dtype="<f8").tofile(payload)
    return header, payload


def load_binary(stem: str | Path) -> Field:
    stem = Path(stem)
    header, payload = stem.with_suffix(".json"), stem.with_suffix(".bin")
    meta = json.loads(header.read_text(encoding="utf-8"))
    _check_tag(meta, header)
    grid = Grid.from_description(meta["grid"])
    raw = np.fromfile(payload, dtype="<f8")
    if meta["kind"] == "complex":
        pairs = raw.reshape(grid.shape + (2,))
        return field_like(grid, pairs[..., 0] + 1j * pairs[..., 1])
    return RealField(grid, raw.reshape(grid.shape))
