import json

import numpy as np
import pytest

from madelung_lab.errors import FormatError
from madelung_lab.field_formats import FORMAT_TAG, load_binary, load_csv, save_binary, save_csv
from madelung_lab.grids_fields import ComplexField, Grid, RealField, sample


@pytest.fixture
def psi() -> ComplexField:
    grid = Grid.of(t=(0.0, 0.5, 4), q=(-1.0, 1.0, 5))
    return sample(grid, lambda t, q: np.exp(-(q**2)) * np.exp(1j * (2.0 * q - t)))


def test_csv_keeps_complex_values_exactly(tmp_path, psi):
    path = save_csv(psi, tmp_path / "psi.csv", scenario="demo")
    loaded = load_csv(path)
    assert isinstance(loaded, ComplexField)
    assert loaded.grid == psi.grid
    assert np.array_equal(loaded.values, psi.values)
    meta = json.loads(path.read_text().splitlines()[0].lstrip("#"))
    assert meta["format"] == FORMAT_TAG
    assert meta["scenario"] == "demo"
    assert path.read_text().splitlines()[1].lstrip("# ") == "t,q,re,im"


def test_binary_pair(tmp_path, psi):
    header, payload = save_binary(psi.real, tmp_path / "nested" / "rho")
    assert header.suffix == ".json" and payload.suffix == ".bin"
    assert payload.stat().st_size == psi.values.size * 8
    loaded = load_binary(tmp_path / "nested" / "rho")
    assert isinstance(loaded, RealField)
    assert np.array_equal(loaded.values, psi.values.real)


def test_foreign_files_are_rejected(tmp_path, psi):
    path = tmp_path / "plain.csv"
    path.write_text("t,q,value\n0,0,1\n")
    with pytest.raises(FormatError):
        load_csv(path)
    header, _ = save_binary(psi, tmp_path / "psi")
    meta = json.loads(header.read_text())
    meta["format"] = "something-else/2"
    header.write_text(json.dumps(meta))
    with pytest.raises(FormatError):
        load_binary(tmp_path / "psi")
