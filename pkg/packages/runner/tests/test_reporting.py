import json
from datetime import datetime, timezone

import numpy as np
from rich.console import Console

from madelung_lab.field_formats import load_binary, load_csv
from madelung_lab.grids_fields import ComplexField, Grid
from madelung_lab.records import Check
from madelung_runner.reporting import (
    METADATA_FILE,
    RunMetadata,
    ScenarioReport,
    jsonable,
    print_summary,
    render,
    write_fields,
    write_metadata,
    write_report,
)


def report(**changes) -> ScenarioReport:
    base = dict(
        scenario="demo",
        suite="stokes",
        seed=None,
        passed=False,
        summary="1/2 checks",
        checks=[Check.at_most("small", 1e-12, 1e-10), Check.at_most("large", 0.5, 1e-10)],
        details={"z": 1, "a": [1.0, 2.0]},
    )
    return ScenarioReport(**{**base, **changes})


def test_jsonable_unwraps_numpy_and_spells_out_non_finite():
    value = jsonable({"n": np.int64(3), "x": np.float64(0.5), "c": 1 + 2j, "bad": float("inf"), "t": (np.nan,)})
    assert value == {"n": 3, "x": 0.5, "c": [1.0, 2.0], "bad": "inf", "t": ["nan"]}
    assert type(value["n"]) is int


def test_render_is_sorted_and_stable():
    text = render(report())
    assert text == render(report())
    assert text.endswith("\n")
    payload = json.loads(text)
    assert list(payload) == sorted(payload)
    assert list(payload["details"]) == ["a", "z"]


def test_failing_lists_check_names():
    assert report().failing() == ["large"]


def test_write_report_uses_the_scenario_name(tmp_path):
    path = write_report(report(), tmp_path / "out")
    assert path == tmp_path / "out" / "demo.json"
    assert json.loads(path.read_text())["checks"][1]["passed"] is False


def test_write_fields_tags_both_formats(tmp_path):
    grid = Grid.of(t=(0.0, 1.0, 3), q=(-1.0, 1.0, 5))
    psi = ComplexField(grid, np.exp(1j * grid.mesh()[1]))
    written = write_fields("packet", {"psi": psi}, tmp_path)
    names = sorted(p.name for p in written)
    assert names == ["packet-psi.bin", "packet-psi.csv", "packet-psi.json"]
    assert np.allclose(load_csv(tmp_path / "packet-psi.csv").values, psi.values)
    assert np.allclose(load_binary(tmp_path / "packet-psi").values, psi.values)


def test_metadata_records_seeds_and_versions(tmp_path):
    now = datetime(2024, 1, 1, tzinfo=timezone.utc)
    meta = RunMetadata(started_at=now, finished_at=now, config="lab.toml", exit_code=1,
                       versions={"numpy": "2.0"}, seeds={"demo": 4}, scenarios=["demo"])
    path = write_metadata(meta, tmp_path)
    assert path.name == METADATA_FILE
    payload = json.loads(path.read_text())
    assert payload["seeds"] == {"demo": 4}
    assert payload["exit_code"] == 1
    assert payload["python"]


def test_summary_names_failures():
    console = Console(record=True, width=160)
    print_summary([report(), report(scenario="broken", error="SolverError: diverged", checks=[])], console)
    text = console.export_text()
    assert "failing large" in text
    assert "SolverError: diverged" in text
