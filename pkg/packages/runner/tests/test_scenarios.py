import dataclasses
import tomllib
from pathlib import Path

import numpy as np
import pytest

from madelung_lab.conditions import TolerancePolicy
from madelung_runner.config import Scenario, load_config
from madelung_runner.scenarios import SUITES, execute, suggest


CONFIGS = Path(__file__).resolve().parents[3] / "configs"
DEFAULT_NAMES = [s["name"] for s in tomllib.loads((CONFIGS / "default.toml").read_text())["scenario"]]


def scenario(suite: str, seed: int | None = None, **params) -> Scenario:
    return Scenario(
        name=f"test-{suite}",
        suite=suite,
        seed=seed,
        params=SUITES[suite].params.model_validate(params),
        policy=TolerancePolicy(),
        output_dir=Path("results"),
        base_dir=Path("."),
    )


def test_every_suite_has_valid_defaults():
    assert len(SUITES) == 17
    for suite in SUITES.values():
        params = suite.params()
        assert suite.anchor and suite.description
        assert params == suite.params.model_validate(params.model_dump())


def test_static_description_lists_the_ten_conditions():
    assert "the following 10 conditions" in SUITES["static-conditions"].description


def test_suggest_offers_near_names():
    assert "stokes" in suggest("stoke")
    assert suggest("zzzzzzzz") == []


def test_c6_rejection_passes():
    report, fields = execute(scenario("c6-rejection"))
    assert report.passed, report.failing()
    assert fields == {}
    assert report.details["constant"]["rejected"] is False


def test_physical_scaling_passes():
    report, _ = execute(scenario("maxwell-scaling", nodes=5))
    assert report.passed, report.failing()
    assert report.details["rate"] == pytest.approx(2.0 / 1.5)


def test_flux_line_holonomy_passes():
    report, _ = execute(scenario("flux-line-holonomy"))
    assert report.passed, report.failing()
    assert len(report.checks) == 7


def test_stokes_holds_for_smooth_and_breaks_for_a_flux_line():
    smooth, _ = execute(scenario("stokes", potential="plane_wave"))
    assert smooth.passed, smooth.failing()
    pierced, _ = execute(
        scenario("stokes", potential="flux_line", strength=1.3, sides=(2.0, 2.0), resolution=2048, expect_violation=True)
    )
    assert pierced.passed
    assert pierced.details["result"]["discrepancy"] == pytest.approx(1.3, abs=1e-4)


def test_compensation_tells_quantized_flux_apart():
    report, _ = execute(scenario("compensation"))
    assert report.passed, report.failing()
    assert [c.name for c in report.checks] == ["quantized-1", "quantized-2", "flagged-0.37"]


def test_static_draws_pass_and_perturbation_fails_b_conditions():
    clean, _ = execute(scenario("static-conditions", seed=1, draws=3))
    assert clean.passed, clean.failing()
    perturbed, _ = execute(scenario("static-conditions", seed=1, draws=3, perturb="b_imag"))
    assert not perturbed.passed
    failing = perturbed.details["failing_indices"]
    assert 4 in failing and set(failing) <= {4, 5}


def test_seeded_runs_repeat_exactly():
    first, _ = execute(scenario("sensitivity", seed=5))
    second, _ = execute(scenario("sensitivity", seed=5))
    assert first == second
    assert first.passed, first.failing()


def test_qhj_eigenstate_converges():
    report, _ = execute(scenario("qhj-eigenstate", nodes=[65, 129, 257], tolerance=1e-3))
    assert report.passed, report.failing()
    linf = report.details["linf"]
    assert linf[0] > linf[1] > linf[2]


def test_numerical_errors_become_failed_reports():
    report, fields = execute(scenario("stokes", potential="tabulated"))
    assert not report.passed
    assert report.error.startswith("LabError")
    assert fields == {}


def test_bianchi_sees_the_monopole():
    report, _ = execute(scenario("bianchi", nodes=5))
    assert report.passed, report.failing()
    by_name = {c.name: c for c in report.checks}
    assert by_name["monopole-detected"].detail["div_b"] == pytest.approx(1.0, abs=1e-9)


def test_seedless_randomized_scenario_fails_cleanly():
    bare = dataclasses.replace(scenario("static-conditions", seed=1, draws=1), seed=None)
    report, _ = execute(bare)
    assert not report.passed
    assert "needs a seed" in report.error


def test_packet_field_is_a_spacetime_grid():
    report, fields = execute(
        scenario("cn-free-packet", nodes=256, steps=200, snapshot_every=50, dt=0.01, drift_tolerance=0.2)
    )
    psi = fields["psi"]
    assert psi.grid.names == ("t", "q")
    assert psi.grid.shape == (5, 256)
    assert np.allclose(np.sum(np.abs(psi.values) ** 2, axis=1) * psi.grid.spacing(1), 1.0, atol=1e-6)
    assert report.fields == ["psi"]


def test_rescaled_a_fails_the_a_conditions():
    report, _ = execute(scenario("static-conditions", seed=1, draws=2, perturb="a_scale"))
    assert not report.passed
    assert 7 in report.details["failing_indices"]


def test_dressed_route_converges_to_the_plain_route():
    report, _ = execute(scenario("dressing-equivalence", seed=3, samples=1))
    assert report.passed, report.failing()
    errors = report.details["sample-0"]["l2_errors"]
    assert errors[0] > errors[1] > errors[2]


@pytest.mark.parametrize("name", DEFAULT_NAMES)
def test_default_config_scenario_passes(name, settings):
    scenarios = {s.name: s for s in load_config(CONFIGS / "default.toml", SUITES, settings)}
    report, _ = execute(scenarios[name])
    assert report.error is None, report.error
    assert report.passed, report.failing()


def test_perturbed_config_breaks_only_the_b_conditions(settings):
    reports = {s.name: execute(s)[0] for s in load_config(CONFIGS / "perturbed.toml", SUITES, settings)}
    assert reports["sensitivity"].passed, reports["sensitivity"].failing()
    assert not reports["static-b-imag"].passed
    assert set(reports["static-b-imag"].details["failing_indices"]) <= {4, 5}
