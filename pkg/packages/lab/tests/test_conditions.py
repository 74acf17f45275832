import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from madelung_lab.ansatz_core import (
    CoefficientSet,
    GaugedAnsatz,
    closed_form,
    solve_constraints_static,
)
from madelung_lab.conditions import (
    ConditionLevel,
    ConditionReport,
    ConditionResult,
    SamplePlan,
    TolerancePolicy,
    check_appendix_a,
    check_extended_set,
    check_fundamental,
    check_static_set,
    convergence_order,
    cubic_nonlinearity_demo,
    drop_h2,
    fundamental_residual,
    gauged_equation_residual,
    merge_reports,
    scale_coefficient,
    sensitivity_scan,
    set_constant,
    shift_coefficient,
)
from madelung_lab.errors import CoefficientError
from madelung_lab.gauge import MinimalCoupling
from madelung_lab.grids_fields import Grid, RealField, sample

SMOOTH_GAUGE = GaugedAnsatz(
    c5=lambda t, q: 0.2 * np.sin(q) * t,
    c6=lambda t, q: 0.1 * np.cos(q) + 0.05 * t,
    u_tilde=lambda t, q: 0.5 + 0.1 * t,
    h1=0.3,
)


class WithoutH2:
    """Gauged recipe whose e coefficient loses its imaginary part."""

    def __init__(self, recipe: GaugedAnsatz):
        self.recipe = recipe

    def build(self, grid: Grid):
        return drop_h2(self.recipe.build(grid))


def test_static_solution_meets_every_condition(static_closed, plan):
    report = check_static_set(static_closed, plan)
    assert report.passed, report.failing()
    assert [r.index for r in report.results] == list(range(1, 11))


def test_real_b_shift_shows_in_the_b_conditions(static_closed, plan):
    report = check_static_set(shift_coefficient(static_closed, "b", 0.1), plan)
    failing = report.failing()
    assert "b_chi_s" in failing
    assert set(failing) <= {"b_chi_rho", "b_chi_s"}


def test_nonzero_c3_fails_only_the_e_condition(static_closed, plan):
    report = check_static_set(set_constant(static_closed, "c3", 1.0), plan)
    assert report.failing() == ["e_chi"]


def test_every_single_perturbation_is_detected(static_closed, plan):
    report = sensitivity_scan(static_closed, plan)
    assert report.passed, report.blind
    by_name = {e.perturbation: e for e in report.entries}
    assert by_name["b_imag"].worst_condition == "b_chi_rho"
    assert by_name["e_imag"].failing == ["e_chi"]
    assert "a_chi_rho" in by_name["a_scale"].failing


def test_frame_holds_chi_fixed_under_a_rescaled_a(static_closed, plan):
    scaled = scale_coefficient(static_closed, "a", 1.001)
    # chi rebuilt from the scaled a is another member of the static family
    assert check_static_set(scaled, plan).passed
    assert check_static_set(static_closed, plan, frame=static_closed.coeffs).passed
    pinned = check_static_set(scaled, plan, frame=static_closed.coeffs)
    assert "a_chi_rho" in pinned.failing()
    assert pinned.result("a_chi_rho").finest == pytest.approx(1e-3, rel=1e-2)


def test_common_rescaling_of_coefficients_changes_nothing(static_closed, plan):
    z = 2.0 - 1.0j
    c = static_closed.coeffs
    scaled = static_closed.with_coeffs(CoefficientSet(a=c.a * z, b=c.b * z, d=c.d * z, e=c.e * z))
    original = check_static_set(static_closed, plan)
    rescaled = check_static_set(scaled, plan)
    for a, b in zip(original.results, rescaled.results):
        assert b.finest == pytest.approx(a.finest, abs=1e-12)


def test_fundamental_requirement_converges(static_closed, plan):
    report = check_fundamental(static_closed, plan)
    result = report.result("fundamental")
    assert result.passed
    assert result.order is None or result.order >= 1.8
    assert len(result.levels) == plan.levels


def test_imaginary_part_is_the_quantum_hamilton_jacobi_equation():
    # r1 = 2 gives hbar = 1; f = 0 gives V = 0
    closed = solve_constraints_static(1.0, r1=2.0, f=0.0)
    grid = Grid.of(t=(0.0, 1.0, 65), q=(0.0, 1.0, 65))
    k, omega, rho0 = 1.5, 0.3, 0.5
    rho = RealField.constant(grid, rho0)
    s = sample(grid, lambda t, q: k * q - omega * t)
    residual = fundamental_residual(closed, rho, s)
    expected = 2.0 * rho0 * (-omega + k**2 / 2.0)
    assert np.allclose(residual.imag.interior_values(), expected, atol=2e-3)
    assert np.max(np.abs(residual.real.interior_values())) < 1e-3


def test_fundamental_requirement_needs_positive_density(static_closed, spacetime_grid):
    rho = sample(spacetime_grid, lambda t, q: q**2 + 0.0 * t)
    with pytest.raises(CoefficientError):
        fundamental_residual(static_closed, rho, RealField.constant(spacetime_grid, 0.5))


def test_constant_gauge_matches_the_static_set(plan):
    recipe = GaugedAnsatz(u_tilde=0.65, h1=0.7)
    extended = check_extended_set(recipe, plan)
    assert extended.passed, extended.failing()
    static = check_static_set(recipe.build(plan.grid), plan)
    assert static.passed, static.failing()


def test_smooth_gauge_meets_the_extended_set(plan):
    report = check_extended_set(SMOOTH_GAUGE, plan)
    assert report.passed, report.failing()
    for index in (4, 5, 10):
        assert report.result(index).kind == "fd"


def test_missing_h2_breaks_the_e_condition(plan):
    recipe = GaugedAnsatz(u_tilde=0.5, c6=lambda t, q: 0.3 * t + 0.0 * q, h1=0.2)
    report = check_extended_set(WithoutH2(recipe), plan)
    assert report.failing() == ["e_chi"]


def test_extended_set_rejects_static_forms(static_closed, plan):
    with pytest.raises(CoefficientError):
        check_extended_set(static_closed, plan)


def test_intermediate_identities_hold_off_the_constraint_surface():
    closed = closed_form(CoefficientSet(a=0.3 + 1.2j, b=0.0, d=1.0, e=0.0))
    report = check_appendix_a(closed)
    assert report.passed, report.failing()
    assert len(report.results) == 12
    assert {r.kind for r in report.results[7:]} == {"fd"}


def test_cubic_term_leaves_continuity_alone(static_closed, spacetime_grid):
    rho = sample(spacetime_grid, lambda t, q: 1.0 + 0.3 * np.cos(q) * np.exp(-t))
    s = sample(spacetime_grid, lambda t, q: 0.8 * q - 0.2 * t)
    report = cubic_nonlinearity_demo(static_closed, rho, s, strength=0.5)
    assert report.continuity_change < 1e-12
    assert report.imaginary_change == pytest.approx(report.expected_imaginary_change, rel=1e-10)


def test_gauged_equation_residual_vanishes_for_a_plane_wave():
    a, k = 0.5, 2.0
    omega = (k - a) ** 2 / 2.0
    errors = []
    for count in (33, 65, 129):
        grid = Grid.of(t=(0.0, 0.5, count), q=(0.0, 1.0, count))
        psi = sample(grid, lambda t, q: np.exp(1j * (k * q - omega * t)))
        coupling = MinimalCoupling(charge=1.0, light_speed=1.0, hbar=1.0, vector=(a,))
        residual = gauged_equation_residual(psi, coupling, RealField.constant(grid, 0.0))
        # the composed covariant derivative is only first order next to the q boundary
        errors.append(np.max(np.abs(residual.values[1:-1, 2:-2])))
    assert errors[1] < errors[0] / 3.0
    assert errors[2] < errors[1] / 3.0


def test_convergence_order_of_quadratic_errors():
    h = [0.1, 0.05, 0.025]
    assert convergence_order(h, [3.0 * x**2 for x in h]) == pytest.approx(2.0)
    assert convergence_order(h, [0.0, 1e-3, 1e-4]) is None
    with pytest.raises(ValueError):
        convergence_order(h[:2], [1.0, 0.25])


def test_roundoff_residuals_pass_without_an_order():
    policy = TolerancePolicy()
    levels = [ConditionLevel(level=n, spacing=0.1 / 2**n, linf=1e-13, l2=1e-13, samples=4) for n in range(3)]
    order, passed = policy.judge("fd", levels)
    assert passed
    assert order == pytest.approx(0.0, abs=1e-9)


def report_of(values: list[tuple[float, float, int]]) -> ConditionReport:
    levels = [
        ConditionLevel(level=n, spacing=0.1 / 2**n, linf=linf, l2=l2, samples=samples)
        for n, (linf, l2, samples) in enumerate(values)
    ]
    result = ConditionResult(index=1, name="demo", kind="fd", target="0", levels=levels, passed=False)
    return ConditionReport(suite="demo", results=[result])


level_values = st.lists(
    st.tuples(
        st.floats(min_value=1e-9, max_value=1.0),
        st.floats(min_value=1e-9, max_value=1.0),
        st.integers(min_value=1, max_value=50),
    ),
    min_size=3,
    max_size=3,
)


@settings(deadline=None, max_examples=50)
@given(level_values, level_values, level_values)
def test_merging_reports_is_associative(a, b, c):
    ra, rb, rc = report_of(a), report_of(b), report_of(c)
    left = merge_reports(merge_reports(ra, rb), rc).results[0]
    right = merge_reports(ra, merge_reports(rb, rc)).results[0]
    flat = merge_reports(ra, rb, rc).results[0]
    for x, y, z in zip(left.levels, right.levels, flat.levels):
        assert x.linf == y.linf == z.linf
        assert x.l2 == pytest.approx(y.l2, rel=1e-12)
        assert x.l2 == pytest.approx(z.l2, rel=1e-12)
        assert x.samples == y.samples == z.samples


def test_plan_ladder(spacetime_grid):
    plan = SamplePlan.draw(spacetime_grid, seed=3, levels=3)
    shapes = [g.shape for g in plan.grids()]
    assert shapes == [(17, 17), (33, 33), (65, 65)]
    again = SamplePlan.draw(spacetime_grid, seed=3)
    first = [r.values for r, _ in plan.sample(spacetime_grid)]
    second = [r.values for r, _ in again.sample(spacetime_grid)]
    assert all(np.array_equal(x, y) for x, y in zip(first, second))
    assert all(np.all(x > 0) for x in first)
