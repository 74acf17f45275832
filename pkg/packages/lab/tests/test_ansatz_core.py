import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from madelung_lab.ansatz_core import (
    AnsatzParams,
    CoefficientSet,
    GaugedAnsatz,
    barred_coeffs,
    barred_coeffs_trig,
    chi_derivatives,
    chi_from_fh,
    chi_of,
    chi_polar,
    closed_form,
    f_multiplier,
    fh_of,
    regular_s_interval,
    solve_constraints_static,
    static_constraint_residuals,
    to_psi_v,
)
from madelung_lab.errors import CoefficientError, ConstraintError, DensityError, DomainError
from madelung_lab.grids_fields import Grid

RHO = np.linspace(0.3, 2.0, 7)


def s_values(closed, count: int = 7):
    lo, hi = regular_s_interval(closed)
    return np.linspace(lo, hi, count)


def test_static_family_meets_its_constraints(static_closed):
    residuals = static_constraint_residuals(static_closed)
    assert max(residuals.values()) < 1e-12
    assert static_closed.coeffs.c2 == pytest.approx(1.3 * abs(1.0 + 0.5j) ** 2)


def test_static_solver_rejects_degenerate_input():
    with pytest.raises(CoefficientError):
        solve_constraints_static(1.0, r1=0.0)
    with pytest.raises(CoefficientError):
        solve_constraints_static(0.0, r1=1.0)


def test_complex_and_real_pair_forms_agree(static_closed):
    s = s_values(static_closed)
    chi = chi_of(RHO, s, static_closed.params, static_closed.coeffs)
    chi1, chi2 = chi_polar(RHO, s, static_closed.params, static_closed.coeffs)
    assert np.allclose(chi, chi1 + 1j * chi2, rtol=0, atol=1e-13)


def test_chi_rebuilt_from_f_and_h(static_closed):
    s = s_values(static_closed)
    direct = chi_of(RHO, s, static_closed.params, static_closed.coeffs)
    assert np.allclose(chi_from_fh(RHO, s, static_closed), direct, rtol=1e-12, atol=1e-12)


def test_chi_derivatives_match_difference_quotients(static_closed):
    params, coeffs = static_closed.params, static_closed.coeffs
    rho, s, h = 0.8, 1.1, 1e-5
    exact = chi_derivatives(rho, s, params, coeffs)

    def chi(r, q):
        return complex(chi_of(r, q, params, coeffs))

    assert complex(exact.rho) == pytest.approx((chi(rho + h, s) - chi(rho - h, s)) / (2 * h), rel=1e-8)
    assert complex(exact.s) == pytest.approx((chi(rho, s + h) - chi(rho, s - h)) / (2 * h), rel=1e-8)
    assert complex(exact.s_s) == pytest.approx((chi(rho, s + h) - 2 * chi(rho, s) + chi(rho, s - h)) / h**2, rel=1e-4)


def test_d_times_f_times_chi_rho_is_fixed(static_closed):
    params, coeffs = static_closed.params, static_closed.coeffs
    s = s_values(static_closed)
    product = coeffs.d * f_multiplier(RHO, s, params, coeffs) * chi_derivatives(RHO, s, params, coeffs).rho
    expected = -1j / (2.0 * params.mass * static_closed.kappa)
    assert np.allclose(product, expected, rtol=1e-12)


def test_trigonometric_barred_coefficients(static_closed):
    coeffs = CoefficientSet(a=0.4 + 1.1j, b=-0.2 + 0.3j, d=0.9 - 0.4j, e=0.5 + 0.1j)
    closed = closed_form(coeffs, AnsatzParams(c5=0.1, c6=-0.2))
    s = np.linspace(0.1, 0.8, 5)
    direct = barred_coeffs(coeffs, f_multiplier(RHO[:5], s, closed.params, coeffs))
    trig = barred_coeffs_trig(RHO[:5], s, closed.params, coeffs)
    for name, value in direct.as_dict().items():
        assert np.allclose(trig.as_dict()[name], value, rtol=1e-12, atol=1e-14), name


def test_branch_is_enforced(static_closed):
    lo, hi = regular_s_interval(static_closed, margin=0.0)
    assert lo == pytest.approx(0.0, abs=1e-15)
    assert hi == pytest.approx(np.pi / (2 * 0.65))
    fh_of(s_values(static_closed), static_closed)
    with pytest.raises(DomainError) as info:
        fh_of(np.array([0.5, hi + 0.1]), static_closed)
    assert info.value.offending == [pytest.approx(hi + 0.1)]


def test_negative_density_is_rejected(static_closed):
    with pytest.raises(DensityError):
        chi_of(-0.1, 0.5, static_closed.params, static_closed.coeffs)


def test_static_solution_encodes_hbar_and_potential(static_closed):
    grid = Grid.of(t=(0.0, 1.0, 3), q=(0.0, 1.0, 3))
    rule, v = to_psi_v(static_closed, grid)
    hbar = 2.0 / 1.3
    assert float(rule.hbar) == pytest.approx(hbar)
    assert np.allclose(v.values, -(hbar**2) / 2.0 * 0.7)


@settings(deadline=None, max_examples=40)
@given(
    st.complex_numbers(min_magnitude=0.1, max_magnitude=10.0, allow_nan=False, allow_infinity=False),
    st.floats(min_value=0.2, max_value=3.0),
)
def test_static_chi_does_not_depend_on_d(d, r1):
    reference = solve_constraints_static(1.0, r1=r1, f=0.4)
    scaled = solve_constraints_static(d, r1=r1, f=0.4)
    s = s_values(reference)
    assert np.allclose(
        chi_of(RHO, s, scaled.params, scaled.coeffs),
        chi_of(RHO, s, reference.params, reference.coeffs),
        rtol=1e-10,
    )


def test_gauged_family_builds_on_any_grid():
    recipe = GaugedAnsatz(
        c5=lambda t, q: 0.2 * np.sin(q) * t,
        c6=lambda t, q: 0.1 * np.cos(q) + 0.05 * t,
        u_tilde=lambda t, q: 0.5 + 0.1 * t,
        h1=0.3,
    )
    for count in (9, 17):
        closed = recipe.build(Grid.of(t=(0.0, 1.0, count), q=(-1.0, 1.0, count)))
        assert closed.mode == "gauged"
        assert np.allclose(closed.coeffs.c1, 0.0)
        rule, v = to_psi_v(closed)
        assert np.allclose(rule.hbar, 1.0 / (0.5 + 0.1 * closed.grid.mesh()[0]))
        assert np.all(np.isfinite(v.values))


def test_gauged_scale_must_not_depend_on_position():
    recipe = GaugedAnsatz(u_tilde=lambda t, q: 0.5 + 0.1 * q)
    with pytest.raises(ConstraintError) as info:
        recipe.build(Grid.of(t=(0.0, 1.0, 5), q=(-1.0, 1.0, 5)))
    assert "u_tilde_q" in info.value.residuals


def test_modulus_of_chi_ignores_s_without_c1(rng):
    d = 0.8 - 0.6j
    closed = closed_form(CoefficientSet(a=1.2j * d, b=0.0, d=d, e=0.0))
    assert closed.coeffs.c1 == pytest.approx(0.0, abs=1e-15)
    s = rng.uniform(-10.0, 10.0, size=20)
    modulus = np.abs(chi_of(RHO[:, None], s[None, :], closed.params, closed.coeffs))
    assert np.all(np.ptp(modulus, axis=1) <= 1e-12 * modulus.max(axis=1))


def test_gauged_coefficients_follow_d():
    grid = Grid.of(t=(0.0, 1.0, 9), q=(-1.0, 1.0, 9))
    recipe = GaugedAnsatz(
        c5=lambda t, q: 0.2 * np.sin(q) * t,
        c6=lambda t, q: 0.1 * np.cos(q) + 0.05 * t,
        u_tilde=lambda t, q: 0.5 + 0.1 * t,
        h1=0.3,
    )
    unit = recipe.build(grid).coeffs
    for d in (2.0 - 1.0j, 0.3j, -1.5, 0.01 + 4.0j):
        coeffs = GaugedAnsatz(d=d, c5=recipe.c5, c6=recipe.c6, u_tilde=recipe.u_tilde, h1=recipe.h1).build(grid).coeffs
        for name in ("a", "b", "e"):
            assert np.allclose(getattr(coeffs, name) / coeffs.d, getattr(unit, name), rtol=1e-13, atol=1e-15)
