import numpy as np
import pytest

from madelung_lab.errors import GridError, PathError
from madelung_lab.field_formats import save_binary, save_csv
from madelung_lab.gaugefield_geometry import (
    FieldTensor,
    FourPotential,
    axis_route,
    bianchi_residual,
    c5_path_integral,
    c5_physical,
    c6_extra_terms,
    c6_rejection_demo,
    compensate_action,
    constant_b,
    detour_route,
    eb_from_potentials,
    field_tensor,
    flux_line,
    four_potential_from_em,
    gauge_lambda,
    holonomy,
    load_tabulated,
    maxwell_homogeneous_residual,
    plane_wave,
    pure_gauge,
    stokes_check,
    zero_potential,
)
from madelung_lab.grids_fields import Grid, PathSpec, RealField, sample
from madelung_lab.madelung import EmPotentials

XY = (1, 2)


def cube(count: int) -> Grid:
    return Grid.of(t=(0.0, 1.0, count), x=(0.0, 1.0, count), y=(0.0, 1.0, count), z=(0.0, 1.0, count))


def test_uniform_field_obeys_stokes():
    loop = PathSpec.rectangle((0.0, -1.0, -1.0, 0.0), XY, (2.0, 1.5))
    result = stokes_check(constant_b(0.7), loop)
    assert result.loop_integral == pytest.approx(0.7 * 3.0, rel=1e-12)
    assert result.discrepancy < 1e-10
    assert result.plane == XY
    assert result.area == pytest.approx(3.0)


def test_reversed_loop_flips_both_sides():
    loop = PathSpec.loop([(0.0, 0.0, 0.0, 0.0), (0.0, 0.0, 1.0, 0.0), (0.0, 1.0, 1.0, 0.0), (0.0, 1.0, 0.0, 0.0)])
    result = stokes_check(constant_b(2.0), loop)
    assert result.loop_integral == pytest.approx(-2.0, rel=1e-12)
    assert result.surface_integral == pytest.approx(-2.0, rel=1e-12)


def test_flux_line_holonomy_is_the_enclosed_flux():
    pot = flux_line(1.3)
    around = PathSpec.rectangle((0.0, -1.0, -1.0, 0.0), XY, (2.0, 2.0))
    beside = PathSpec.rectangle((0.0, 1.0, 1.0, 0.0), XY, (1.0, 1.0))
    assert holonomy(pot, around, resolution=2048) == pytest.approx(1.3, abs=1e-5)
    assert holonomy(pot, beside, resolution=2048) == pytest.approx(0.0, abs=1e-5)


def test_flux_line_breaks_stokes_by_its_flux():
    result = stokes_check(flux_line(1.3), PathSpec.rectangle((0.0, -1.0, -1.0, 0.0), XY, (2.0, 2.0)), resolution=2048)
    assert result.surface_integral == pytest.approx(0.0, abs=1e-12)
    assert result.discrepancy == pytest.approx(1.3, abs=1e-5)


def with_gauge(pot: FourPotential, gauge: FourPotential) -> FourPotential:
    def add(f, g):
        return lambda *x: np.asarray(f(*x) if f else 0.0) + np.asarray(g(*x) if g else 0.0)

    components = tuple(add(f, g) for f, g in zip(pot.components, gauge.components))
    return FourPotential(components, pot.v0, core_radius=pot.core_radius, center=pot.center)


def test_added_gauge_leaves_the_holonomy_alone():
    pot = flux_line(1.3)
    gauged = with_gauge(pot, pure_gauge(0.8, (1.0, -0.5, 0.3), 1.7))
    around = PathSpec.rectangle((0.25, -1.0, -1.0, 0.0), XY, (2.0, 2.0))
    assert holonomy(gauged, around, resolution=2048) == pytest.approx(holonomy(pot, around, resolution=2048), abs=1e-6)


def test_pure_gauge_has_no_flux_through_a_loop():
    loop = PathSpec.rectangle((0.0, -1.0, -1.0, 0.0), XY, (2.0, 1.5))
    result = stokes_check(pure_gauge(0.8, (1.0, -0.5, 0.3), 1.7), loop, resolution=1024)
    assert result.surface_integral == pytest.approx(0.0, abs=1e-12)
    assert result.loop_integral == pytest.approx(0.0, abs=1e-6)
    assert result.discrepancy < 1e-6


def test_paths_must_keep_clear_of_the_core():
    pot = flux_line(1.0, core_radius=0.1)
    grazing = PathSpec(np.array([(0.0, -1.0, 0.05, 0.0), (0.0, 1.0, 0.05, 0.0)]))
    with pytest.raises(PathError):
        c5_path_integral(pot, grazing)


def test_paths_must_stay_inside_the_grid():
    pot = zero_potential(grid=cube(3))
    with pytest.raises(PathError):
        c5_path_integral(pot, PathSpec(np.array([(0.0, 0.0, 0.0, 0.0), (0.0, 1.5, 0.0, 0.0)])))
    with pytest.raises(PathError):
        c5_path_integral(pot, PathSpec(np.array([(0.0, 0.0), (1.0, 1.0)])))


def test_open_loop_has_no_holonomy():
    with pytest.raises(PathError):
        holonomy(constant_b(1.0), PathSpec(np.array([(0.0, 0.0, 0.0, 0.0), (0.0, 1.0, 0.0, 0.0)])))


def test_pure_gauge_integrates_to_the_gauge_function():
    strength, wavevector, frequency = 0.8, (1.0, -0.5, 0.3), 1.7
    pot = pure_gauge(strength, wavevector, frequency, v0=2.0)
    lam = gauge_lambda(strength, wavevector, frequency)
    start, end = np.zeros(4), np.array([0.5, 0.3, 0.2, 0.1])
    value = c5_path_integral(pot, PathSpec(np.vstack([start, end])), resolution=1024)
    assert value == pytest.approx(lam(*end) - lam(*start), abs=1e-6)
    tensor = field_tensor(pot, cube(5))
    for pair in tensor.components.values():
        assert np.max(np.abs(pair.values)) < 1e-12


def test_pure_gauge_tensor_converges_to_zero_with_differences():
    pot = pure_gauge(0.8, (1.0, -0.5, 0.3), 1.7, v0=2.0)
    errors = []
    for count in (9, 17):
        tensor = field_tensor(pot, cube(count), method="fd")
        errors.append(max(np.max(np.abs(c.interior_values())) for c in tensor.components.values()))
    assert errors[1] < errors[0] / 3.0


def test_bianchi_identity():
    pot = plane_wave(0.5, 2.0, v0=2.0)
    coarse, fine = (
        max(np.max(np.abs(r.interior_values())) for r in bianchi_residual(field_tensor(pot, cube(n))))
        for n in (9, 17)
    )
    assert fine < coarse / 3.0
    # difference operators along different axes commute, so the identity is exact
    for r in bianchi_residual(field_tensor(pot, cube(9), method="fd")):
        assert np.max(np.abs(r.values)) < 1e-10


def test_constructed_monopole_violates_both_residuals():
    grid = cube(9)
    zero = RealField.constant(grid, 0.0)
    x = sample(grid, lambda t, x, y, z: x + 0.0 * (t + y + z))
    tensor = FieldTensor.from_fields((zero, zero, zero), (x, zero, zero))
    div_b, faraday = maxwell_homogeneous_residual(tensor)
    assert np.allclose(div_b.values, 1.0)
    assert all(np.allclose(f.values, 0.0) for f in faraday)
    assert np.allclose(bianchi_residual(tensor)[0].values, 1.0)
    assert np.allclose(tensor.magnetic(1).values, x.values)
    assert np.allclose(tensor(2, 3).values, -tensor(3, 2).values)


def test_scaled_tensor_matches_physical_fields():
    grid = cube(7)
    phi = sample(grid, lambda t, x, y, z: np.sin(x) * y + t * z)
    a = tuple(
        sample(grid, fn)
        for fn in (
            lambda t, x, y, z: y * z + t,
            lambda t, x, y, z: np.cos(x) * t + 0.0 * (y + z),
            lambda t, x, y, z: x * y * t + 0.0 * z,
        )
    )
    charge, hbar, c = 2.0, 0.5, 3.0
    em = EmPotentials(phi, a, charge, c)
    electric, magnetic = eb_from_potentials(em)
    tensor = field_tensor(four_potential_from_em(phi, a, charge=charge, hbar=hbar, light_speed=c), method="fd")
    rate = charge / (hbar * c)
    for k in (1, 2, 3):
        assert np.allclose(tensor.electric(k).values, rate * electric[k - 1].values, atol=1e-12)
        assert np.allclose(tensor.magnetic(k).values, rate * magnetic[k - 1].values, atol=1e-12)


def test_planar_uniform_field():
    grid = Grid.of(x=(-1.0, 1.0, 11), y=(-1.0, 1.0, 11))
    a = (sample(grid, lambda x, y: -0.6 * y + 0.0 * x), sample(grid, lambda x, y: 0.6 * x + 0.0 * y))
    electric, magnetic = eb_from_potentials(EmPotentials(RealField.constant(grid, 0.0), a))
    assert len(electric) == 2 and len(magnetic) == 3
    assert np.allclose(magnetic[2].values, 1.2)
    assert np.allclose(magnetic[0].values, 0.0) and np.allclose(electric[0].values, 0.0)


def test_physical_phase_of_a_static_scalar_potential():
    path = PathSpec(np.array([(0.0, 0.0, 0.0, 0.0), (2.0, 0.0, 0.0, 0.0)]))
    c, c5 = c5_physical(lambda t, x, y, z: 0.5 + 0.0 * t, (None, None, None), path, charge=2.0, hbar=0.5, light_speed=4.0)
    # C = -c phi T
    assert c == pytest.approx(-4.0 * 0.5 * 2.0)
    assert c5 == pytest.approx(2.0 / (0.5 * 4.0) * c)


def test_tabulated_components_round_trip_through_files(tmp_path):
    grid = Grid.of(t=(0.0, 1.0, 3), x=(-1.0, 1.0, 9), y=(-1.0, 1.0, 9), z=(0.0, 1.0, 3))
    b = 0.9
    a1 = sample(grid, lambda t, x, y, z: -0.5 * b * y + 0.0 * (t + x + z))
    a2 = sample(grid, lambda t, x, y, z: 0.5 * b * x + 0.0 * (t + y + z))
    first = save_csv(a1, tmp_path / "a1.csv")
    save_binary(a2, tmp_path / "a2")
    pot = load_tabulated([None, first, tmp_path / "a2", None])
    assert pot.reference == (0.0, -1.0, -1.0, 0.0)
    loop = PathSpec.rectangle((0.5, -0.5, -0.5, 0.5), XY, (1.0, 1.0))
    assert holonomy(pot, loop) == pytest.approx(b, rel=1e-10)
    result = stokes_check(pot, loop, resolution=64)
    assert result.discrepancy < 1e-10


def test_tabulated_potential_needs_a_space_time_grid():
    with pytest.raises(GridError):
        four_potential_from_em(RealField.constant(Grid.of(x=(0.0, 1.0, 3)), 1.0), (None, None, None), charge=1.0)


def compensation_setup(flux: float, **kwargs):
    grid = Grid.of(t=(0.0, 1.0, 3), x=(-2.0, 2.0, 41), y=(-2.0, 2.0, 41), z=(0.0, 1.0, 3))
    pot = flux_line(flux, grid=grid)
    targets = [(0.0, 1.5, 1.5, 0.0), (0.0, 1.5, 0.5, 0.0)]
    routes = [detour_route((0.0, 1.5, -2.0, 0.0), (0.0, 1.5, 1.5, 0.0)), detour_route((0.0, -2.0, 1.5, 0.0), (0.0, 1.5, 1.5, 0.0))]
    return compensate_action(lambda t, x, y, z: 0.3 * x, pot, targets, routes, resolution=2048, **kwargs)


def test_quantized_flux_keeps_the_state_single_valued():
    report = compensation_setup(2.0 * np.pi, tolerance=1e-4)
    assert report.unique
    assert report.action_spread == pytest.approx(2.0 * np.pi, abs=1e-4)
    assert all(abs(abs(h) - 2.0 * np.pi) < 1e-4 for h in report.holonomies)


def test_unquantized_flux_is_reported_multivalued():
    report = compensation_setup(1.0, tolerance=1e-4)
    assert not report.unique
    assert report.phase_spread == pytest.approx(abs(np.exp(1j) - 1.0), abs=1e-4)
    assert report.routes == 2 and report.targets == 2
    assert report.worst_routes == (0, 1)


def test_axis_route_moves_one_axis_at_a_time():
    start, target = np.array([0.0, -2.0, -2.0, 0.0]), np.array([0.0, 1.5, 0.5, 0.0])
    x_first = axis_route(1)(start, target).waypoints
    y_first = axis_route(2)(start, target).waypoints
    assert np.array_equal(x_first, [[0.0, -2.0, -2.0, 0.0], [0.0, 1.5, -2.0, 0.0], [0.0, 1.5, 0.5, 0.0]])
    assert np.array_equal(y_first[1], [0.0, -2.0, 0.5, 0.0])
    assert axis_route(1)(start, start).waypoints.shape == (2, 4)


def test_compensation_needs_two_routes():
    with pytest.raises(PathError):
        compensate_action(lambda *c: 0.0, constant_b(1.0), [(0.0, 1.0, 1.0, 0.0)], [detour_route()])


@pytest.fixture
def line_grid() -> Grid:
    return Grid.of(t=(0.0, 1.0, 11), q=(-1.0, 1.0, 21))


def test_constant_c6_leaves_continuity_untouched(line_grid):
    rho_bar = RealField.constant(line_grid, 0.4)
    s_bar = sample(line_grid, lambda t, q: 1.5 * q - t)
    report = c6_rejection_demo(rho_bar, RealField.constant(line_grid, 0.25), s_bar)
    assert report.combined == 0.0
    assert not report.rejected


def test_c6_terms_for_linear_profiles(line_grid):
    rho_bar = RealField.constant(line_grid, 0.4)
    s_bar = sample(line_grid, lambda t, q: 1.5 * q - t)
    in_space = c6_extra_terms(rho_bar, sample(line_grid, lambda t, q: 0.2 * q + 0.0 * t), s_bar, mass=2.0)
    assert np.allclose(in_space.transport.values, -2.0 * 0.4 * (1.5 / 2.0) * 0.2)
    assert np.allclose(in_space.time.values, 0.0)
    in_time = c6_rejection_demo(rho_bar, sample(line_grid, lambda t, q: 0.3 * t + 0.0 * q), s_bar)
    assert in_time.time_term == pytest.approx(2.0 * 0.4 * 0.3)
    assert in_time.transport_term == pytest.approx(0.0, abs=1e-14)
    assert in_time.rejected


def test_c6_given_as_a_function_of_coordinates(line_grid):
    rho_bar = RealField.constant(line_grid, 0.4)
    s_bar = sample(line_grid, lambda t, q: 1.5 * q - t)

    def c6(t, q):
        return 0.3 * t + 0.2 * np.sin(q)

    assert c6_rejection_demo(rho_bar, c6, s_bar) == c6_rejection_demo(rho_bar, sample(line_grid, c6), s_bar)
    assert not c6_rejection_demo(rho_bar, lambda t, q: 0.25, s_bar).rejected


def test_c6_velocity_uses_the_kinetic_momentum(line_grid):
    rho_bar = RealField.constant(line_grid, 1.0)
    s_bar = sample(line_grid, lambda t, q: 1.5 * q + 0.0 * t)
    em = EmPotentials(RealField.constant(line_grid, 0.0), (RealField.constant(line_grid, 1.5),))
    terms = c6_extra_terms(rho_bar, sample(line_grid, lambda t, q: q + 0.0 * t), s_bar, em)
    assert np.allclose(terms.velocity[0].values, 0.0)
    assert np.allclose(terms.transport.values, 0.0)
