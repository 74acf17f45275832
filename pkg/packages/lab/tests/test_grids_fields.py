import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from madelung_lab.errors import GridError, PathError
from madelung_lab.grids_fields import (
    Grid,
    PathSpec,
    RealField,
    crop,
    diff,
    frozen_diff,
    interpolate,
    line_integral,
    sample,
    surface_integral,
)


def test_grid_layout_and_refinement():
    grid = Grid.of(t=(0.0, 1.0, 11), x=(-2.0, 2.0, 21))
    assert grid.shape == (11, 21)
    assert grid.has_time
    assert grid.spatial_axes == (1,)
    fine = grid.refine(2)
    assert fine.shape == (21, 41)
    assert fine.spacing("x") == pytest.approx(grid.spacing("x") / 2)
    assert np.allclose(fine.bounds(), grid.bounds())


def test_time_axis_must_come_first():
    with pytest.raises(GridError):
        Grid.of(x=(0.0, 1.0, 5), t=(0.0, 1.0, 5))


def test_axis_needs_three_nodes():
    with pytest.raises(GridError):
        Grid.of(x=(0.0, 1.0, 2))


def test_non_finite_values_rejected():
    grid = Grid.of(x=(0.0, 1.0, 5))
    with pytest.raises(GridError):
        RealField(grid, [0.0, 1.0, np.nan, 0.0, 0.0])


def test_diff_is_exact_on_quadratics():
    grid = Grid.of(x=(-1.0, 2.0, 13))
    field = sample(grid, lambda x: 3.0 * x**2 + 2.0 * x + 1.0)
    x = grid.coordinates("x")
    assert np.allclose(diff(field, "x").values, 6.0 * x + 2.0, atol=1e-10)
    assert np.allclose(diff(field, "x", 2).values, 6.0, atol=1e-8)


def test_diff_of_constant_is_exactly_zero():
    grid = Grid.of(t=(0.0, 1.0, 7), x=(0.0, 3.0, 9))
    field = RealField.constant(grid, 2.5)
    assert not np.any(diff(field, "t").values)
    assert not np.any(diff(field, "x", 2).values)


def test_diff_converges_at_second_order():
    errors = []
    for n in (21, 41, 81):
        grid = Grid.of(x=(0.0, 2.0, n))
        field = sample(grid, np.sin)
        errors.append(np.max(np.abs(diff(field, 0).values - np.cos(grid.coordinates(0)))))
    rates = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(rates > 1.8)


def test_frozen_diff_ignores_frozen_inputs():
    grid = Grid.of(x=(0.0, 1.0, 11))
    x = grid.coordinates("x")
    out = frozen_diff(lambda u, v: u * v, grid, "x", frozen={"u": x}, explicit={"v": x})
    # d/dx of u*v with u held at the node: u * dv/dx = x
    assert np.allclose(out.values, x, atol=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=25, deadline=None)
def test_diff_is_linear(alpha, beta):
    grid = Grid.of(x=(0.0, 1.0, 17))
    f = sample(grid, lambda x: np.sin(3.0 * x))
    g = sample(grid, lambda x: np.exp(x))
    lhs = diff(f * alpha + g * beta, 0).values
    rhs = alpha * diff(f, 0).values + beta * diff(g, 0).values
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_line_integral_of_rotation_field_gives_twice_area():
    loop = PathSpec.rectangle((0.0, 0.0), (0, 1), (2.0, 1.5))
    value = line_integral(loop, [lambda x, y: -y, lambda x, y: x], resolution=8)
    assert value == pytest.approx(2.0 * 3.0)


def test_line_integral_of_gradient_vanishes_on_loop():
    loop = PathSpec.loop([[0.0, 0.0], [1.0, 0.2], [0.4, 1.0]])
    value = line_integral(loop, [lambda x, y: 2 * x * y, lambda x, y: x**2], resolution=512)
    assert abs(value) < 1e-4


def test_tabulated_and_exact_integrands_agree_for_linear_fields():
    grid = Grid.of(x=(0.0, 1.0, 11), y=(0.0, 1.0, 11))
    ax = sample(grid, lambda x, y: 0.0 * x - 0.5 * y)
    ay = sample(grid, lambda x, y: 0.5 * x + 0.0 * y)
    loop = PathSpec.rectangle((0.1, 0.2), (0, 1), (0.5, 0.4))
    assert line_integral(loop, [ax, ay]) == pytest.approx(0.2, abs=1e-12)


def test_surface_integral_of_constant():
    value = surface_integral(lambda x, y: 2.0 + 0.0 * x, (0.0, 0.0), (0, 1), (2.0, 3.0), resolution=4)
    assert value == pytest.approx(12.0)


def test_open_path_must_not_claim_closure():
    with pytest.raises(PathError):
        PathSpec(np.array([[0.0, 0.0], [1.0, 0.0]]), closed=True)


def test_interpolation_outside_hull_fails():
    grid = Grid.of(x=(0.0, 1.0, 5))
    field = sample(grid, lambda x: x)
    with pytest.raises(PathError):
        interpolate(field, [[1.5]])


def test_crop_keeps_sub_box():
    grid = Grid.of(t=(0.0, 1.0, 11), x=(0.0, 1.0, 11))
    field = sample(grid, lambda t, x: t + x)
    sub = crop(field, x=(0.2, 0.6))
    assert sub.grid.shape == (11, 5)
    assert sub.grid.bounds()[1] == pytest.approx([0.2, 0.6])
    assert np.allclose(sub.values, field.values[:, 2:7])
