import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from madelung_lab.errors import GridError
from madelung_lab.generators import FAMILIES, child_seeds, make_generator
from madelung_lab.grids_fields import Grid, diff, sample


@pytest.mark.parametrize("family", FAMILIES)
def test_generators_are_resolution_independent(family, spacetime_grid, rng):
    gen = make_generator(family, spacetime_grid, rng)
    coarse = sample(spacetime_grid, gen)
    fine = sample(spacetime_grid.refine(2), gen)
    assert np.allclose(fine.values[::2, ::2], coarse.values, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("family", FAMILIES)
def test_positive_generators_stay_positive(family, spacetime_grid, rng):
    gen = make_generator(family, spacetime_grid, rng, amplitude=0.3, positive=True)
    assert np.all(sample(spacetime_grid.refine(4), gen).values > 0)


def test_random_smooth_fields_are_resolved(spacetime_grid, rng):
    # band-limited modes keep the second-order stencil in its asymptotic range
    gen = make_generator("random_smooth", spacetime_grid, rng)
    errors = []
    for grid in (spacetime_grid, spacetime_grid.refine(2)):
        reference = diff(sample(grid.refine(8), gen), "q").values[8:-1:8, 8:-1:8]
        errors.append(np.max(np.abs(diff(sample(grid, gen), "q").interior_values() - reference)))
    assert errors[1] < errors[0] / 3.0


def test_generator_axes_can_be_restricted(spacetime_grid, rng):
    gen = make_generator("polynomial", spacetime_grid, rng, axes=["q"])
    values = sample(spacetime_grid, gen).values
    assert np.allclose(values, values[:1, :])


def test_unknown_family(spacetime_grid, rng):
    with pytest.raises(GridError):
        make_generator("fourier", spacetime_grid, rng)


@settings(deadline=None, max_examples=25)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=1, max_value=8))
def test_child_seeds_are_reproducible(seed, count):
    first = child_seeds(seed, count)
    assert first == child_seeds(seed, count)
    assert len(set(first)) == count


def test_same_seed_same_field():
    grid = Grid.of(x=(0.0, 1.0, 9), y=(0.0, 2.0, 9))
    a = sample(grid, make_generator("gaussian", grid, np.random.default_rng(5)))
    b = sample(grid, make_generator("gaussian", grid, np.random.default_rng(5)))
    assert np.array_equal(a.values, b.values)
