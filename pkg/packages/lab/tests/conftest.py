import numpy as np
import pytest

from madelung_lab.ansatz_core import solve_constraints_static
from madelung_lab.conditions import SamplePlan
from madelung_lab.grids_fields import Grid


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def spacetime_grid() -> Grid:
    return Grid.of(t=(0.0, 1.0, 17), q=(-1.0, 1.0, 17))


@pytest.fixture
def plan(spacetime_grid: Grid) -> SamplePlan:
    return SamplePlan.draw(spacetime_grid, seed=7)


@pytest.fixture
def static_closed():
    # f != 0 so the C3 perturbation is visible through the e-condition
    return solve_constraints_static(1.0 + 0.5j, r1=1.3, f=0.7, mass=1.0)
