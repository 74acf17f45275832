import numpy as np
import pytest

from madelung_lab.errors import DensityError, GridError, PhaseSingularityError
from madelung_lab.grids_fields import ComplexField, Grid, RealField, sample
from madelung_lab.madelung import (
    EmPotentials,
    MadelungPair,
    classical_hj_residual,
    continuity_residual,
    em_continuity_residual,
    em_qhj_residual,
    from_psi,
    qhj_residual,
    residual_summary,
    to_psi,
)


@pytest.fixture
def wave_grid() -> Grid:
    return Grid.of(t=(0.0, 0.5, 11), q=(-2.0, 2.0, 41))


def plane_wave(grid: Grid, k: float = 1.5, mass: float = 1.0, hbar: float = 1.0) -> MadelungPair:
    omega = hbar * k**2 / (2.0 * mass)
    rho = RealField.constant(grid, 0.25)
    s = sample(grid, lambda t, q: hbar * (k * q - omega * t))
    return MadelungPair(rho, s, mass, hbar)


def test_plane_wave_satisfies_both_equations(wave_grid):
    pair = plane_wave(wave_grid)
    v = RealField.constant(wave_grid, 0.0)
    assert residual_summary(continuity_residual(pair)).linf < 1e-12
    assert residual_summary(qhj_residual(pair, v)).linf < 1e-12
    assert residual_summary(classical_hj_residual(pair.s, v)).linf < 1e-12


def test_from_psi_recovers_action_up_to_whole_turns(wave_grid):
    rho = sample(wave_grid, lambda t, q: np.exp(-(q**2)) + 0.0 * t)
    s = sample(wave_grid, lambda t, q: 4.0 * q + q**2 - t)
    pair = from_psi(to_psi(MadelungPair(rho, s)))
    assert np.allclose(pair.rho.values, rho.values)
    offset = pair.s.values - s.values
    assert np.allclose(offset, offset.flat[0], atol=1e-9)
    assert offset.flat[0] / (2 * np.pi) == pytest.approx(round(offset.flat[0] / (2 * np.pi)), abs=1e-9)


def test_from_psi_reports_nodes():
    grid = Grid.of(q=(-1.0, 1.0, 5))
    psi = ComplexField(grid, [1.0, 1.0, 0.0, 1.0, 1.0])
    with pytest.raises(PhaseSingularityError) as info:
        from_psi(psi)
    assert info.value.node == (2,)


def test_negative_density_is_rejected(wave_grid):
    rho = sample(wave_grid, lambda t, q: q + 0.0 * t)
    with pytest.raises(DensityError):
        MadelungPair(rho, RealField.constant(wave_grid, 0.0))


def test_density_floor_can_be_masked(wave_grid):
    rho = sample(wave_grid, lambda t, q: np.where(np.abs(q) < 0.3, 0.0, 1.0) + 0.0 * t)
    pair = MadelungPair(rho, RealField.constant(wave_grid, 0.0))
    v = RealField.constant(wave_grid, 0.0)
    with pytest.raises(DensityError):
        qhj_residual(pair, v)
    masked = qhj_residual(pair, v, on_floor="mask")
    assert not np.any(masked.values[rho.values == 0.0])


def test_uniform_vector_potential_shifts_the_momentum(wave_grid):
    charge, c, k, a = 1.0, 1.0, 1.5, 0.4
    kinetic = k - charge * a / c
    omega = kinetic**2 / 2.0
    rho = RealField.constant(wave_grid, 0.25)
    s = sample(wave_grid, lambda t, q: k * q - omega * t)
    pair = MadelungPair(rho, s)
    em = EmPotentials(RealField.constant(wave_grid, 0.0), (RealField.constant(wave_grid, a),), charge, c)
    v = RealField.constant(wave_grid, 0.0)
    assert residual_summary(em_continuity_residual(pair, em)).linf < 1e-12
    assert residual_summary(em_qhj_residual(pair, em, v)).linf < 1e-12


def test_vector_potential_needs_one_component_per_axis(wave_grid):
    zero = RealField.constant(wave_grid, 0.0)
    with pytest.raises(GridError):
        EmPotentials(zero, (zero, zero))


def test_zero_charge_reduces_to_the_uncoupled_residuals(wave_grid):
    pair = MadelungPair(
        sample(wave_grid, lambda t, q: 1.0 + 0.3 * np.cos(q - t)),
        sample(wave_grid, lambda t, q: 0.7 * q**2 - 0.4 * t * q),
    )
    v = sample(wave_grid, lambda t, q: 0.5 * q**2 + 0.0 * t)
    em = EmPotentials(
        sample(wave_grid, lambda t, q: np.sin(q) * t),
        (sample(wave_grid, lambda t, q: 0.8 * q + t),),
        charge=0.0,
    )
    assert np.array_equal(em_continuity_residual(pair, em).values, continuity_residual(pair).values)
    assert np.array_equal(em_qhj_residual(pair, em, v).values, qhj_residual(pair, v).values)


def test_from_psi_anchors_at_the_largest_modulus():
    grid = Grid.of(q=(-2.0, 2.0, 81))
    q = grid.coordinates(0)
    psi = ComplexField(grid, np.exp(-((q - 0.5) ** 2)) * np.exp(1j * (4.0 * q + 1.0)))
    peak = int(np.argmax(np.abs(psi.values)))
    assert peak == 50
    pair = from_psi(psi)
    assert pair.s.values[peak] == pytest.approx(np.angle(psi.values[peak]), abs=1e-12)
    from_edge = from_psi(psi, anchor=(0,))
    assert from_edge.s.values[0] == pytest.approx(np.angle(psi.values[0]), abs=1e-12)
    # the two continuations differ by whole turns
    turns = (from_edge.s.values[peak] - pair.s.values[peak]) / (2.0 * np.pi)
    assert turns == pytest.approx(round(turns), abs=1e-9)
    assert round(turns) != 0
