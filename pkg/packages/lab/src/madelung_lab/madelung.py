"""
Madelung Lab - Madelung Variables

The (rho, S) <-> psi dictionary and residual evaluators for the classical
Hamilton-Jacobi equation, the continuity equation, the quantum
Hamilton-Jacobi equation and their electromagnetically coupled versions.

Conventions: psi = sqrt(rho) exp(iS/hbar); the quantum term uses the
Laplacian of sqrt(rho); all constants (m, hbar, e, c) are explicit.
Residuals are reported on the interior nodes only; the continuity law says
nothing about the domain boundary.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import trapezoid

from .errors import DensityError, GridError, PhaseSingularityError
from .grids_fields import ComplexField, Grid, RealField, diff, l2, linf
from .records import ResidualSummary

logger = logging.getLogger(__name__)

DENSITY_FLOOR = 1e-12
UNWRAP_THRESHOLD = 1e-12

OnFloor = Literal["raise", "mask"]


def _integrate(values: NDArray, grid: Grid) -> float:
    total = values
    for axis in reversed(grid.axes):
        total = trapezoid(total, axis.coordinates(), axis=-1)
    return float(total)


@dataclass(frozen=True, eq=False)
class MadelungPair:
    """Density and action on a shared grid."""

    rho: RealField
    s: RealField
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self) -> None:
        if self.rho.grid != self.s.grid:
            raise GridError("rho and S must share a grid")
        if not (self.mass > 0 and self.hbar > 0):
            raise ValueError(f"mass and hbar must be positive (m={self.mass}, hbar={self.hbar})")
        negative = np.argwhere(self.rho.values < 0)
        if negative.size:
            nodes = [tuple(int(i) for i in n) for n in negative[:5]]
            raise DensityError(f"negative density at {len(negative)} node(s), first {nodes[0]}", nodes)
        total = _integrate(self.rho.values, self.grid)
        if not (np.isfinite(total) and total > 0):
            raise DensityError(f"density integrates to {total}; expected a finite positive number")

    @property
    def grid(self) -> Grid:
        return self.rho.grid


@dataclass(frozen=True, eq=False)
class EmPotentials:
    """Scalar potential phi and one vector-potential component per spatial axis."""

    phi: RealField
    a: tuple[RealField, ...]
    charge: float = 1.0
    light_speed: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", tuple(self.a))
        grid = self.phi.grid
        if any(component.grid != grid for component in self.a):
            raise GridError("phi and A must share a grid")
        if len(self.a) != len(grid.spatial_axes):
            raise GridError(f"{len(self.a)} vector-potential components for {len(grid.spatial_axes)} spatial axes")
        if not self.light_speed > 0:
            raise ValueError("light_speed must be positive")

    @property
    def grid(self) -> Grid:
        return self.phi.grid

    @classmethod
    def zero(cls, grid: Grid, charge: float = 1.0, light_speed: float = 1.0) -> EmPotentials:
        zeros = RealField.constant(grid, 0.0)
        return cls(zeros, tuple(zeros for _ in grid.spatial_axes), charge, light_speed)


def to_psi(pair: MadelungPair) -> ComplexField:
    return ComplexField(pair.grid, np.sqrt(pair.rho.values) * np.exp(1j * pair.s.values / pair.hbar))


def _anchored_unwrap(phase: NDArray, axis: int, anchor: int) -> NDArray:
    moved = np.moveaxis(phase, axis, -1)
    forward = np.unwrap(moved[..., anchor:], axis=-1)
    backward = np.unwrap(moved[..., anchor::-1], axis=-1)[..., ::-1]
    return np.moveaxis(np.concatenate([backward[..., :-1], forward], axis=-1), -1, axis)


def from_psi(
    psi: ComplexField,
    hbar: float = 1.0,
    mass: float = 1.0,
    *,
    anchor: Sequence[int] | None = None,
    threshold: float = UNWRAP_THRESHOLD,
) -> MadelungPair:
    """Invert psi = sqrt(rho) exp(iS/hbar) with a loop-free phase continuation.

    The phase is continued from ``anchor`` (default: the node of largest
    |psi|) along the last axis first, then each earlier axis in turn, so every
    node is reached through exactly one path from the anchor.
    """
    grid = psi.grid
    modulus = np.abs(psi.values)
    low = np.argwhere(modulus <= threshold)
    if low.size:
        node = tuple(int(i) for i in low[0])
        raise PhaseSingularityError(node, grid.node_coordinates(node), float(modulus[node]))
    if anchor is None:
        anchor = np.unravel_index(int(np.argmax(modulus)), grid.shape)
    anchor = tuple(int(i) for i in anchor)
    phase = np.angle(psi.values)
    for k in reversed(range(grid.ndim)):
        phase = _anchored_unwrap(phase, k, anchor[k])
    return MadelungPair(RealField(grid, modulus**2), RealField(grid, hbar * phase), mass, hbar)


def _require_time(grid: Grid) -> None:
    if not grid.has_time:
        raise GridError("this residual needs a time axis 't' as the first axis")


def minimal_couple_s(
    ds_dq: Sequence[RealField],
    ds_dt: RealField,
    em: EmPotentials,
) -> tuple[tuple[RealField, ...], RealField]:
    """dS/dq_k - (e/c) A_k and dS/dt + e phi."""
    if ds_dt.grid != em.grid or any(g.grid != em.grid for g in ds_dq):
        raise GridError("action derivatives and potentials must share a grid")
    ratio = em.charge / em.light_speed
    spatial = tuple(RealField(em.grid, g.values - ratio * a.values) for g, a in zip(ds_dq, em.a))
    temporal = RealField(em.grid, ds_dt.values + em.charge * em.phi.values)
    return spatial, temporal


def _action_gradient(pair: MadelungPair) -> tuple[RealField, ...]:
    return tuple(diff(pair.s, k) for k in pair.grid.spatial_axes)


def _continuity(pair: MadelungPair, gradients: Sequence[RealField]) -> RealField:
    grid = pair.grid
    residual = diff(pair.rho, 0).values.copy()
    for k, grad in zip(grid.spatial_axes, gradients):
        flux = RealField(grid, pair.rho.values * grad.values / pair.mass)
        residual += diff(flux, k).values
    return RealField(grid, residual)


def density_floor_mask(pair: MadelungPair, floor: float = DENSITY_FLOOR) -> NDArray[np.bool_]:
    return pair.rho.values <= floor


def _quantum_hj(
    pair: MadelungPair,
    v: RealField,
    temporal: RealField,
    gradients: Sequence[RealField],
    on_floor: OnFloor,
) -> RealField:
    grid = pair.grid
    if v.grid != grid:
        raise GridError("potential and Madelung pair must share a grid")
    below = density_floor_mask(pair)
    if below.any():
        nodes = [tuple(int(i) for i in n) for n in np.argwhere(below)[:5]]
        if on_floor == "raise":
            raise DensityError(f"density at or below {DENSITY_FLOOR} at {int(below.sum())} node(s), first {nodes[0]}", nodes)
        logger.warning("masking %d node(s) with density below the floor", int(below.sum()))
    amplitude = RealField(grid, np.sqrt(pair.rho.values))
    laplacian = sum(diff(amplitude, k, 2).values for k in grid.spatial_axes)
    quantum = laplacian / np.where(below, 1.0, amplitude.values)
    kinetic = sum(g.values**2 for g in gradients) / (2.0 * pair.mass)
    residual = temporal.values + kinetic + v.values - pair.hbar**2 / (2.0 * pair.mass) * quantum
    return RealField(grid, np.where(below, 0.0, residual))


def continuity_residual(pair: MadelungPair) -> RealField:
    """d(rho)/dt + div(rho grad(S) / m) on every node."""
    _require_time(pair.grid)
    return _continuity(pair, _action_gradient(pair))


def qhj_residual(pair: MadelungPair, v: RealField, *, on_floor: OnFloor = "raise") -> RealField:
    """dS/dt + |grad S|^2/2m + V - (hbar^2/2m) lap(sqrt rho)/sqrt(rho)."""
    _require_time(pair.grid)
    return _quantum_hj(pair, v, diff(pair.s, 0), _action_gradient(pair), on_floor)


def classical_hj_residual(s: RealField, v: RealField, m: float = 1.0) -> RealField:
    grid = s.grid
    _require_time(grid)
    if v.grid != grid:
        raise GridError("action and potential must share a grid")
    kinetic = sum(diff(s, k).values ** 2 for k in grid.spatial_axes) / (2.0 * m)
    return RealField(grid, diff(s, 0).values + kinetic + v.values)


def em_continuity_residual(pair: MadelungPair, em: EmPotentials) -> RealField:
    """Continuity with the kinetic current (grad S - (e/c) A) rho / m."""
    _require_time(pair.grid)
    if em.grid != pair.grid:
        raise GridError("Madelung pair and potentials live on different grids")
    spatial, _ = minimal_couple_s(_action_gradient(pair), diff(pair.s, 0), em)
    return _continuity(pair, spatial)


def em_qhj_residual(pair: MadelungPair, em: EmPotentials, v: RealField, *, on_floor: OnFloor = "raise") -> RealField:
    _require_time(pair.grid)
    if em.grid != pair.grid:
        raise GridError("Madelung pair and potentials live on different grids")
    spatial, temporal = minimal_couple_s(_action_gradient(pair), diff(pair.s, 0), em)
    return _quantum_hj(pair, v, temporal, spatial, on_floor)


def residual_summary(
    residual: RealField,
    mask: NDArray[np.bool_] | None = None,
    *,
    interior: bool = True,
) -> ResidualSummary:
    """L-infinity / RMS of a residual, skipping masked nodes."""
    grid = residual.grid
    values = residual.values
    keep = np.ones(grid.shape, dtype=bool) if mask is None else ~mask
    if interior:
        edge = np.zeros(grid.shape, dtype=bool)
        edge[grid.interior()] = True
        keep &= edge
    selected = values[keep]
    return ResidualSummary(
        linf=linf(selected),
        l2=l2(selected),
        nodes=int(selected.size),
        masked_nodes=0 if mask is None else int(mask.sum()),
        interior_only=interior,
    )
