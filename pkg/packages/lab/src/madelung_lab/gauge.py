"""
Madelung Lab - Gauge

Dressing transformations of the state function, the relation between the
dressed potential V~ and the mechanical potential V, and the minimal-coupling
substitution

    d/dq_k -> d/dq_k - i (e / hbar c) A_k        d/dt -> d/dt + i (e / hbar) phi

shared by the gauged solver and the gauged equation residual.

Dressing convention: the forward map multiplies by exp(C6 - i C5) / p, the
inverse map undoes it. With p = 1 it is the bare exp(C6 - i C5) factor.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import CoefficientError, GridError
from .grids_fields import ComplexField, Grid, RealField, diff
from .madelung import EmPotentials

logger = logging.getLogger(__name__)

Direction = Literal["forward", "inverse"]
PSource = Union[float, RealField, Callable[[NDArray], ArrayLike]]

# central-difference step for time derivatives of schedule callables
SCHEDULE_DELTA = 1e-6


def _broadcast_time(fn: Callable[[NDArray], ArrayLike], grid: Grid) -> NDArray[np.float64]:
    if not grid.has_time:
        raise GridError("a callable p(t) needs a grid with a time axis")
    t = grid.mesh(sparse=True)[0]
    return np.broadcast_to(np.asarray(fn(t), dtype=float), grid.shape)


@dataclass(frozen=True, eq=False)
class DressingFields:
    """C5, C6 sampled on a grid, and the amplitude field p."""

    c5: RealField
    c6: RealField
    p: PSource = 1.0

    def __post_init__(self) -> None:
        if self.c5.grid != self.c6.grid:
            raise GridError("C5 and C6 must share a grid")
        if isinstance(self.p, RealField) and self.p.grid != self.grid:
            raise GridError("p must live on the dressing grid")
        if np.any(self.p_values() <= 0):
            raise CoefficientError("p must be positive everywhere")

    @property
    def grid(self) -> Grid:
        return self.c5.grid

    def p_values(self) -> NDArray[np.float64]:
        if isinstance(self.p, RealField):
            return self.p.values
        if callable(self.p):
            return _broadcast_time(self.p, self.grid)
        return np.full(self.grid.shape, float(self.p))

    @classmethod
    def identity(cls, grid: Grid) -> DressingFields:
        zero = RealField.constant(grid, 0.0)
        return cls(zero, zero, 1.0)


def dress(chi: ComplexField, d: DressingFields, direction: Direction = "forward") -> ComplexField:
    if chi.grid != d.grid:
        raise GridError("state and dressing fields live on different grids")
    exponent = d.c6.values - 1j * d.c5.values
    p = d.p_values()
    if direction == "forward":
        return ComplexField(chi.grid, chi.values * np.exp(exponent) / p)
    if direction == "inverse":
        return ComplexField(chi.grid, chi.values * np.exp(-exponent) * p)
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def compose(outer: DressingFields, inner: DressingFields) -> DressingFields:
    """The single dressing equal to applying ``inner`` then ``outer``."""
    if outer.grid != inner.grid:
        raise GridError("dressings live on different grids")
    return DressingFields(
        outer.c5 + inner.c5,
        outer.c6 + inner.c6,
        RealField(outer.grid, outer.p_values() * inner.p_values()),
    )


def _potential_shift(d: DressingFields, mass: float) -> NDArray[np.float64]:
    grid = d.grid
    if not grid.has_time:
        raise GridError("the dressed potential needs a time axis for dC5/dt")
    bracket = np.zeros(grid.shape)
    for k in grid.spatial_axes:
        c6_q = diff(d.c6, k).values
        bracket += c6_q**2 - diff(d.c5, k).values ** 2 + diff(d.c6, k, 2).values
    p = d.p_values()
    return p**2 / (2.0 * mass) * bracket + p * diff(d.c5, 0).values


def v_tilde_of_v(v: RealField, d: DressingFields, m: float = 1.0) -> RealField:
    """V~ = V - (p^2/2m)[(C6_q)^2 - (C5_q)^2 + C6_qq] - p C5_t."""
    if v.grid != d.grid:
        raise GridError("potential and dressing fields must share a grid")
    return RealField(v.grid, v.values - _potential_shift(d, m))


def v_of_v_tilde(v_tilde: RealField, d: DressingFields, m: float = 1.0) -> RealField:
    if v_tilde.grid != d.grid:
        raise GridError("potential and dressing fields must share a grid")
    return RealField(v_tilde.grid, v_tilde.values + _potential_shift(d, m))


# --------------------------------------------------------------------------
# Time-dependent dressing for the solver
# --------------------------------------------------------------------------


def _constant_p(t: float) -> float:
    return 1.0


@dataclass(frozen=True, eq=False)
class DressingSchedule:
    """C5(t, q...), C6(t, q...) and p(t) as callables over a spatial grid.

    C5 and C6 receive the time followed by the sparse spatial mesh; p receives
    the time only. Time derivatives use a central difference of width
    2 * ``delta``; spatial derivatives use the grid stencils.
    """

    grid: Grid
    c5: Callable[..., ArrayLike] | None = None
    c6: Callable[..., ArrayLike] | None = None
    p: Callable[[float], float] = _constant_p
    delta: float = SCHEDULE_DELTA
    _mesh: tuple[NDArray, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.grid.has_time:
            raise GridError("a dressing schedule is defined over a spatial grid")
        object.__setattr__(self, "_mesh", self.grid.mesh(sparse=True))

    def _field(self, fn: Callable[..., ArrayLike] | None, t: float) -> NDArray[np.float64]:
        if fn is None:
            return np.zeros(self.grid.shape)
        return np.broadcast_to(np.asarray(fn(t, *self._mesh), dtype=float), self.grid.shape)

    def c5_at(self, t: float) -> RealField:
        return RealField(self.grid, self._field(self.c5, t))

    def c6_at(self, t: float) -> RealField:
        return RealField(self.grid, self._field(self.c6, t))

    def p_at(self, t: float) -> float:
        value = float(self.p(t))
        if not value > 0:
            raise CoefficientError(f"p({t}) = {value} is not positive")
        return value

    def c5_dot(self, t: float) -> NDArray[np.float64]:
        return (self._field(self.c5, t + self.delta) - self._field(self.c5, t - self.delta)) / (2.0 * self.delta)

    def c6_dot(self, t: float) -> NDArray[np.float64]:
        return (self._field(self.c6, t + self.delta) - self._field(self.c6, t - self.delta)) / (2.0 * self.delta)

    def p_dot(self, t: float) -> float:
        return (self.p(t + self.delta) - self.p(t - self.delta)) / (2.0 * self.delta)

    @property
    def is_trivial(self) -> bool:
        return self.c5 is None and self.c6 is None

    def to_fields(self, spacetime: Grid) -> DressingFields:
        """Sample the schedule on a (t, spatial...) grid matching its spatial axes."""
        if not spacetime.has_time or spacetime.axes[1:] != self.grid.axes:
            raise GridError("the space-time grid must be (t, *schedule axes)")
        t = spacetime.coordinates(0)
        c5 = np.stack([self._field(self.c5, ti) for ti in t])
        c6 = np.stack([self._field(self.c6, ti) for ti in t])
        p = np.broadcast_to(np.array([self.p_at(ti) for ti in t]).reshape((-1,) + (1,) * self.grid.ndim), spacetime.shape)
        return DressingFields(RealField(spacetime, c5), RealField(spacetime, c6), RealField(spacetime, p))

    def dress_at(self, chi: ComplexField, t: float, direction: Direction = "forward") -> ComplexField:
        """``forward`` maps the dressed chi to the plain solution chi e^(C6 - iC5)/p; ``inverse`` undoes it."""
        exponent = self._field(self.c6, t) - 1j * self._field(self.c5, t)
        p = self.p_at(t)
        if direction == "forward":
            return ComplexField(chi.grid, chi.values * np.exp(exponent) / p)
        return ComplexField(chi.grid, chi.values * np.exp(-exponent) * p)


def v_tilde_schedule(
    v: Callable[[float], ArrayLike] | ArrayLike | None,
    schedule: DressingSchedule,
    mass: float = 1.0,
) -> Callable[[float], NDArray[np.float64]]:
    """V~(t) on the schedule grid, from V(t) and the dressing schedule."""
    grid = schedule.grid

    def potential(t: float) -> NDArray[np.float64]:
        if v is None:
            base = np.zeros(grid.shape)
        elif callable(v):
            base = np.broadcast_to(np.asarray(v(t), dtype=float), grid.shape)
        else:
            base = np.broadcast_to(np.asarray(v, dtype=float), grid.shape)
        c5, c6 = schedule.c5_at(t), schedule.c6_at(t)
        bracket = np.zeros(grid.shape)
        for k in range(grid.ndim):
            bracket += diff(c6, k).values ** 2 - diff(c5, k).values ** 2 + diff(c6, k, 2).values
        p = schedule.p_at(t)
        return base - p**2 / (2.0 * mass) * bracket - p * schedule.c5_dot(t)

    return potential


# --------------------------------------------------------------------------
# Minimal coupling
# --------------------------------------------------------------------------


def _values_or_none(value: RealField | ArrayLike | None) -> NDArray[np.float64] | None:
    if value is None:
        return None
    if isinstance(value, RealField):
        return value.values
    return np.asarray(value, dtype=float)


@dataclass(frozen=True, eq=False)
class MinimalCoupling:
    """Substitution descriptor for the electromagnetic coupling.

    ``vector`` holds one component per spatial axis of the grid the coupling is
    applied on (None entries mean zero); ``scalar`` is phi. Values may be
    RealFields or plain arrays broadcastable to the grid.
    """

    charge: float = 0.0
    light_speed: float = 1.0
    hbar: float = 1.0
    vector: Sequence[RealField | ArrayLike | None] = ()
    scalar: RealField | ArrayLike | None = None

    def __post_init__(self) -> None:
        if not (self.light_speed > 0 and self.hbar > 0):
            raise ValueError("light_speed and hbar must be positive")
        object.__setattr__(self, "vector", tuple(self.vector))

    @property
    def spatial_rate(self) -> float:
        return self.charge / (self.hbar * self.light_speed)

    @property
    def temporal_rate(self) -> float:
        return self.charge / self.hbar

    def vector_component(self, k: int) -> NDArray[np.float64] | None:
        if k >= len(self.vector):
            return None
        return _values_or_none(self.vector[k])

    def scalar_values(self) -> NDArray[np.float64] | None:
        return _values_or_none(self.scalar)

    @property
    def is_identity(self) -> bool:
        if self.charge == 0:
            return True
        parts = [self.vector_component(k) for k in range(len(self.vector))] + [self.scalar_values()]
        return all(p is None or not np.any(p) for p in parts)

    def reversed(self) -> MinimalCoupling:
        """The same potentials with the opposite charge."""
        return MinimalCoupling(-self.charge, self.light_speed, self.hbar, self.vector, self.scalar)

    def covariant_derivative(self, psi: ComplexField, axis: int | str) -> ComplexField:
        grid = psi.grid
        k = grid.axis_index(axis)
        spatial = grid.spatial_axes
        if k not in spatial:
            raise GridError("covariant_derivative acts on spatial axes; use covariant_time_derivative for t")
        out = diff(psi, k).values
        a = self.vector_component(spatial.index(k))
        if a is not None and self.charge != 0:
            out = out - 1j * self.spatial_rate * a * psi.values
        return ComplexField(grid, out)

    def covariant_time_derivative(self, psi: ComplexField) -> ComplexField:
        grid = psi.grid
        if not grid.has_time:
            raise GridError("covariant_time_derivative needs a time axis")
        out = diff(psi, 0).values
        phi = self.scalar_values()
        if phi is not None and self.charge != 0:
            out = out + 1j * self.temporal_rate * phi * psi.values
        return ComplexField(grid, out)

    def covariant_laplacian(self, psi: ComplexField) -> ComplexField:
        total = np.zeros(psi.grid.shape, dtype=complex)
        for k in psi.grid.spatial_axes:
            total += self.covariant_derivative(self.covariant_derivative(psi, k), k).values
        return ComplexField(psi.grid, total)


def minimal_couple_operator(em: EmPotentials, hbar: float = 1.0) -> MinimalCoupling:
    """Descriptor for the potentials of ``em`` at the given hbar; zero charge gives the identity."""
    return MinimalCoupling(em.charge, em.light_speed, hbar, em.a, em.phi)
