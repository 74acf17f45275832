"""
Madelung Lab - Solver

Crank-Nicolson time stepping for the linear equations of the lab on one or
two spatial axes:

    i hbar psi_t = -(hbar^2/2m) lap psi + V psi                 (step_cn)
    same with hbar -> p(t)                                       (step_p_of_t)
    i hbar psi_t = -(hbar^2/2m)(grad - i e A/hbar c)^2 psi
                   + (V + e phi) psi                             (step_gauged)
    the C5/C6-dressed equation with V~ and p(t)                  (step_dressed)

Time-dependent coefficients are evaluated at the step midpoint. The unknowns
are the interior nodes (reflecting walls, psi = 0 on the boundary) or nodes
0..n-2 of each axis (periodic, the last node repeats the first). One spatial
axis is solved with a cached sparse LU, two with GMRES.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal, Union
from weakref import WeakKeyDictionary

import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import quad, trapezoid
from scipy.sparse.linalg import SuperLU, gmres, splu

from .errors import GridError, SolverError
from .gauge import DressingSchedule, MinimalCoupling, v_tilde_schedule
from .grids_fields import TIME_AXIS, Axis, ComplexField, Grid, RealField, crop, diff
from .madelung import continuity_residual, from_psi, residual_summary
from .records import ResidualSummary

logger = logging.getLogger(__name__)

Boundary = Literal["reflecting", "periodic"]
PotentialSource = Union[None, ArrayLike, RealField, Callable[[float], ArrayLike]]

NORM_TOLERANCE = 1e-10
GMRES_TOLERANCE = 1e-12
GMRES_RESTART = 60
GMRES_MAXITER = 400


@dataclass(frozen=True, eq=False)
class GaugePotentials:
    """Vector and scalar potentials as callables of (t, *spatial mesh)."""

    vector: Sequence[Callable[..., ArrayLike] | None] = ()
    scalar: Callable[..., ArrayLike] | None = None
    charge: float = 1.0
    light_speed: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "vector", tuple(self.vector))
        if not self.light_speed > 0:
            raise SolverError("light_speed must be positive")

    def coupling(self, grid: Grid, t: float, hbar: float) -> MinimalCoupling:
        mesh = grid.mesh(sparse=True)

        def sampled(fn: Callable[..., ArrayLike] | None) -> NDArray | None:
            if fn is None:
                return None
            return np.broadcast_to(np.asarray(fn(t, *mesh), dtype=float), grid.shape)

        return MinimalCoupling(self.charge, self.light_speed, hbar, tuple(sampled(a) for a in self.vector), sampled(self.scalar))


@dataclass(frozen=True)
class EvolutionState:
    time: float
    psi: ComplexField


@dataclass(frozen=True, eq=False)
class EvolutionProblem:
    """Initial state, coefficients and discretization of one evolution run."""

    psi0: ComplexField
    dt: float
    potential: PotentialSource = None
    mass: float = 1.0
    hbar: float = 1.0
    boundary: Boundary = "reflecting"
    p_schedule: Callable[[float], float] | None = None
    em: GaugePotentials | None = None
    dressing: DressingSchedule | None = None
    normalized: bool = True

    def __post_init__(self) -> None:
        grid = self.grid
        if grid.has_time or grid.ndim not in (1, 2):
            raise GridError(f"evolution runs on 1 or 2 spatial axes, got {grid.names}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise SolverError(f"time step must be positive, got {self.dt}")
        if not (self.mass > 0 and self.hbar > 0):
            raise SolverError("mass and hbar must be positive")
        if self.boundary not in ("reflecting", "periodic"):
            raise SolverError(f"unknown boundary '{self.boundary}'")
        if self.dressing is not None and self.dressing.grid != grid:
            raise GridError("dressing schedule and initial state live on different grids")
        if self.normalized:
            norm = discrete_norm(self.psi0)
            if abs(norm - 1.0) > NORM_TOLERANCE:
                raise SolverError(f"initial state has norm {norm:.12f}; normalize it or pass normalized=False")
        h = min(grid.spacing(k) for k in range(grid.ndim))
        if self.dt > self.mass * h**2 / self.hbar:
            logger.warning("dt=%.3g exceeds m*dx^2/hbar=%.3g; expect visible dispersion error", self.dt, self.mass * h**2 / self.hbar)
        v = self.potential_at(0.0)
        if self.dt * float(np.max(np.abs(v))) / self.hbar > 0.5:
            logger.warning("dt*max|V|/hbar=%.3g > 0.5; phase accuracy will suffer", self.dt * float(np.max(np.abs(v))) / self.hbar)

    @property
    def grid(self) -> Grid:
        return self.psi0.grid

    @property
    def time_dependent(self) -> bool:
        return callable(self.potential) or self.p_schedule is not None or self.em is not None or self.dressing is not None

    def potential_at(self, t: float) -> NDArray[np.float64]:
        v = self.potential
        if v is None:
            return np.zeros(self.grid.shape)
        if isinstance(v, RealField):
            if v.grid != self.grid:
                raise GridError("potential and initial state live on different grids")
            return v.values
        if callable(v):
            v = v(t)
        return np.broadcast_to(np.asarray(v, dtype=float), self.grid.shape)

    def planck_at(self, t: float) -> float:
        if self.p_schedule is None:
            return self.hbar
        p = float(self.p_schedule(t))
        if not p > 0:
            raise SolverError(f"p(t) must stay positive; p({t:.6g}) = {p}")
        return p


# --------------------------------------------------------------------------
# Discrete operators
# --------------------------------------------------------------------------


def _unknown_slices(grid: Grid, boundary: Boundary) -> tuple[slice, ...]:
    if boundary == "periodic":
        return tuple(slice(0, -1) for _ in grid.axes)
    return grid.interior()


def _reduce(problem: EvolutionProblem, values: NDArray) -> NDArray:
    return np.asarray(values)[_unknown_slices(problem.grid, problem.boundary)]


def _expand(problem: EvolutionProblem, unknowns: NDArray) -> NDArray:
    if problem.boundary == "periodic":
        return np.pad(unknowns, [(0, 1)] * unknowns.ndim, mode="wrap")
    return np.pad(unknowns, 1)


def _shift(count: int, periodic: bool) -> sp.csr_matrix:
    shift = sp.eye(count, k=1, format="lil")
    if periodic:
        shift[count - 1, 0] = 1.0
    return shift.tocsr()


@dataclass(frozen=True, eq=False)
class _Operators:
    """Per-axis first and second differences on the unknown vector."""

    shape: tuple[int, ...]
    first: tuple[sp.csr_matrix, ...]
    second: tuple[sp.csr_matrix, ...]

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def identity(self) -> sp.csr_matrix:
        return sp.identity(self.size, dtype=complex, format="csr")

    def laplacian(self) -> sp.csr_matrix:
        return sum(self.second[1:], self.second[0])


def _embed(op: sp.spmatrix, k: int, shape: tuple[int, ...]) -> sp.csr_matrix:
    out = None
    for j, n in enumerate(shape):
        factor = op if j == k else sp.identity(n, format="csr")
        out = factor if out is None else sp.kron(out, factor, format="csr")
    return sp.csr_matrix(out)


@lru_cache(maxsize=32)
def _difference_operators(grid: Grid, boundary: Boundary) -> _Operators:
    periodic = boundary == "periodic"
    shape = np.empty(grid.shape)[_unknown_slices(grid, boundary)].shape
    first, second = [], []
    for k, n in enumerate(shape):
        h = grid.spacing(k)
        s = _shift(n, periodic)
        first.append(_embed((s - s.T) / (2.0 * h), k, shape))
        second.append(_embed((s + s.T - 2.0 * sp.identity(n)) / h**2, k, shape))
    return _Operators(shape, tuple(first), tuple(second))


def _operators(problem: EvolutionProblem) -> _Operators:
    return _difference_operators(problem.grid, problem.boundary)


def _diag(values: NDArray) -> sp.csr_matrix:
    return sp.diags(np.ravel(values), format="csr")


def _hamiltonian(
    problem: EvolutionProblem,
    t: float,
    hbar: float,
    coupling: MinimalCoupling | None = None,
    potential: NDArray | None = None,
) -> sp.csr_matrix:
    ops = _operators(problem)
    kinetic = -(hbar**2) / (2.0 * problem.mass)
    v = problem.potential_at(t) if potential is None else potential
    h = kinetic * ops.laplacian()
    if coupling is not None and not coupling.is_identity:
        rate = coupling.spatial_rate
        for k in range(len(ops.shape)):
            a = coupling.vector_component(k)
            if a is None or not np.any(a):
                continue
            a = _reduce(problem, np.broadcast_to(a, problem.grid.shape))
            diag_a = _diag(a)
            mixed = ops.first[k] @ diag_a + diag_a @ ops.first[k]
            h = h + kinetic * (-1j * rate * mixed - rate**2 * _diag(a**2))
        phi = coupling.scalar_values()
        if phi is not None and np.any(phi):
            v = v + coupling.charge * np.broadcast_to(phi, problem.grid.shape)
    return (h + _diag(_reduce(problem, v))).tocsc()


def _solve(problem: EvolutionProblem, lhs: sp.spmatrix, rhs: NDArray, guess: NDArray) -> NDArray:
    if problem.grid.ndim == 1:
        try:
            return splu(sp.csc_matrix(lhs)).solve(rhs)
        except RuntimeError as exc:
            raise SolverError(f"sparse LU failed: {exc}") from exc
    solution, info = gmres(lhs, rhs, x0=guess, rtol=GMRES_TOLERANCE, atol=0.0, restart=GMRES_RESTART, maxiter=GMRES_MAXITER)
    if info != 0:
        raise SolverError(f"GMRES did not reach rtol={GMRES_TOLERANCE} (info={info})")
    return solution


# factors live only as long as their problem
_STATIC_FACTORS: WeakKeyDictionary[EvolutionProblem, tuple[SuperLU, sp.csr_matrix]] = WeakKeyDictionary()


def _static_factor(problem: EvolutionProblem) -> tuple[SuperLU, sp.csr_matrix]:
    """LU of the left-hand CN matrix for problems with time-independent coefficients."""
    cached = _STATIC_FACTORS.get(problem)
    if cached is None:
        ops = _operators(problem)
        h = _hamiltonian(problem, 0.0, problem.hbar)
        factor = 1j * problem.dt / (2.0 * problem.hbar)
        cached = splu(sp.csc_matrix(ops.identity() + factor * h)), (ops.identity() - factor * h).tocsr()
        _STATIC_FACTORS[problem] = cached
    return cached


def _crank_nicolson(
    problem: EvolutionProblem,
    state: EvolutionState,
    hamiltonian: sp.spmatrix,
    planck: float,
) -> EvolutionState:
    ops = _operators(problem)
    u = _reduce(problem, state.psi.values).ravel()
    factor = 1j * problem.dt / (2.0 * planck)
    lhs = ops.identity() + factor * hamiltonian
    rhs = (ops.identity() - factor * hamiltonian) @ u
    new = _solve(problem, lhs, rhs, u)
    values = _expand(problem, new.reshape(ops.shape))
    return EvolutionState(state.time + problem.dt, ComplexField(problem.grid, values))


def _check_state(problem: EvolutionProblem, state: EvolutionState) -> None:
    if state.psi.grid != problem.grid:
        raise GridError("state and problem live on different grids")


# --------------------------------------------------------------------------
# Steppers
# --------------------------------------------------------------------------


def step_cn(problem: EvolutionProblem, state: EvolutionState) -> EvolutionState:
    """One Crank-Nicolson step of the plain equation with constant hbar."""
    _check_state(problem, state)
    if not callable(problem.potential) and problem.grid.ndim == 1:
        lu, rhs_matrix = _static_factor(problem)
        ops = _operators(problem)
        u = _reduce(problem, state.psi.values).ravel()
        try:
            new = lu.solve(rhs_matrix @ u)
        except RuntimeError as exc:
            raise SolverError(f"sparse LU solve failed: {exc}") from exc
        values = _expand(problem, new.reshape(ops.shape))
        return EvolutionState(state.time + problem.dt, ComplexField(problem.grid, values))
    mid = state.time + 0.5 * problem.dt
    return _crank_nicolson(problem, state, _hamiltonian(problem, mid, problem.hbar), problem.hbar)


def step_p_of_t(problem: EvolutionProblem, state: EvolutionState, *, amplitude_form: bool = False) -> EvolutionState:
    """One step with hbar replaced by p(t) at the midpoint.

    ``amplitude_form=True`` integrates the equation that still carries the
    imaginary dp/dt term; that term is applied exactly as the factor
    p(t + dt) / p(t).
    """
    _check_state(problem, state)
    mid = state.time + 0.5 * problem.dt
    p = problem.planck_at(mid)
    nxt = _crank_nicolson(problem, state, _hamiltonian(problem, mid, p), p)
    if amplitude_form:
        ratio = problem.planck_at(state.time + problem.dt) / problem.planck_at(state.time)
        nxt = EvolutionState(nxt.time, ComplexField(problem.grid, nxt.psi.values * ratio))
    return nxt


def step_gauged(problem: EvolutionProblem, state: EvolutionState) -> EvolutionState:
    """One step of the minimally coupled equation."""
    _check_state(problem, state)
    if problem.em is None:
        raise SolverError("step_gauged needs electromagnetic potentials on the problem")
    mid = state.time + 0.5 * problem.dt
    p = problem.planck_at(mid)
    coupling = problem.em.coupling(problem.grid, mid, p)
    return _crank_nicolson(problem, state, _hamiltonian(problem, mid, p, coupling), p)


def step_dressed(problem: EvolutionProblem, state: EvolutionState) -> EvolutionState:
    """One step of the dressed equation in the variables (V~, C5, C6, p).

    The state is the dressed chi. ``schedule.dress_at(chi, t, "forward")``
    gives a solution of the plain equation with the mechanical potential V,
    so a run starts from the plain state mapped with ``"inverse"``.
    """
    _check_state(problem, state)
    schedule = problem.dressing
    if schedule is None:
        raise SolverError("step_dressed needs a dressing schedule on the problem")
    mid = state.time + 0.5 * problem.dt
    p = schedule.p_at(mid)
    m = problem.mass
    ops = _operators(problem)
    c5, c6 = schedule.c5_at(mid), schedule.c6_at(mid)
    v_tilde = v_tilde_schedule(problem.potential_at, schedule, problem.mass)(mid)
    operator = _hamiltonian(problem, mid, p, potential=v_tilde)
    twist = np.zeros(problem.grid.shape)
    for k in range(problem.grid.ndim):
        c5_q, c6_q = diff(c5, k).values, diff(c6, k).values
        g = _reduce(problem, c6_q - 1j * c5_q)
        operator = operator - (p**2 / m) * (_diag(g) @ ops.first[k])
        twist = twist + 2.0 * c5_q * c6_q + diff(c5, k, 2).values
    damping = -1j * p * (-schedule.p_dot(mid) / p + schedule.c6_dot(mid)) + 1j * p**2 / (2.0 * m) * twist
    operator = operator + _diag(_reduce(problem, damping))
    return _crank_nicolson(problem, state, operator.tocsc(), p)


Stepper = Callable[[EvolutionProblem, EvolutionState], EvolutionState]


def select_stepper(problem: EvolutionProblem) -> tuple[str, Stepper]:
    if problem.dressing is not None:
        return "dressed", step_dressed
    if problem.em is not None:
        return "gauged", step_gauged
    if problem.p_schedule is not None:
        return "p_of_t", step_p_of_t
    return "cn", step_cn


# --------------------------------------------------------------------------
# Diagnostics
# --------------------------------------------------------------------------


def _integral(values: NDArray, grid: Grid) -> float:
    total = values
    for axis in reversed(grid.axes):
        total = trapezoid(total, axis.coordinates(), axis=-1)
    return float(total)


def discrete_norm(psi: ComplexField) -> float:
    """Trapezoid integral of |psi|^2 over every axis."""
    return _integral(np.abs(psi.values) ** 2, psi.grid)


def energy(problem: EvolutionProblem, psi: ComplexField, t: float = 0.0) -> float:
    """<psi|H|psi> / <psi|psi> on the unknown nodes."""
    u = _reduce(problem, psi.values).ravel()
    coupling = problem.em.coupling(problem.grid, t, problem.planck_at(t)) if problem.em is not None else None
    h = _hamiltonian(problem, t, problem.planck_at(t), coupling)
    weight = float(np.vdot(u, u).real)
    if weight == 0:
        raise SolverError("energy of a vanishing state")
    return float(np.vdot(u, h @ u).real / weight)


def expectation(psi: ComplexField, axis: int | str = 0) -> float:
    """<q_axis> under the normalized density |psi|^2."""
    grid = psi.grid
    k = grid.axis_index(axis)
    coord = grid.mesh(sparse=True)[k]
    density = np.abs(psi.values) ** 2
    return _integral(coord * density, grid) / _integral(density, grid)


@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    """Snapshots and per-step diagnostics of one run."""

    times: NDArray[np.float64]
    snapshots: tuple[ComplexField, ...]
    norms: NDArray[np.float64]
    energies: NDArray[np.float64] | None = None
    continuity: ResidualSummary | None = None
    labels: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if np.any(np.diff(self.times) <= 0):
            raise SolverError("snapshot times must increase strictly")

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms - self.norms[0])) / self.norms[0])

    @property
    def energy_drift(self) -> float | None:
        if self.energies is None:
            return None
        scale = max(abs(float(self.energies[0])), 1e-300)
        return float(np.max(np.abs(self.energies - self.energies[0])) / scale)

    @property
    def final(self) -> ComplexField:
        return self.snapshots[-1]


def trace_field(trace: EvolutionTrace) -> ComplexField:
    """Snapshots stacked on a (t, spatial...) grid; snapshots must be evenly spaced."""
    times = trace.times
    if times.size < 3:
        raise GridError("a space-time field needs at least 3 snapshots")
    steps = np.diff(times)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(float(times[-1]))):
        raise GridError("snapshots are not evenly spaced in time")
    spatial = trace.snapshots[0].grid
    grid = Grid((Axis(TIME_AXIS, float(times[-1] - times[0]), int(times.size), float(times[0])),) + spatial.axes)
    return ComplexField(grid, np.stack([s.values for s in trace.snapshots]))


def evolve(
    problem: EvolutionProblem,
    horizon: float,
    snapshot_every: int = 1,
    *,
    continuity_window: Mapping[str, tuple[float, float]] | None = None,
    stepper: Stepper | None = None,
) -> EvolutionTrace:
    """Step from t = 0 to ``horizon`` recording every ``snapshot_every``-th state.

    With ``continuity_window`` the continuity residual of the Madelung pair of
    the stacked snapshots is summarized inside that sub-box.
    """
    if snapshot_every < 1:
        raise SolverError("snapshot_every must be >= 1")
    steps = int(round(horizon / problem.dt))
    if steps < 0 or abs(steps * problem.dt - horizon) > 1e-9 * max(1.0, abs(horizon)):
        raise SolverError(f"horizon {horizon} is not a non-negative multiple of dt={problem.dt}")
    name, chosen = select_stepper(problem) if stepper is None else (getattr(stepper, "__name__", "custom"), stepper)
    track_energy = not problem.time_dependent
    state = EvolutionState(0.0, problem.psi0)
    times, snapshots = [0.0], [problem.psi0]
    norms = [discrete_norm(problem.psi0)]
    energies = [energy(problem, problem.psi0)] if track_energy else None
    logger.debug("evolving %d step(s) with the %s stepper", steps, name)
    for n in range(1, steps + 1):
        state = chosen(problem, state)
        state = EvolutionState(n * problem.dt, state.psi)
        norms.append(discrete_norm(state.psi))
        if n % snapshot_every == 0:
            times.append(state.time)
            snapshots.append(state.psi)
            if energies is not None:
                energies.append(energy(problem, state.psi))
    labels = {
        "stepper": name,
        "planck": _planck_label(problem, horizon),
        "boundary": problem.boundary,
    }
    trace = EvolutionTrace(np.array(times), tuple(snapshots), np.array(norms),
                           None if energies is None else np.array(energies), None, labels)
    if continuity_window is not None:
        trace = EvolutionTrace(trace.times, trace.snapshots, trace.norms, trace.energies,
                               continuity_summary(trace, problem, continuity_window), labels)
    return trace


def _planck_label(problem: EvolutionProblem, horizon: float) -> str:
    samples = np.linspace(0.0, horizon, 5)
    if problem.dressing is not None:
        values = [problem.dressing.p_at(t) for t in samples]
    else:
        values = [problem.planck_at(t) for t in samples]
    return "time-dependent" if max(values) != min(values) else "constant"


def continuity_summary(
    trace: EvolutionTrace,
    problem: EvolutionProblem,
    window: Mapping[str, tuple[float, float]],
) -> ResidualSummary:
    """Interior continuity residual of from_psi(snapshots) inside ``window``."""
    field_ = crop(trace_field(trace), **window)
    pair = from_psi(field_, hbar=problem.hbar, mass=problem.mass)
    return residual_summary(continuity_residual(pair))


def single_mode_phase(problem: EvolutionProblem, mode: int, horizon: float) -> float:
    """Phase a periodic plane wave of ``mode`` gains by ``horizon``.

    The wave is an eigenvector of the discrete Laplacian with eigenvalue
    lambda, so under the p(t) equation its phase is -lambda/(2m) times the
    integral of p, taken here by adaptive quadrature. Crank-Nicolson runs
    approach it as O(dt^2).
    """
    grid = problem.grid
    if grid.ndim != 1 or problem.boundary != "periodic":
        raise SolverError("single-mode phases are defined on one periodic axis")
    h = grid.spacing(0)
    k = 2.0 * np.pi * mode / grid.axes[0].extent
    eigenvalue = (2.0 - 2.0 * np.cos(k * h)) / h**2
    integral, _ = quad(problem.planck_at, 0.0, horizon, limit=200)
    return float(-eigenvalue / (2.0 * problem.mass) * integral)
