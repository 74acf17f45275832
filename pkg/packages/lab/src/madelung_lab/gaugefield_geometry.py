"""
Madelung Lab - Gauge-Field Geometry

Non-integrable phases on (t, x, y, z): path integrals of a four-potential,
loop holonomies, the field tensor F_mu_nu = d_mu A_nu - d_nu A_mu, Stokes and
Bianchi checks, the homogeneous Maxwell residuals, physical E and B, the
compensated action S-bar = S + hbar C5, and the demonstration that a C6
coupling breaks the continuity equation.

Coordinates are x_0 = v0 t, x_1..x_3 = x, y, z. Paths and grids list points in
(t, x, y, z) order, so a path integral is

    C5 = integral of (v0 A_0 dt + A_1 dx + A_2 dy + A_3 dz).

The physical potentials enter only through :func:`four_potential_from_em`:
A_0 = -(e / hbar c) phi, A_k = (e / hbar c) A_k, v0 = c.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import GridError, PathError
from .field_formats import load_binary, load_csv
from .grids_fields import Grid, PathSpec, RealField, diff, evaluate, line_integral, sample, surface_integral
from .madelung import EmPotentials
from .records import Record

logger = logging.getLogger(__name__)

Component = Union[Callable[..., ArrayLike], RealField, None]
Gradient = Callable[[int, int], Callable[..., ArrayLike]]
Method = Literal["auto", "analytic", "fd"]

SPACETIME = ("t", "x", "y", "z")
# unordered index pairs stored by FieldTensor
PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
CORE_CLEARANCE_CELLS = 2


def _zero(*coords: NDArray) -> NDArray:
    return np.zeros(np.broadcast(*coords).shape)


@dataclass(frozen=True, eq=False)
class FourPotential:
    """Four components A_0..A_3, each a callable of (t, x, y, z) or a tabulated field.

    ``gradient(mu, lam)`` (optional) returns a callable for dA_mu/dx_lam with
    x_0 = v0 t. Flux-line potentials carry a ``core_radius`` around the
    (x, y) point ``center``; the potential vanishes inside it.
    """

    components: tuple[Component, Component, Component, Component]
    v0: float = 1.0
    reference: tuple[float, ...] | None = None
    gradient: Gradient | None = None
    core_radius: float = 0.0
    center: tuple[float, float] = (0.0, 0.0)
    grid: Grid | None = None
    name: str = "custom"

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if len(comps) != 4:
            raise GridError(f"a four-potential has 4 components, got {len(comps)}")
        if not self.v0 > 0:
            raise ValueError(f"v0 must be positive, got {self.v0}")
        tabulated = [c for c in comps if isinstance(c, RealField)]
        grid = self.grid
        for c in tabulated:
            if grid is None:
                grid = c.grid
            elif c.grid != grid:
                raise GridError("tabulated components must share one grid")
        if grid is not None and grid.ndim != 4:
            raise GridError(f"four-potentials live on (t, x, y, z) grids, got {grid.names}")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "grid", grid)
        if self.reference is None:
            corner = tuple(float(b) for b in grid.bounds()[:, 0]) if grid is not None else (0.0,) * 4
            object.__setattr__(self, "reference", corner)

    @property
    def analytic(self) -> bool:
        return self.gradient is not None

    def at(self, mu: int, points: NDArray) -> NDArray[np.float64]:
        return evaluate(self.components[mu], points)


# --------------------------------------------------------------------------
# Generators
# --------------------------------------------------------------------------


def zero_potential(v0: float = 1.0, grid: Grid | None = None) -> FourPotential:
    return FourPotential((None, None, None, None), v0, gradient=lambda mu, lam: _zero, grid=grid, name="zero")


def constant_b(b: float, v0: float = 1.0, grid: Grid | None = None) -> FourPotential:
    """Uniform field B along z: A = (0, -B y/2, B x/2, 0)."""

    def a1(t, x, y, z):
        return -0.5 * b * np.asarray(y) + 0.0 * x

    def a2(t, x, y, z):
        return 0.5 * b * np.asarray(x) + 0.0 * y

    def gradient(mu: int, lam: int) -> Callable[..., ArrayLike]:
        value = {(1, 2): -0.5 * b, (2, 1): 0.5 * b}.get((mu, lam), 0.0)
        return lambda *coords: np.full(np.broadcast(*coords).shape, value)

    return FourPotential((None, a1, a2, None), v0, gradient=gradient, grid=grid, name="constant_b")


def flux_line(
    flux: float,
    core_radius: float = 0.1,
    center: tuple[float, float] = (0.0, 0.0),
    v0: float = 1.0,
    grid: Grid | None = None,
) -> FourPotential:
    """Thin solenoid along z: A = flux/(2 pi) (-y', x') / r'^2 outside the core."""
    scale = flux / (2.0 * np.pi)
    cx, cy = center

    def parts(x, y):
        dx, dy = np.asarray(x) - cx, np.asarray(y) - cy
        r2 = dx**2 + dy**2
        outside = r2 > core_radius**2
        safe = np.where(outside, r2, 1.0)
        return dx, dy, safe, outside

    def a1(t, x, y, z):
        dx, dy, r2, outside = parts(x, y)
        return np.where(outside, -scale * dy / r2, 0.0)

    def a2(t, x, y, z):
        dx, dy, r2, outside = parts(x, y)
        return np.where(outside, scale * dx / r2, 0.0)

    def gradient(mu: int, lam: int) -> Callable[..., ArrayLike]:
        def derivative(t, x, y, z):
            dx, dy, r2, outside = parts(x, y)
            if (mu, lam) == (1, 1):
                value = 2.0 * scale * dx * dy / r2**2
            elif (mu, lam) == (1, 2):
                value = -scale * (dx**2 - dy**2) / r2**2
            elif (mu, lam) == (2, 1):
                value = scale * (dy**2 - dx**2) / r2**2
            elif (mu, lam) == (2, 2):
                value = -2.0 * scale * dx * dy / r2**2
            else:
                value = np.zeros_like(dx, dtype=float)
            shape = np.broadcast(t, x, y, z).shape
            return np.broadcast_to(np.where(outside, value, 0.0), shape)

        return derivative

    return FourPotential((None, a1, a2, None), v0, gradient=gradient, core_radius=core_radius,
                         center=(float(cx), float(cy)), grid=grid, name="flux_line")


def plane_wave(amplitude: float, wavenumber: float, v0: float = 1.0, grid: Grid | None = None) -> FourPotential:
    """A_2 = a cos(k x - k v0 t): a transverse wave moving along x."""
    k = wavenumber

    def a2(t, x, y, z):
        return amplitude * np.cos(k * np.asarray(x) - k * v0 * np.asarray(t)) + 0.0 * y + 0.0 * z

    def gradient(mu: int, lam: int) -> Callable[..., ArrayLike]:
        if mu != 2 or lam not in (0, 1):
            return _zero
        sign = 1.0 if lam == 0 else -1.0

        def derivative(t, x, y, z):
            phase = k * np.asarray(x) - k * v0 * np.asarray(t)
            return np.broadcast_to(sign * amplitude * k * np.sin(phase), np.broadcast(t, x, y, z).shape)

        return derivative

    return FourPotential((None, None, a2, None), v0, gradient=gradient, grid=grid, name="plane_wave")


def pure_gauge(
    strength: float,
    wavevector: Sequence[float],
    frequency: float,
    v0: float = 1.0,
    grid: Grid | None = None,
) -> FourPotential:
    """A_mu = d Lambda / d x_mu for Lambda = s sin(k . r - omega t)."""
    w = np.array([-frequency / v0, *wavevector], dtype=float)
    if w.size != 4:
        raise GridError("pure_gauge needs a 3-component wavevector")

    def phase(t, x, y, z):
        return w[1] * np.asarray(x) + w[2] * np.asarray(y) + w[3] * np.asarray(z) - frequency * np.asarray(t)

    def component(mu: int) -> Callable[..., ArrayLike]:
        return lambda t, x, y, z: strength * w[mu] * np.cos(phase(t, x, y, z))

    def gradient(mu: int, lam: int) -> Callable[..., ArrayLike]:
        return lambda t, x, y, z: -strength * w[mu] * w[lam] * np.sin(phase(t, x, y, z))

    return FourPotential(tuple(component(mu) for mu in range(4)), v0, gradient=gradient, grid=grid, name="pure_gauge")


def gauge_lambda(strength: float, wavevector: Sequence[float], frequency: float) -> Callable[..., NDArray]:
    """The Lambda(t, x, y, z) whose gradient :func:`pure_gauge` returns."""
    k = np.asarray(wavevector, dtype=float)

    def lam(t, x, y, z):
        return strength * np.sin(k[0] * np.asarray(x) + k[1] * np.asarray(y) + k[2] * np.asarray(z) - frequency * np.asarray(t))

    return lam


def tabulated(components: Sequence[RealField | None], v0: float = 1.0, reference: tuple[float, ...] | None = None) -> FourPotential:
    """Potential sampled on a (t, x, y, z) grid; derivatives by finite differences."""
    comps = tuple(components)
    if not any(isinstance(c, RealField) for c in comps):
        raise GridError("a tabulated potential needs at least one sampled component")
    return FourPotential(comps, v0, reference=reference, name="tabulated")  # type: ignore[arg-type]


def load_tabulated(sources: Sequence[str | Path | None], v0: float = 1.0) -> FourPotential:
    """Read components written by the field-file formats (``.csv`` or binary stem)."""
    comps: list[RealField | None] = []
    for source in sources:
        if source is None:
            comps.append(None)
            continue
        path = Path(source)
        loaded = load_csv(path) if path.suffix == ".csv" else load_binary(path)
        if not isinstance(loaded, RealField):
            raise GridError(f"{path}: potential components must be real fields")
        comps.append(loaded)
    return tabulated(comps, v0)


def four_potential_from_em(
    phi: Component,
    a: Sequence[Component],
    *,
    charge: float,
    hbar: float = 1.0,
    light_speed: float = 1.0,
    grid: Grid | None = None,
) -> FourPotential:
    """Scaled four-potential of physical (phi, A): A_0 = -(e/hbar c) phi, A_k = (e/hbar c) A_k, v0 = c."""
    if len(a) != 3:
        raise GridError("the physical vector potential needs 3 components")
    rate = charge / (hbar * light_speed)

    def scaled(c: Component, factor: float) -> Component:
        if c is None:
            return None
        if isinstance(c, RealField):
            return c * factor
        return lambda *coords: factor * np.asarray(c(*coords), dtype=float)

    comps = (scaled(phi, -rate), *(scaled(c, rate) for c in a))
    return FourPotential(comps, light_speed, grid=grid, name="physical")  # type: ignore[arg-type]


# --------------------------------------------------------------------------
# Path integrals
# --------------------------------------------------------------------------


def _check_path(pot: FourPotential, path: PathSpec, resolution: int) -> None:
    if path.ndim != 4:
        raise PathError(f"paths live in (t, x, y, z); got {path.ndim} coordinates")
    points, _ = path.quadrature(resolution)
    if pot.grid is not None:
        bounds = pot.grid.bounds()
        slack = 1e-12 * (bounds[:, 1] - bounds[:, 0])
        outside = np.any((points < bounds[:, 0] - slack) | (points > bounds[:, 1] + slack), axis=1)
        if np.any(outside):
            first = points[np.flatnonzero(outside)[0]]
            raise PathError(f"path point {tuple(float(x) for x in first)} lies outside the grid hull")
    if pot.core_radius > 0:
        cell = 0.0 if pot.grid is None else max(pot.grid.spacing(1), pot.grid.spacing(2))
        clearance = pot.core_radius + CORE_CLEARANCE_CELLS * cell
        r = np.hypot(points[:, 1] - pot.center[0], points[:, 2] - pot.center[1])
        if np.any(r < clearance):
            raise PathError(f"path passes within {float(r.min()):.3g} of the flux line (clearance {clearance:.3g})")


def c5_path_integral(pot: FourPotential, path: PathSpec, resolution: int = 256) -> float:
    """C5 along ``path``: the line integral of (v0 A_0, A_1, A_2, A_3) in (t, x, y, z)."""
    _check_path(pot, path, resolution)
    temporal = pot.components[0]
    time_part: Component = None
    if isinstance(temporal, RealField):
        time_part = temporal * pot.v0
    elif temporal is not None:

        def time_part(*coords: NDArray) -> NDArray:
            return pot.v0 * np.asarray(temporal(*coords), dtype=float)

    return line_integral(path, [time_part, *pot.components[1:]], resolution)


def holonomy(pot: FourPotential, loop: PathSpec, resolution: int = 256) -> float:
    if not loop.closed:
        raise PathError("holonomy needs a closed loop")
    return c5_path_integral(pot, loop, resolution)


def c5_physical(
    phi: Component,
    a: Sequence[Component],
    path: PathSpec,
    *,
    charge: float,
    hbar: float = 1.0,
    light_speed: float = 1.0,
    resolution: int = 256,
) -> tuple[float, float]:
    """(C, C5) for physical potentials: C = integral of (A . dq - c phi dt), C5 = (e/hbar c) C."""
    if charge == 0:
        raise ValueError("the physical phase integral needs a nonzero charge")
    pot = four_potential_from_em(phi, a, charge=charge, hbar=hbar, light_speed=light_speed)
    c5 = c5_path_integral(pot, path, resolution)
    return c5 * hbar * light_speed / charge, c5


# --------------------------------------------------------------------------
# Field tensor
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FieldTensor:
    """Upper-triangle components of F_mu_nu on a (t, x, y, z) grid."""

    components: dict[tuple[int, int], RealField]
    v0: float = 1.0

    def __post_init__(self) -> None:
        if set(self.components) != set(PAIRS):
            raise GridError(f"a field tensor stores exactly the pairs {PAIRS}")
        first = self.components[PAIRS[0]].grid
        if any(c.grid != first for c in self.components.values()):
            raise GridError("field tensor components must share a grid")

    @property
    def grid(self) -> Grid:
        return self.components[PAIRS[0]].grid

    def __call__(self, mu: int, nu: int) -> RealField:
        if mu == nu:
            return RealField.constant(self.grid, 0.0)
        if (mu, nu) in self.components:
            return self.components[(mu, nu)]
        return -self.components[(nu, mu)]

    def electric(self, k: int) -> RealField:
        """E~_k = -F_0k for k = 1..3."""
        return -self(0, k)

    def magnetic(self, k: int) -> RealField:
        """B~_1 = F_23, B~_2 = F_31, B~_3 = F_12."""
        i, j = {1: (2, 3), 2: (3, 1), 3: (1, 2)}[k]
        return self(i, j)

    @classmethod
    def from_fields(cls, electric: Sequence[RealField], magnetic: Sequence[RealField], v0: float = 1.0) -> FieldTensor:
        """Tensor with prescribed E~ and B~ (e.g. to build constructed violations)."""
        e1, e2, e3 = electric
        b1, b2, b3 = magnetic
        return cls({(0, 1): -e1, (0, 2): -e2, (0, 3): -e3, (1, 2): b3, (1, 3): -b2, (2, 3): b1}, v0)

    def zero_like(self) -> FieldTensor:
        zero = RealField.constant(self.grid, 0.0)
        return FieldTensor({pair: zero for pair in PAIRS}, self.v0)


def _require_spacetime(grid: Grid) -> None:
    if grid.ndim != 4 or not grid.has_time:
        raise GridError(f"expected a (t, x, y, z) grid, got {grid.names}")


def _derivative(values: RealField, lam: int, v0: float) -> RealField:
    out = diff(values, lam)
    return out * (1.0 / v0) if lam == 0 else out


def field_tensor(pot: FourPotential, grid: Grid | None = None, method: Method = "auto") -> FieldTensor:
    """F_mu_nu = dA_nu/dx_mu - dA_mu/dx_nu, analytic for closed-form generators."""
    grid = grid or pot.grid
    if grid is None:
        raise GridError("field_tensor needs a (t, x, y, z) grid")
    _require_spacetime(grid)
    use_analytic = method == "analytic" or (method == "auto" and pot.analytic)
    if use_analytic:
        if pot.gradient is None:
            raise GridError(f"potential '{pot.name}' carries no analytic derivatives")
        grad = pot.gradient
        comps = {
            (mu, nu): RealField(grid, sample(grid, grad(nu, mu)).values - sample(grid, grad(mu, nu)).values)
            for mu, nu in PAIRS
        }
        return FieldTensor(comps, pot.v0)
    sampled = []
    for c in pot.components:
        if c is None:
            sampled.append(RealField.constant(grid, 0.0))
        elif isinstance(c, RealField):
            if c.grid != grid:
                raise GridError("tabulated potential lives on a different grid")
            sampled.append(c)
        else:
            sampled.append(RealField(grid, np.broadcast_to(c(*grid.mesh(sparse=True)), grid.shape)))
    comps = {
        (mu, nu): _derivative(sampled[nu], mu, pot.v0) - _derivative(sampled[mu], nu, pot.v0)
        for mu, nu in PAIRS
    }
    return FieldTensor(comps, pot.v0)


def _levi_civita(indices: Sequence[int]) -> int:
    sign = 1
    seq = list(indices)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] == seq[j]:
                return 0
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def bianchi_residual(tensor: FieldTensor) -> tuple[RealField, RealField, RealField, RealField]:
    """(1/2) eps_kappa_lam_mu_nu dF_mu_nu/dx_lam for kappa = 0..3."""
    grid = tensor.grid
    _require_spacetime(grid)
    out = []
    for kappa in range(4):
        total = np.zeros(grid.shape)
        for lam, mu, nu in itertools.permutations([i for i in range(4) if i != kappa], 3):
            if mu > nu:
                continue
            sign = _levi_civita((kappa, lam, mu, nu))
            total += sign * _derivative(tensor(mu, nu), lam, tensor.v0).values
        out.append(RealField(grid, total))
    return tuple(out)  # type: ignore[return-value]


def maxwell_homogeneous_residual(tensor: FieldTensor) -> tuple[RealField, tuple[RealField, RealField, RealField]]:
    """(div B~, curl E~ + (1/v0) dB~/dt)."""
    grid = tensor.grid
    _require_spacetime(grid)
    e = [tensor.electric(k) for k in (1, 2, 3)]
    b = [tensor.magnetic(k) for k in (1, 2, 3)]
    div_b = diff(b[0], 1) + diff(b[1], 2) + diff(b[2], 3)
    curl = (
        diff(e[2], 2) - diff(e[1], 3),
        diff(e[0], 3) - diff(e[2], 1),
        diff(e[1], 1) - diff(e[0], 2),
    )
    faraday = tuple(c + _derivative(bk, 0, tensor.v0) for c, bk in zip(curl, b))
    return div_b, faraday  # type: ignore[return-value]


def eb_from_potentials(em: EmPotentials) -> tuple[tuple[RealField, ...], tuple[RealField, ...]]:
    """Physical E = -(1/c) dA/dt - grad phi and B = curl A.

    Works on grids with or without a time axis and with 2 or 3 spatial axes;
    missing components and derivatives count as zero, and B always has 3
    components.
    """
    grid = em.grid
    spatial = grid.spatial_axes
    if len(spatial) not in (2, 3):
        raise GridError("E and B need 2 or 3 spatial axes")
    zero = RealField.constant(grid, 0.0)
    a = list(em.a) + [zero] * (3 - len(em.a))

    def d(f: RealField, k: int) -> RealField:
        return diff(f, spatial[k]) if k < len(spatial) else zero

    electric = []
    for k in range(len(spatial)):
        e_k = -d(em.phi, k)
        if grid.has_time:
            e_k = e_k - diff(a[k], 0) * (1.0 / em.light_speed)
        electric.append(e_k)
    magnetic = (
        d(a[2], 1) - d(a[1], 2),
        d(a[0], 2) - d(a[2], 0),
        d(a[1], 0) - d(a[0], 1),
    )
    return tuple(electric), magnetic


# --------------------------------------------------------------------------
# Stokes
# --------------------------------------------------------------------------


class StokesResult(Record):
    loop_integral: float
    surface_integral: float
    discrepancy: float
    plane: tuple[int, int]
    area: float


def _rectangle_of(loop: PathSpec) -> tuple[tuple[int, int], NDArray, tuple[float, float], float]:
    pts = loop.waypoints
    span = np.ptp(pts, axis=0)
    active = tuple(int(i) for i in np.flatnonzero(span > 0))
    if len(active) != 2:
        raise PathError(f"loop must lie in an axis-aligned plane; it varies along axes {active}")
    i, j = active
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    on_corner = (np.isclose(pts[:, i], lo[i]) | np.isclose(pts[:, i], hi[i])) & (
        np.isclose(pts[:, j], lo[j]) | np.isclose(pts[:, j], hi[j])
    )
    if not np.all(on_corner):
        raise PathError("only axis-aligned rectangular loops are supported")
    x, y = pts[:, i], pts[:, j]
    signed = 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))
    orientation = 1.0 if signed > 0 else -1.0
    return (i, j), lo, (float(span[i]), float(span[j])), orientation


def stokes_check(pot: FourPotential, loop: PathSpec, resolution: int = 256) -> StokesResult:
    """Loop integral against the flux of F through the enclosed rectangle.

    Both sides use the same subdivision; the surface side samples the analytic
    tensor for closed-form generators and the interpolated finite-difference
    tensor otherwise.
    """
    if not loop.closed:
        raise PathError("Stokes comparison needs a closed loop")
    (i, j), corner, sides, orientation = _rectangle_of(loop)
    loop_value = c5_path_integral(pot, loop, resolution)
    scale = (pot.v0 if i == 0 else 1.0) * (pot.v0 if j == 0 else 1.0)
    if pot.gradient is not None:
        grad = pot.gradient

        def integrand(*coords: NDArray) -> NDArray:
            return scale * (np.asarray(grad(j, i)(*coords)) - np.asarray(grad(i, j)(*coords)))
    else:
        tensor = field_tensor(pot, method="fd")
        integrand = tensor(i, j) * scale
    surface = orientation * surface_integral(integrand, corner, (i, j), sides, resolution)
    return StokesResult(
        loop_integral=loop_value,
        surface_integral=surface,
        discrepancy=abs(loop_value - surface),
        plane=(i, j),
        area=sides[0] * sides[1],
    )


# --------------------------------------------------------------------------
# Compensation and C6 rejection
# --------------------------------------------------------------------------


Route = Callable[[NDArray, NDArray], PathSpec]


def detour_route(*via: Sequence[float]) -> Route:
    """Route from the reference point through ``via`` waypoints to the target."""
    stops = [np.asarray(v, dtype=float) for v in via]

    def build(start: NDArray, target: NDArray) -> PathSpec:
        return PathSpec(np.vstack([start, *stops, target]))

    return build


def axis_route(*axes: int) -> Route:
    """Staircase route that moves along ``axes`` one at a time, then along the rest."""

    def build(start: NDArray, target: NDArray) -> PathSpec:
        order = [*axes, *(k for k in range(start.size) if k not in axes)]
        current = np.array(start, dtype=float)
        points = [current.copy()]
        for k in order:
            if current[k] != target[k]:
                current[k] = target[k]
                points.append(current.copy())
        if len(points) == 1:
            points.append(current.copy())
        return PathSpec(np.vstack(points))

    return build


class CompensationReport(Record):
    targets: int
    routes: int
    phase_spread: float
    action_spread: float
    tolerance: float
    unique: bool
    worst_target: int
    worst_coordinates: tuple[float, ...]
    worst_routes: tuple[int, int]
    holonomies: list[float] = []


def compensate_action(
    s: Callable[..., ArrayLike] | RealField,
    pot: FourPotential,
    targets: Sequence[Sequence[float]],
    routes: Sequence[Route],
    *,
    hbar: float = 1.0,
    tolerance: float = 1e-8,
    resolution: int = 256,
) -> CompensationReport:
    """S-bar = S + hbar C5 along every route to every target.

    ``s`` is the single-valued part of the action. The state function
    exp(i S-bar / hbar) is unique when its spread over routes stays below
    ``tolerance`` at every target; the report names the worst target and
    route pair either way.
    """
    if len(routes) < 2:
        raise PathError("compensation needs at least two routes per target")
    start = np.asarray(pot.reference, dtype=float)
    pts = np.atleast_2d(np.asarray(targets, dtype=float))
    base = evaluate(s, pts)
    phase_spread, action_spread = 0.0, 0.0
    worst = (0, (0, 1))
    holonomies: list[float] = []
    for n, target in enumerate(pts):
        c5 = np.array([c5_path_integral(pot, route(start, target), resolution) for route in routes])
        s_bar = base[n] + hbar * c5
        state = np.exp(1j * s_bar / hbar)
        for a, b in itertools.combinations(range(len(routes)), 2):
            gap = float(abs(state[a] - state[b]))
            if gap >= phase_spread:
                phase_spread, worst = gap, (n, (a, b))
            action_spread = max(action_spread, float(abs(s_bar[a] - s_bar[b])))
        holonomies.append(float(c5[1] - c5[0]))
    unique = phase_spread < tolerance
    if not unique:
        logger.info("state function is multi-valued: spread %.3e at target %d", phase_spread, worst[0])
    return CompensationReport(
        targets=len(pts),
        routes=len(routes),
        phase_spread=phase_spread,
        action_spread=action_spread,
        tolerance=tolerance,
        unique=unique,
        worst_target=worst[0],
        worst_coordinates=tuple(float(x) for x in pts[worst[0]]),
        worst_routes=worst[1],
        holonomies=holonomies,
    )


@dataclass(frozen=True, eq=False)
class C6Terms:
    """Terms left over after substituting rho = rho-bar exp(2 C6) into the continuity law.

    The rho-bar continuity residual equals ``time + transport`` with
    time = -2 rho-bar dC6/dt and transport = -2 rho-bar v . grad C6.
    """

    time: RealField
    transport: RealField
    velocity: tuple[RealField, ...] = field(default=())


class C6RejectionReport(Record):
    time_term: float
    transport_term: float
    combined: float
    tolerance: float
    rejected: bool


C6Source = Union[RealField, Callable[..., ArrayLike]]


def _c6_field(c6: C6Source, grid: Grid) -> RealField:
    if isinstance(c6, RealField):
        return c6
    return sample(grid, c6)


def c6_extra_terms(
    rho_bar: RealField,
    c6: C6Source,
    s_bar: RealField,
    em: EmPotentials | None = None,
    mass: float = 1.0,
) -> C6Terms:
    grid = rho_bar.grid
    if not grid.has_time:
        raise GridError("the C6 expansion needs a time axis")
    c6 = _c6_field(c6, grid)
    if c6.grid != grid or s_bar.grid != grid or (em is not None and em.grid != grid):
        raise GridError("rho-bar, C6, S-bar and the potentials must share a grid")
    velocity = []
    for n, k in enumerate(grid.spatial_axes):
        grad = diff(s_bar, k).values
        if em is not None:
            grad = grad - em.charge / em.light_speed * em.a[n].values
        velocity.append(RealField(grid, grad / mass))
    transport = sum(v.values * diff(c6, k).values for v, k in zip(velocity, grid.spatial_axes))
    return C6Terms(
        time=RealField(grid, -2.0 * rho_bar.values * diff(c6, 0).values),
        transport=RealField(grid, -2.0 * rho_bar.values * transport),
        velocity=tuple(velocity),
    )


def c6_rejection_demo(
    rho_bar: RealField,
    c6: C6Source,
    s_bar: RealField,
    em: EmPotentials | None = None,
    mass: float = 1.0,
    tolerance: float = 1e-12,
) -> C6RejectionReport:
    """Size of the terms a C6 coupling adds to the continuity equation.

    ``c6`` is a field on the rho-bar grid or a callable of its coordinates
    (t, q...), sampled there like a four-potential component.
    """
    terms = c6_extra_terms(rho_bar, c6, s_bar, em, mass)
    time_term = float(np.max(np.abs(terms.time.values)))
    transport_term = float(np.max(np.abs(terms.transport.values)))
    combined = float(np.max(np.abs(terms.time.values + terms.transport.values)))
    return C6RejectionReport(
        time_term=time_term,
        transport_term=transport_term,
        combined=combined,
        tolerance=tolerance,
        rejected=max(time_term, transport_term) > tolerance,
    )
