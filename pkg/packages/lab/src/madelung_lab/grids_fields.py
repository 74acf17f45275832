"""
Madelung Lab - Grids and Fields

Uniform space(-time) grids with up to four axes, immutable real and complex
scalar fields on them, second-order finite differences, path and surface
quadrature, and refinement utilities used by every other module.

Axis order is fixed: the time axis ``t`` (when present) comes first, then the
spatial axes. Fields are value snapshots; every operation returns a new field.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import trapezoid
from scipy.interpolate import RegularGridInterpolator

from .errors import GridError, PathError

TIME_AXIS = "t"
MAX_AXES = 4

AxisRef = Union[int, str]


@dataclass(frozen=True)
class Axis:
    """One uniformly sampled coordinate axis."""

    name: str
    extent: float
    count: int
    start: float = 0.0

    def __post_init__(self) -> None:
        if self.count < 3:
            raise GridError(f"axis '{self.name}' needs at least 3 nodes, got {self.count}")
        if not (np.isfinite(self.extent) and self.extent > 0):
            raise GridError(f"axis '{self.name}' needs a positive finite extent, got {self.extent}")
        if not np.isfinite(self.start):
            raise GridError(f"axis '{self.name}' has a non-finite start")

    @property
    def spacing(self) -> float:
        return self.extent / (self.count - 1)

    @property
    def stop(self) -> float:
        return self.start + self.extent

    def coordinates(self) -> NDArray[np.float64]:
        return np.linspace(self.start, self.stop, self.count)

    def refined(self, factor: int) -> Axis:
        return Axis(self.name, self.extent, (self.count - 1) * factor + 1, self.start)


@dataclass(frozen=True)
class Grid:
    """Tensor-product grid of uniform axes.

    Build one with :meth:`Grid.of`, passing ``name=(start, stop, count)`` per
    axis in order, e.g. ``Grid.of(t=(0, 1, 21), q1=(-5, 5, 101))``.
    """

    axes: tuple[Axis, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "axes", tuple(self.axes))
        names = [axis.name for axis in self.axes]
        if not 1 <= len(names) <= MAX_AXES:
            raise GridError(f"grids carry 1 to {MAX_AXES} axes, got {len(names)}")
        if len(set(names)) != len(names):
            raise GridError(f"duplicate axis names in {names}")
        if TIME_AXIS in names and names[0] != TIME_AXIS:
            raise GridError("the time axis must be the first axis")

    @classmethod
    def of(cls, **axes: tuple[float, float, int]) -> Grid:
        built = []
        for name, (start, stop, count) in axes.items():
            built.append(Axis(name, float(stop) - float(start), int(count), float(start)))
        return cls(tuple(built))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(axis.count for axis in self.axes)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(axis.name for axis in self.axes)

    @property
    def has_time(self) -> bool:
        return self.axes[0].name == TIME_AXIS

    @property
    def spatial_axes(self) -> tuple[int, ...]:
        first = 1 if self.has_time else 0
        return tuple(range(first, self.ndim))

    def axis_index(self, axis: AxisRef) -> int:
        if isinstance(axis, str):
            if axis not in self.names:
                raise GridError(f"no axis named '{axis}' in {self.names}")
            return self.names.index(axis)
        if not -self.ndim <= axis < self.ndim:
            raise GridError(f"axis {axis} out of range for a {self.ndim}-axis grid")
        return axis % self.ndim

    def axis(self, axis: AxisRef) -> Axis:
        return self.axes[self.axis_index(axis)]

    def spacing(self, axis: AxisRef) -> float:
        return self.axis(axis).spacing

    def coordinates(self, axis: AxisRef) -> NDArray[np.float64]:
        return self.axis(axis).coordinates()

    def mesh(self, sparse: bool = False) -> tuple[NDArray[np.float64], ...]:
        return tuple(np.meshgrid(*(a.coordinates() for a in self.axes), indexing="ij", sparse=sparse))

    def interior(self) -> tuple[slice, ...]:
        return tuple(slice(1, -1) for _ in self.axes)

    def node_coordinates(self, index: Sequence[int]) -> tuple[float, ...]:
        return tuple(float(a.start + i * a.spacing) for a, i in zip(self.axes, index))

    def bounds(self) -> NDArray[np.float64]:
        return np.array([[a.start, a.stop] for a in self.axes])

    def refine(self, factor: int) -> Grid:
        return refine(self, factor)

    def describe(self) -> dict[str, object]:
        return {
            "axes": [
                {"name": a.name, "start": a.start, "extent": a.extent, "count": a.count}
                for a in self.axes
            ]
        }

    @classmethod
    def from_description(cls, payload: Mapping[str, object]) -> Grid:
        axes = payload["axes"]
        return cls(tuple(Axis(str(a["name"]), float(a["extent"]), int(a["count"]), float(a["start"])) for a in axes))


def refine(grid: Grid, factor: int) -> Grid:
    """Divide every spacing by ``factor``; extents and origins stay put."""
    if factor < 2:
        raise GridError(f"refinement factor must be >= 2, got {factor}")
    return Grid(tuple(axis.refined(factor) for axis in grid.axes))


class _FieldOps:
    grid: Grid
    values: NDArray

    def _coerce(self, other: object) -> NDArray | complex | float:
        if isinstance(other, (RealField, ComplexField)):
            if other.grid != self.grid:
                raise GridError("fields live on different grids")
            return other.values
        return other  # type: ignore[return-value]

    def __add__(self, other: object):
        return field_like(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other: object):
        return field_like(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other: object):
        return field_like(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other: object):
        return field_like(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other: object):
        return field_like(self.grid, self.values / self._coerce(other))

    def __neg__(self):
        return field_like(self.grid, -self.values)

    def with_values(self, values: ArrayLike):
        return field_like(self.grid, values)

    def interior_values(self) -> NDArray:
        return self.values[self.grid.interior()]


def _materialize(grid: Grid, values: ArrayLike, dtype: type) -> NDArray:
    try:
        arr = np.array(np.broadcast_to(np.asarray(values, dtype=dtype), grid.shape))
    except ValueError as exc:
        raise GridError(f"values of shape {np.shape(values)} do not fit grid shape {grid.shape}") from exc
    if not np.all(np.isfinite(arr)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(arr))[0])
        raise GridError(f"non-finite field value at node {bad}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RealField(_FieldOps):
    """Real samples on every node of a grid."""

    grid: Grid
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        if np.iscomplexobj(self.values):
            raise GridError("RealField received complex values")
        object.__setattr__(self, "values", _materialize(self.grid, self.values, np.float64))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> RealField:
        return cls(grid, np.full(grid.shape, float(value)))


@dataclass(frozen=True, eq=False)
class ComplexField(_FieldOps):
    """Complex samples on every node of a grid."""

    grid: Grid
    values: NDArray[np.complex128]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", _materialize(self.grid, self.values, np.complex128))

    @property
    def real(self) -> RealField:
        return RealField(self.grid, self.values.real)

    @property
    def imag(self) -> RealField:
        return RealField(self.grid, self.values.imag)

    def modulus(self) -> RealField:
        return RealField(self.grid, np.abs(self.values))

    def conj(self) -> ComplexField:
        return ComplexField(self.grid, np.conj(self.values))


Field = Union[RealField, ComplexField]


def field_like(grid: Grid, values: ArrayLike) -> Field:
    """Wrap ``values`` as a RealField or ComplexField depending on dtype."""
    if np.iscomplexobj(values):
        return ComplexField(grid, values)
    return RealField(grid, values)


def sample(grid: Grid, fn: Callable[..., ArrayLike]) -> Field:
    """Evaluate ``fn(*coordinates)`` on every node."""
    return field_like(grid, np.broadcast_to(fn(*grid.mesh(sparse=True)), grid.shape))


def crop(field: Field, **ranges: tuple[float, float]) -> Field:
    """Sub-box of ``field``: nodes whose coordinates lie inside the given ranges."""
    grid = field.grid
    index: list[slice] = []
    axes: list[Axis] = []
    for axis in grid.axes:
        coords = axis.coordinates()
        if axis.name in ranges:
            lo, hi = ranges[axis.name]
            inside = np.flatnonzero((coords >= lo - 1e-12 * axis.extent) & (coords <= hi + 1e-12 * axis.extent))
            if inside.size < 3:
                raise GridError(f"crop of axis '{axis.name}' to [{lo}, {hi}] keeps fewer than 3 nodes")
            i0, i1 = int(inside[0]), int(inside[-1])
        else:
            i0, i1 = 0, axis.count - 1
        index.append(slice(i0, i1 + 1))
        axes.append(Axis(axis.name, float(coords[i1] - coords[i0]), i1 - i0 + 1, float(coords[i0])))
    return field_like(Grid(tuple(axes)), field.values[tuple(index)])


# --------------------------------------------------------------------------
# Finite differences
# --------------------------------------------------------------------------

Gather = Callable[[NDArray[np.intp], int], NDArray]


def _check_stencil(grid: Grid, axis: int, order: int) -> None:
    if order not in (1, 2):
        raise GridError(f"derivative order must be 1 or 2, got {order}")
    if grid.axes[axis].count < order + 2:
        raise GridError(
            f"axis '{grid.axes[axis].name}' has {grid.axes[axis].count} nodes; order {order} needs {order + 2}"
        )


def _stencil(gather: Gather, n: int, h: float, order: int) -> NDArray:
    """Apply the derivative stencil along the last axis.

    ``gather(target, shift)`` returns samples whose last axis runs over
    ``target`` nodes, with the explicit dependence taken from ``target + shift``.
    Every stencil is written in terms of neighbour differences so that inputs
    constant along the axis give exactly zero.
    """
    inner = np.arange(1, n - 1)
    first = np.array([0])
    last = np.array([n - 1])

    def step(target: NDArray[np.intp], a: int, b: int) -> NDArray:
        return gather(target, b) - gather(target, a)

    if order == 1:
        mid = step(inner, -1, 1) / (2.0 * h)
        lo = (3.0 * step(first, 0, 1) - step(first, 1, 2)) / (2.0 * h)
        hi = -(3.0 * step(last, 0, -1) - step(last, -1, -2)) / (2.0 * h)
    else:
        mid = (step(inner, 0, 1) - step(inner, -1, 0)) / h**2
        lo = (-2.0 * step(first, 0, 1) + 3.0 * step(first, 1, 2) - step(first, 2, 3)) / h**2
        hi = (-2.0 * step(last, 0, -1) + 3.0 * step(last, -1, -2) - step(last, -2, -3)) / h**2
    return np.concatenate([lo, mid, hi], axis=-1)


def diff(field: Field, axis: AxisRef, order: int = 1) -> Field:
    """Second-order accurate derivative of ``field`` along ``axis``.

    Central differences in the interior, one-sided second-order closures at
    both ends. The result lives on the same grid.
    """
    grid = field.grid
    k = grid.axis_index(axis)
    _check_stencil(grid, k, order)
    moved = np.moveaxis(field.values, k, -1)
    out = _stencil(lambda target, shift: moved[..., target + shift], grid.axes[k].count, grid.spacing(k), order)
    return field_like(grid, np.moveaxis(out, -1, k))


def frozen_diff(
    fn: Callable[..., ArrayLike],
    grid: Grid,
    axis: AxisRef,
    *,
    frozen: Mapping[str, ArrayLike],
    explicit: Mapping[str, ArrayLike],
    order: int = 1,
) -> Field:
    """Derivative of ``fn(**inputs)`` through its ``explicit`` inputs only.

    ``frozen`` inputs are held at the node being differentiated while
    ``explicit`` inputs are read from the neighbouring stencil nodes. This is
    the partial derivative with respect to a coordinate at fixed values of the
    frozen variables, on the same stencils as :func:`diff`.
    """
    k = grid.axis_index(axis)
    _check_stencil(grid, k, order)
    held = {name: np.moveaxis(np.broadcast_to(np.asarray(v), grid.shape), k, -1) for name, v in frozen.items()}
    moving = {name: np.moveaxis(np.broadcast_to(np.asarray(v), grid.shape), k, -1) for name, v in explicit.items()}
    head = grid.shape[:k] + grid.shape[k + 1 :]

    def gather(target: NDArray[np.intp], shift: int) -> NDArray:
        inputs = {name: v[..., target] for name, v in held.items()}
        inputs.update({name: v[..., target + shift] for name, v in moving.items()})
        return np.broadcast_to(np.asarray(fn(**inputs)), head + (target.size,))

    out = _stencil(gather, grid.axes[k].count, grid.spacing(k), order)
    return field_like(grid, np.moveaxis(out, -1, k))


# --------------------------------------------------------------------------
# Paths and quadrature
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PathSpec:
    """Polyline through real-valued waypoints given in grid axis order."""

    waypoints: NDArray[np.float64]
    closed: bool = False

    def __post_init__(self) -> None:
        pts = np.array(self.waypoints, dtype=float)
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise PathError("a path needs at least 2 waypoints given as a (k, ndim) array")
        if not np.all(np.isfinite(pts)):
            raise PathError("path waypoints must be finite")
        if self.closed and not np.allclose(pts[0], pts[-1], rtol=0.0, atol=1e-12):
            raise PathError("a closed path must end at its first waypoint")
        pts.setflags(write=False)
        object.__setattr__(self, "waypoints", pts)

    @classmethod
    def loop(cls, points: ArrayLike) -> PathSpec:
        pts = np.asarray(points, dtype=float)
        if not np.allclose(pts[0], pts[-1], rtol=0.0, atol=1e-12):
            pts = np.vstack([pts, pts[:1]])
        return cls(pts, closed=True)

    @classmethod
    def rectangle(
        cls,
        corner: Sequence[float],
        plane: tuple[int, int],
        sides: tuple[float, float],
    ) -> PathSpec:
        """Closed rectangle, counter-clockwise in the (plane[0], plane[1]) axes."""
        i, j = plane
        base = np.asarray(corner, dtype=float)
        pts = [base.copy() for _ in range(5)]
        pts[1][i] += sides[0]
        pts[2][i] += sides[0]
        pts[2][j] += sides[1]
        pts[3][j] += sides[1]
        return cls(np.array(pts), closed=True)

    @property
    def ndim(self) -> int:
        return int(self.waypoints.shape[1])

    def segments(self) -> Iterator[tuple[NDArray, NDArray]]:
        for a, b in zip(self.waypoints[:-1], self.waypoints[1:]):
            yield a, b

    def quadrature(self, resolution: int) -> tuple[NDArray, NDArray]:
        """Trapezoid nodes and line elements: points (M, ndim) and dl (M, ndim)."""
        if resolution < 1:
            raise PathError("path resolution must be positive")
        s = np.linspace(0.0, 1.0, resolution + 1)
        w = np.full(resolution + 1, 1.0 / resolution)
        w[0] = w[-1] = 0.5 / resolution
        points, elements = [], []
        for a, b in self.segments():
            points.append(a + np.outer(s, b - a))
            elements.append(np.outer(w, b - a))
        return np.vstack(points), np.vstack(elements)


Integrand = Union[RealField, Callable[..., ArrayLike], None]


def _inside_hull(grid: Grid, points: NDArray) -> None:
    bounds = grid.bounds()
    slack = 1e-12 * (bounds[:, 1] - bounds[:, 0])
    outside = np.any((points < bounds[:, 0] - slack) | (points > bounds[:, 1] + slack), axis=1)
    if np.any(outside):
        first = points[np.flatnonzero(outside)[0]]
        raise PathError(f"path point {tuple(float(x) for x in first)} lies outside the grid hull")


def interpolate(field: RealField, points: ArrayLike) -> NDArray[np.float64]:
    """Multilinear interpolation of ``field`` at (M, ndim) points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    _inside_hull(field.grid, pts)
    lo, hi = field.grid.bounds().T
    interp = RegularGridInterpolator(
        tuple(a.coordinates() for a in field.grid.axes), field.values, method="linear", bounds_error=False, fill_value=None
    )
    return interp(np.clip(pts, lo, hi))


def evaluate(integrand: Integrand, points: NDArray) -> NDArray[np.float64]:
    """Integrand values at (M, ndim) points: interpolated field or exact callable."""
    if integrand is None:
        return np.zeros(points.shape[0])
    if isinstance(integrand, RealField):
        return interpolate(integrand, points)
    return np.broadcast_to(np.asarray(integrand(*points.T), dtype=float), (points.shape[0],))


def line_integral(path: PathSpec, integrands: Sequence[Integrand], resolution: int = 256) -> float:
    """Sum over segments of the trapezoid rule for the integral of A . dl."""
    if len(integrands) != path.ndim:
        raise PathError(f"{len(integrands)} integrands for a path in {path.ndim} dimensions")
    points, elements = path.quadrature(resolution)
    total = 0.0
    for k, integrand in enumerate(integrands):
        if integrand is None or not np.any(elements[:, k]):
            continue
        total += float(np.sum(evaluate(integrand, points) * elements[:, k]))
    return total


def surface_integral(
    integrand: Integrand,
    corner: Sequence[float],
    plane: tuple[int, int],
    sides: tuple[float, float],
    resolution: int = 256,
) -> float:
    """Tensor trapezoid rule over an axis-aligned rectangle (unsigned area)."""
    i, j = plane
    u = np.linspace(0.0, 1.0, resolution + 1)
    uu, vv = np.meshgrid(u, u, indexing="ij")
    pts = np.tile(np.asarray(corner, dtype=float), (uu.size, 1))
    pts[:, i] += uu.ravel() * sides[0]
    pts[:, j] += vv.ravel() * sides[1]
    vals = evaluate(integrand, pts).reshape(uu.shape)
    inner = trapezoid(vals, u, axis=1)
    return float(trapezoid(inner, u) * abs(sides[0] * sides[1]))


# --------------------------------------------------------------------------
# Norms
# --------------------------------------------------------------------------


def linf(values: ArrayLike, grid: Grid | None = None, interior: bool = False) -> float:
    arr = np.asarray(values)
    if interior and grid is not None:
        arr = arr[grid.interior()]
    return float(np.max(np.abs(arr))) if arr.size else 0.0


def l2(values: ArrayLike, grid: Grid | None = None, interior: bool = False) -> float:
    """Root-mean-square over the selected nodes."""
    arr = np.asarray(values)
    if interior and grid is not None:
        arr = arr[grid.interior()]
    return float(np.sqrt(np.mean(np.abs(arr) ** 2))) if arr.size else 0.0
