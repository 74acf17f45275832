"""
Madelung Lab - Ansatz Closed Forms

Closed-form evaluation of the linear-equation ansatz: the state function chi
and the multiplier F as functions of (rho, S), the helper functions f(S) and
h(S), the trigonometric abbreviations U, V, W, T, the barred coefficients, and
the constraint solvers that reduce the coefficients (a, b, d, e) and the
integration constants C3..C6 to the free data of the static and gauged
solution families.

Notation used throughout:

    kappa = c2 / (2 m |d|^2)     lam = c1 / (2 m |d|^2)
    theta = kappa S + C5         mu  = i kappa - lam

    chi = -(sqrt(rho)/kappa) exp(-lam S - C6) exp(i theta) + C3 + i C4
    F   = i sqrt(rho)/(m d) exp(-i theta + lam S + C6)

Coefficients and constants may be scalars or arrays over the (t, q) grid of a
gauged solution; everything broadcasts.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, replace
from typing import Literal, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import CoefficientError, ConstraintError, DensityError, DomainError, GridError
from .gauge import DressingFields, v_of_v_tilde
from .grids_fields import ComplexField, Grid, RealField, diff, field_like

logger = logging.getLogger(__name__)

Mode = Literal["static", "gauged"]
Value = Union[ArrayLike, RealField, ComplexField]

STATIC_TOLERANCE = 1e-12
GAUGED_TOLERANCE = 1e-10


def _values(value: Value, dtype: type) -> NDArray:
    if isinstance(value, (RealField, ComplexField)):
        value = value.values
    return np.asarray(value, dtype=dtype)


def _real(value: Value) -> NDArray[np.float64]:
    arr = _values(value, np.complex128)
    if np.any(arr.imag):
        raise CoefficientError("expected a real-valued quantity")
    return arr.real.astype(np.float64)


def _constant(value: ArrayLike, name: str) -> float:
    arr = np.asarray(value, dtype=float)
    if arr.size == 0:
        raise CoefficientError(f"{name} is empty")
    first = float(arr.flat[0])
    if np.max(np.abs(arr - first)) > 1e-12 * max(1.0, abs(first)):
        raise CoefficientError(f"{name} must be constant here, but varies by {float(np.ptp(arr)):.3e}")
    return first


def _relative(value: ArrayLike, scale: ArrayLike) -> float:
    top = float(np.max(np.abs(value))) if np.size(value) else 0.0
    bottom = float(np.max(np.abs(scale))) if np.size(scale) else 0.0
    return top / bottom if bottom > 0 else top


# --------------------------------------------------------------------------
# Coefficients and parameters
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CoefficientSet:
    """The complex coefficients a, b, d, e of the linear equation.

    Derived combinations are computed on access from the stored coefficients.
    """

    a: NDArray[np.complex128]
    b: NDArray[np.complex128]
    d: NDArray[np.complex128]
    e: NDArray[np.complex128]

    def __post_init__(self) -> None:
        for name in ("a", "b", "d", "e"):
            object.__setattr__(self, name, _values(getattr(self, name), np.complex128))
        if np.any(np.abs(self.d) == 0):
            raise CoefficientError("coefficient d vanishes; the closed forms divide by |d|^2")

    @property
    def d_norm2(self) -> NDArray[np.float64]:
        return np.abs(self.d) ** 2

    @property
    def c(self) -> NDArray[np.complex128]:
        return self.a * np.conj(self.d)

    @property
    def c1(self) -> NDArray[np.float64]:
        return self.c.real

    @property
    def c2(self) -> NDArray[np.float64]:
        return self.c.imag

    @property
    def g1(self) -> NDArray[np.float64]:
        return (self.b * np.conj(self.d)).real

    @property
    def g2(self) -> NDArray[np.float64]:
        return (self.b * np.conj(self.d)).imag

    @property
    def h1(self) -> NDArray[np.float64]:
        return (self.e * np.conj(self.d)).real

    @property
    def h2(self) -> NDArray[np.float64]:
        return (self.e * np.conj(self.d)).imag

    def replace(self, **changes: Value) -> CoefficientSet:
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class AnsatzParams:
    """Integration constants and free data of a solution.

    ``h1`` is the real part of e/d: the function f of the static family or
    H1 of the gauged family. ``r1`` and ``u_tilde`` are optional records of
    the constants the coefficients were built from; when absent they are
    recovered from c2.
    """

    mass: float = 1.0
    c3: ArrayLike = 0.0
    c4: ArrayLike = 0.0
    c5: ArrayLike = 0.0
    c6: ArrayLike = 0.0
    r1: float | None = None
    u_tilde: ArrayLike | None = None
    h1: ArrayLike | None = None

    def __post_init__(self) -> None:
        if not self.mass > 0:
            raise CoefficientError(f"mass must be positive, got {self.mass}")
        for name in ("c3", "c4", "c5", "c6"):
            object.__setattr__(self, name, _real(getattr(self, name)))
        for name in ("u_tilde", "h1"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, _real(getattr(self, name)))
        if self.u_tilde is not None and np.any(self.u_tilde <= 0):
            raise CoefficientError("u_tilde must be positive")


@dataclass(frozen=True, eq=False)
class AnsatzClosedForm:
    """A coefficient set together with its constants, ready for evaluation."""

    params: AnsatzParams
    coeffs: CoefficientSet
    mode: Mode = "static"
    grid: Grid | None = None

    def __post_init__(self) -> None:
        if np.any(self.coeffs.c2 == 0):
            raise CoefficientError("c2 vanishes; chi is undefined")
        if self.mode not in ("static", "gauged"):
            raise CoefficientError(f"unknown ansatz mode '{self.mode}'")
        if self.mode == "gauged" and self.grid is None:
            raise GridError("a gauged closed form needs the (t, q) grid its coefficients live on")

    @property
    def kappa(self) -> NDArray[np.float64]:
        return self.coeffs.c2 / (2.0 * self.params.mass * self.coeffs.d_norm2)

    @property
    def lam(self) -> NDArray[np.float64]:
        return self.coeffs.c1 / (2.0 * self.params.mass * self.coeffs.d_norm2)

    @property
    def u_tilde(self) -> NDArray[np.float64]:
        if self.params.u_tilde is not None:
            return self.params.u_tilde
        return self.kappa

    @property
    def r1(self) -> NDArray[np.float64] | float:
        if self.params.r1 is not None:
            return self.params.r1
        return 2.0 * self.params.mass * self.u_tilde

    @property
    def p(self) -> NDArray[np.float64]:
        return 1.0 / self.u_tilde

    @property
    def hbar(self) -> NDArray[np.float64]:
        return self.p

    def with_coeffs(self, coeffs: CoefficientSet) -> AnsatzClosedForm:
        return replace(self, coeffs=coeffs)

    def with_params(self, **changes: object) -> AnsatzClosedForm:
        return replace(self, params=replace(self.params, **changes))


def closed_form(
    coeffs: CoefficientSet,
    params: AnsatzParams | None = None,
    mode: Mode = "static",
    grid: Grid | None = None,
) -> AnsatzClosedForm:
    """Unconstrained closed form, e.g. with c1 != 0 for the pre-constraint identities."""
    return AnsatzClosedForm(params or AnsatzParams(), coeffs, mode, grid)


# --------------------------------------------------------------------------
# chi and F
# --------------------------------------------------------------------------


def _points(rho: Value, s: Value) -> tuple[NDArray, NDArray, Grid | None]:
    grid = None
    for value in (rho, s):
        if isinstance(value, RealField):
            if grid is not None and value.grid != grid:
                raise GridError("rho and S must share a grid")
            grid = value.grid
    r = _values(rho, np.float64)
    if np.any(r < 0):
        raise DensityError(f"negative density ({float(r.min()):.3e}) passed to the closed forms")
    return r, _values(s, np.float64), grid


def _lift(values: NDArray, grid: Grid | None):
    return field_like(grid, values) if grid is not None else values


def _phase_parts(r: NDArray, s: NDArray, params: AnsatzParams, coeffs: CoefficientSet) -> tuple[NDArray, NDArray]:
    """Amplitude -(sqrt(rho)/kappa) exp(-lam S - C6) and angle theta."""
    m2 = 2.0 * params.mass * coeffs.d_norm2
    if np.any(coeffs.c2 == 0):
        raise CoefficientError("c2 vanishes; chi is undefined")
    kappa = coeffs.c2 / m2
    lam = coeffs.c1 / m2
    theta = kappa * s + params.c5
    amplitude = -np.sqrt(r) / kappa * np.exp(-lam * s - params.c6)
    return amplitude, theta


def chi_of(rho: Value, s: Value, params: AnsatzParams, coeffs: CoefficientSet):
    """chi(rho, S) in complex-exponential form."""
    r, sv, grid = _points(rho, s)
    amplitude, theta = _phase_parts(r, sv, params, coeffs)
    return _lift(amplitude * np.exp(1j * theta) + (params.c3 + 1j * params.c4), grid)


def chi_polar(rho: Value, s: Value, params: AnsatzParams, coeffs: CoefficientSet):
    """(chi1, chi2) from the real-pair form."""
    r, sv, grid = _points(rho, s)
    amplitude, theta = _phase_parts(r, sv, params, coeffs)
    return _lift(amplitude * np.cos(theta) + params.c3, grid), _lift(amplitude * np.sin(theta) + params.c4, grid)


def f_multiplier(rho: Value, s: Value, params: AnsatzParams, coeffs: CoefficientSet):
    r, sv, grid = _points(rho, s)
    m2 = 2.0 * params.mass * coeffs.d_norm2
    theta = coeffs.c2 / m2 * sv + params.c5
    growth = coeffs.c1 / m2 * sv + params.c6
    return _lift(1j * np.sqrt(r) / (params.mass * coeffs.d) * np.exp(-1j * theta + growth), grid)


def f_multiplier_polar(rho: Value, s: Value, params: AnsatzParams, coeffs: CoefficientSet):
    """(F1, F2) from the real-pair form."""
    r, sv, grid = _points(rho, s)
    m2 = 2.0 * params.mass * coeffs.d_norm2
    theta = coeffs.c2 / m2 * sv + params.c5
    scale = np.sqrt(r) * np.exp(coeffs.c1 / m2 * sv + params.c6) / (params.mass * coeffs.d_norm2)
    d1, d2 = coeffs.d.real, coeffs.d.imag
    f1 = scale * (d1 * np.sin(theta) + d2 * np.cos(theta))
    f2 = scale * (d1 * np.cos(theta) - d2 * np.sin(theta))
    return _lift(f1, grid), _lift(f2, grid)


@dataclass(frozen=True, eq=False)
class ChiDerivatives:
    """chi and its analytic derivatives with respect to rho and S."""

    chi: NDArray[np.complex128]
    rho: NDArray[np.complex128]
    rho_rho: NDArray[np.complex128]
    s: NDArray[np.complex128]
    s_s: NDArray[np.complex128]
    rho_s: NDArray[np.complex128]


def chi_derivatives(rho: Value, s: Value, params: AnsatzParams, coeffs: CoefficientSet) -> ChiDerivatives:
    r, sv, _ = _points(rho, s)
    if np.any(r <= 0):
        raise DensityError("rho-derivatives of chi need a strictly positive density")
    amplitude, theta = _phase_parts(r, sv, params, coeffs)
    varying = amplitude * np.exp(1j * theta)
    m2 = 2.0 * params.mass * coeffs.d_norm2
    mu = 1j * coeffs.c2 / m2 - coeffs.c1 / m2
    return ChiDerivatives(
        chi=varying + (params.c3 + 1j * params.c4),
        rho=varying / (2.0 * r),
        rho_rho=-varying / (4.0 * r**2),
        s=mu * varying,
        s_s=mu**2 * varying,
        rho_s=mu * varying / (2.0 * r),
    )


# --------------------------------------------------------------------------
# f(S), h(S) and the principal branch
# --------------------------------------------------------------------------


def _branch_angle(s: NDArray, c2: ArrayLike, md2: ArrayLike, c5: ArrayLike) -> NDArray:
    theta = np.asarray(c2) / (2.0 * np.asarray(md2)) * s + np.asarray(c5)
    bad = ~((np.cos(theta) > 0) & (np.sin(theta) > 0))
    if np.any(bad):
        offending = np.broadcast_to(s, bad.shape)[bad]
        raise DomainError(
            f"{int(bad.sum())} S value(s) outside the principal tan/log branch, first S={float(offending[0]):.6g}",
            offending[:10],
        )
    return theta


def fh_functions(
    s: ArrayLike,
    c1: ArrayLike,
    c2: ArrayLike,
    md2: ArrayLike,
    c5: ArrayLike = 0.0,
    c6: ArrayLike = 0.0,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """f = ln tan(theta), h = -ln cos(theta) - c1 S/(2 m|d|^2) - C6, with md2 = m|d|^2."""
    sv = np.asarray(s, dtype=float)
    theta = _branch_angle(sv, c2, md2, c5)
    f = np.log(np.tan(theta))
    h = -np.log(np.cos(theta)) - np.asarray(c1) / (2.0 * np.asarray(md2)) * sv - np.asarray(c6)
    return f, h


def fh_of(s: ArrayLike, closed: AnsatzClosedForm) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    c = closed.coeffs
    md2 = closed.params.mass * c.d_norm2
    return fh_functions(s, c.c1, c.c2, md2, closed.params.c5, closed.params.c6)


def regular_s_interval(closed: AnsatzClosedForm, margin: float = 0.1) -> tuple[float, float]:
    """S range on which theta stays inside (0, pi/2), shrunk by ``margin`` of that window at each end."""
    if not 0 <= margin < 0.5:
        raise DomainError(f"margin must lie in [0, 0.5), got {margin}")
    kappa = _constant(closed.kappa, "c2/(2m|d|^2)")
    c5 = _constant(closed.params.c5, "C5")
    gap = margin * np.pi / 2.0
    ends = sorted(((gap - c5) / kappa, (np.pi / 2.0 - gap - c5) / kappa))
    return float(ends[0]), float(ends[1])


# --------------------------------------------------------------------------
# Barred coefficients
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BarredCoefficients:
    """a F, b F, d F, e F."""

    a: NDArray[np.complex128]
    b: NDArray[np.complex128]
    d: NDArray[np.complex128]
    e: NDArray[np.complex128]

    def as_dict(self) -> dict[str, NDArray[np.complex128]]:
        return {"a": self.a, "b": self.b, "d": self.d, "e": self.e}


def barred_coeffs(coeffs: CoefficientSet, f: Value) -> BarredCoefficients:
    fv = _values(f, np.complex128)
    return BarredCoefficients(coeffs.a * fv, coeffs.b * fv, coeffs.d * fv, coeffs.e * fv)


@dataclass(frozen=True, eq=False)
class TrigAbbreviations:
    u: NDArray[np.float64]
    v: NDArray[np.float64]
    w: NDArray[np.float64]
    t: NDArray[np.float64]


def trig_abbreviations(rho: Value, s: Value, params: AnsatzParams, coeffs: CoefficientSet) -> TrigAbbreviations:
    r, sv, _ = _points(rho, s)
    m2 = 2.0 * params.mass * coeffs.d_norm2
    kappa = coeffs.c2 / m2
    return TrigAbbreviations(
        u=kappa * sv + params.c5,
        v=coeffs.c1 / m2 * sv + params.c6,
        w=np.sqrt(r) / kappa,
        t=np.sqrt(r) / (params.mass * coeffs.d_norm2),
    )


def barred_coeffs_trig(rho: Value, s: Value, params: AnsatzParams, coeffs: CoefficientSet) -> BarredCoefficients:
    """Barred coefficients from the trigonometric forms in U, V, T."""
    ab = trig_abbreviations(rho, s, params, coeffs)
    scale = ab.t * np.exp(ab.v)
    sin_u, cos_u = np.sin(ab.u), np.cos(ab.u)

    def bar(x: NDArray[np.complex128]) -> NDArray[np.complex128]:
        x1, x2 = x.real, x.imag
        return scale * (x1 * sin_u - x2 * cos_u) + 1j * scale * (x1 * cos_u + x2 * sin_u)

    conj_d = np.conj(coeffs.d)
    return BarredCoefficients(
        a=bar(coeffs.a * conj_d),
        b=bar(coeffs.b * conj_d),
        d=bar(coeffs.d * conj_d),
        e=bar(coeffs.e * conj_d),
    )


def dbar_intermediate(rho: Value, s: Value, closed: AnsatzClosedForm) -> tuple[NDArray, NDArray]:
    """(d-bar_1, d-bar_2) rebuilt from f and h: sqrt(rho)/m * (exp(f - h), exp(-h))."""
    r, sv, _ = _points(rho, s)
    f, h = fh_of(sv, closed)
    scale = np.sqrt(r) / closed.params.mass
    return scale * np.exp(f - h), scale * np.exp(-h)


def chi_from_fh(rho: Value, s: Value, closed: AnsatzClosedForm) -> NDArray[np.complex128]:
    """chi rebuilt from f and h with the constants G = C3 and H = C4."""
    r, sv, _ = _points(rho, s)
    f, h = fh_of(sv, closed)
    lead = -(2.0 * closed.params.mass * closed.coeffs.d_norm2 / closed.coeffs.c2) * np.sqrt(r)
    cosh2 = np.exp(f) + np.exp(-f)
    chi1 = lead * np.exp(h - f) / cosh2 + closed.params.c3
    chi2 = lead * np.exp(h) / cosh2 + closed.params.c4
    return chi1 + 1j * chi2


# --------------------------------------------------------------------------
# Constraint solvers
# --------------------------------------------------------------------------


def static_constraint_residuals(closed: AnsatzClosedForm) -> dict[str, float]:
    """Relative residuals of the static coefficient constraints."""
    c = closed.coeffs
    scale_d = c.d_norm2
    residuals = {
        "c1": _relative(c.c1, np.abs(c.a) * np.abs(c.d)),
        "g1": _relative(c.g1, scale_d),
        "g2": _relative(c.g2, scale_d),
        "h2": _relative(c.h2, np.maximum(scale_d, np.abs(c.e) * np.abs(c.d))),
        "c3": float(np.max(np.abs(closed.params.c3))),
        "c4": float(np.max(np.abs(closed.params.c4))),
    }
    if closed.params.r1 is not None:
        residuals["c2_r1"] = _relative(c.c2 - closed.params.r1 * scale_d, abs(closed.params.r1) * scale_d)
    return residuals


def solve_constraints_static(
    d: Value,
    r1: float,
    f: Value = 0.0,
    *,
    mass: float = 1.0,
    c5: float = 0.0,
    c6: float = 0.0,
    grid: Grid | None = None,
    tolerance: float = STATIC_TOLERANCE,
) -> AnsatzClosedForm:
    """The static family: a = i r1 d, b = 0, e = f d, C3 = C4 = 0."""
    if r1 == 0:
        raise CoefficientError("r1 must be nonzero")
    if grid is None:
        grid = next((v.grid for v in (d, f) if isinstance(v, (RealField, ComplexField))), None)
    dv = _values(d, np.complex128)
    fv = _real(f)
    coeffs = CoefficientSet(a=1j * r1 * dv, b=np.zeros_like(dv), d=dv, e=fv * dv)
    params = AnsatzParams(mass=mass, c5=c5, c6=c6, r1=float(r1), h1=fv)
    closed = AnsatzClosedForm(params, coeffs, "static", grid)
    residuals = static_constraint_residuals(closed)
    worst = max(residuals, key=residuals.__getitem__)
    if residuals[worst] > tolerance:
        raise ConstraintError(f"static constraint '{worst}' off by {residuals[worst]:.3e}", residuals)
    return closed


def _time_and_space(grid: Grid) -> tuple[int, int]:
    if not grid.has_time or len(grid.spatial_axes) != 1:
        raise GridError(f"gauged coefficients live on a (t, q) grid, got axes {grid.names}")
    return 0, grid.spatial_axes[0]


def _on_grid(value: Value, grid: Grid) -> RealField:
    if isinstance(value, RealField):
        if value.grid != grid:
            raise GridError("gauged data must share one (t, q) grid")
        return value
    return RealField(grid, _real(value))


def gauged_h2(
    grid: Grid,
    u_tilde: RealField,
    c5: RealField,
    c6: RealField,
    mass: float = 1.0,
) -> NDArray[np.float64]:
    """H2 = 2 m u (u_t/u + C6_t) - 2 C5_q C6_q - C5_qq."""
    t, q = _time_and_space(grid)
    u = u_tilde.values
    return (
        2.0 * mass * u * (diff(u_tilde, t).values / u + diff(c6, t).values)
        - 2.0 * diff(c5, q).values * diff(c6, q).values
        - diff(c5, q, 2).values
    )


def gauged_constraint_residuals(closed: AnsatzClosedForm) -> dict[str, float]:
    """Relative residuals of the gauged coefficient constraints on the closed form's grid."""
    grid = closed.grid
    t, q = _time_and_space(grid)
    c = closed.coeffs
    d2 = np.broadcast_to(c.d_norm2, grid.shape)
    u = RealField(grid, np.broadcast_to(closed.u_tilde, grid.shape))
    c5 = RealField(grid, np.broadcast_to(closed.params.c5, grid.shape))
    c6 = RealField(grid, np.broadcast_to(closed.params.c6, grid.shape))
    c2 = np.broadcast_to(c.c2, grid.shape)
    g1 = np.broadcast_to(c.g1, grid.shape)
    g2 = np.broadcast_to(c.g2, grid.shape)
    c5_q, c5_qq = diff(c5, q).values, diff(c5, q, 2).values
    c6_q, c6_t = diff(c6, q).values, diff(c6, t).values
    growth = diff(u, t).values / u.values + c6_t
    terms = (
        2.0 * np.broadcast_to(c.h2, grid.shape) / c2,
        -2.0 * growth,
        -g1 * g2 / (c2 * d2),
        2.0 * d2 / c2 * c5_qq,
    )
    return {
        "c1": _relative(c.c1, np.abs(c.a) * np.abs(c.d)),
        "u_tilde_q": _relative(diff(u, q).values, u.values),
        "g1_c6": _relative(g1 - 2.0 * d2 * c6_q, d2 * np.maximum(1.0, 2.0 * np.abs(c6_q))),
        "g2_c5": _relative(g2 + 2.0 * d2 * c5_q, d2 * np.maximum(1.0, 2.0 * np.abs(c5_q))),
        "h2_balance": _relative(sum(terms), np.maximum(1.0, sum(np.abs(x) for x in terms))),
        "c3": float(np.max(np.abs(closed.params.c3))),
        "c4": float(np.max(np.abs(closed.params.c4))),
    }


def solve_constraints_gauged(
    d: Value,
    u_tilde: Value,
    c5: Value,
    c6: Value,
    h1: Value,
    *,
    grid: Grid | None = None,
    mass: float = 1.0,
    tolerance: float = GAUGED_TOLERANCE,
) -> AnsatzClosedForm:
    """The gauged family on a (t, q) grid.

    a = 2 i m u d, b = (2 C6_q - 2 i C5_q) d, e = (H1 + i H2) d, C3 = C4 = 0,
    with H2 fixed by u and the dressing constants.
    """
    if grid is None:
        grid = next((v.grid for v in (d, u_tilde, c5, c6, h1) if isinstance(v, (RealField, ComplexField))), None)
    if grid is None:
        raise GridError("solve_constraints_gauged needs a grid (pass fields or grid=)")
    t, q = _time_and_space(grid)
    u = _on_grid(u_tilde, grid)
    if np.any(u.values <= 0):
        raise ConstraintError("u_tilde must be positive")
    drift = _relative(diff(u, q).values, u.values)
    if drift > 1e-12:
        raise ConstraintError(f"u_tilde varies with q (relative slope {drift:.3e}); it may depend on t only",
                              {"u_tilde_q": drift})
    c5f, c6f, h1f = _on_grid(c5, grid), _on_grid(c6, grid), _on_grid(h1, grid)
    dv = np.broadcast_to(_values(d, np.complex128), grid.shape)
    h2 = gauged_h2(grid, u, c5f, c6f, mass)
    coeffs = CoefficientSet(
        a=1j * (2.0 * mass * u.values) * dv,
        b=(2.0 * diff(c6f, q).values - 2j * diff(c5f, q).values) * dv,
        d=dv,
        e=(h1f.values + 1j * h2) * dv,
    )
    params = AnsatzParams(mass=mass, c5=c5f.values, c6=c6f.values, u_tilde=u.values, h1=h1f.values)
    closed = AnsatzClosedForm(params, coeffs, "gauged", grid)
    residuals = gauged_constraint_residuals(closed)
    worst = max(residuals, key=residuals.__getitem__)
    if residuals[worst] > tolerance:
        raise ConstraintError(f"gauged constraint '{worst}' off by {residuals[worst]:.3e}", residuals)
    logger.debug("gauged coefficients built on %s, worst constraint %s=%.2e", grid.names, worst, residuals[worst])
    return closed


Generator = Union[Callable[..., ArrayLike], complex, float]


def _sample(fn: Generator, grid: Grid, dtype: type) -> NDArray:
    if callable(fn):
        return np.broadcast_to(np.asarray(fn(*grid.mesh(sparse=True)), dtype=dtype), grid.shape)
    return np.broadcast_to(np.asarray(fn, dtype=dtype), grid.shape)


@dataclass(frozen=True, eq=False)
class GaugedAnsatz:
    """Resolution-independent recipe for a gauged solution.

    Every entry is a constant or a callable of the grid coordinates (t, q);
    ``u_tilde`` must not depend on q. :meth:`build` samples them on a grid
    and runs :func:`solve_constraints_gauged`, so a refinement sweep sees the
    same underlying solution on every level.
    """

    d: Generator = 1.0
    u_tilde: Generator = 0.5
    c5: Generator = 0.0
    c6: Generator = 0.0
    h1: Generator = 0.0
    mass: float = 1.0

    def build(self, grid: Grid) -> AnsatzClosedForm:
        return solve_constraints_gauged(
            _sample(self.d, grid, np.complex128),
            RealField(grid, _sample(self.u_tilde, grid, np.float64)),
            RealField(grid, _sample(self.c5, grid, np.float64)),
            RealField(grid, _sample(self.c6, grid, np.float64)),
            RealField(grid, _sample(self.h1, grid, np.float64)),
            grid=grid,
            mass=self.mass,
        )


# --------------------------------------------------------------------------
# Back to psi and V
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PsiRule:
    """psi = sqrt(rho) exp(i S / hbar) with the hbar (or p) of a solution."""

    hbar: NDArray[np.float64]

    def __call__(self, rho: RealField, s: RealField) -> ComplexField:
        if rho.grid != s.grid:
            raise GridError("rho and S must share a grid")
        return ComplexField(rho.grid, np.sqrt(rho.values) * np.exp(1j * s.values / self.hbar))


def to_psi_v(closed: AnsatzClosedForm, grid: Grid | None = None) -> tuple[PsiRule, RealField]:
    """The wave-function rule and potential a solution encodes.

    Static: hbar = 2m/r1 and V = -(hbar^2/2m) f. Gauged: the dressed potential
    V~ = -H1/(2 m u^2) mapped back to V through the dressing relation.
    """
    grid = grid or closed.grid
    if grid is None:
        raise GridError("to_psi_v needs a grid to sample the potential on")
    m = closed.params.mass
    f = np.broadcast_to(closed.coeffs.h1 / closed.coeffs.d_norm2, grid.shape)
    if closed.mode == "static":
        hbar = _constant(closed.hbar, "hbar")
        if hbar <= 0:
            raise CoefficientError(f"hbar = 2m/r1 must be positive, got {hbar}")
        return PsiRule(np.asarray(hbar)), RealField(grid, -(hbar**2) / (2.0 * m) * f)
    if grid != closed.grid:
        raise GridError("a gauged solution is tied to the grid it was built on")
    u = np.broadcast_to(closed.u_tilde, grid.shape)
    v_tilde = RealField(grid, -f / (2.0 * m * u**2))
    dressing = DressingFields(
        RealField(grid, np.broadcast_to(closed.params.c5, grid.shape)),
        RealField(grid, np.broadcast_to(closed.params.c6, grid.shape)),
        RealField(grid, 1.0 / u),
    )
    return PsiRule(1.0 / u), v_of_v_tilde(v_tilde, dressing, m)
