"""
Madelung Lab - Field Generators

Seeded, resolution-independent smooth test fields. A generator is a callable
of the grid coordinates, so the same field can be sampled on every level of a
refinement sweep.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from .errors import GridError
from .grids_fields import Grid

Family = Literal["polynomial", "gaussian", "random_smooth"]
FAMILIES: tuple[str, ...] = ("polynomial", "gaussian", "random_smooth")

# random_smooth modes stay below this fraction of the Nyquist wavenumber
BAND_LIMIT = 1.0 / 8.0
MODES = 4


@dataclass(frozen=True, eq=False)
class FieldGenerator:
    """Smooth scalar function of selected grid coordinates.

    ``positive`` generators return ``exp(g)`` so densities stay strictly
    positive; the Gaussian family then becomes a Gaussian bump itself.
    """

    family: str
    axes: tuple[int, ...]
    center: NDArray[np.float64]
    half_width: NDArray[np.float64]
    amplitude: float = 1.0
    offset: float = 0.0
    positive: bool = False
    linear: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    quadratic: NDArray[np.float64] = field(default_factory=lambda: np.zeros((0, 0)))
    bump_center: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    bump_width: float = 0.5
    wavevectors: NDArray[np.float64] = field(default_factory=lambda: np.zeros((0, 0)))
    phases: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    weights: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))

    def _exponent(self, coords: Sequence[NDArray]) -> NDArray:
        x = [np.asarray(coords[a], dtype=float) for a in self.axes]
        xi = [(xa - c) / h for xa, c, h in zip(x, self.center, self.half_width)]
        if self.family == "polynomial":
            g = sum(c * v for c, v in zip(self.linear, xi))
            for i in range(len(xi)):
                for j in range(i, len(xi)):
                    g = g + self.quadratic[i, j] * xi[i] * xi[j]
            return self.offset + self.amplitude * g
        if self.family == "gaussian":
            r2 = sum((v - c) ** 2 for v, c in zip(xi, self.bump_center))
            if self.positive:
                return self.offset - self.amplitude * r2 / (2.0 * self.bump_width**2)
            return self.offset + self.amplitude * np.exp(-r2 / (2.0 * self.bump_width**2))
        g = 0.0
        for k, phase, weight in zip(self.wavevectors, self.phases, self.weights):
            g = g + weight * np.sin(sum(kk * xa for kk, xa in zip(k, x)) + phase)
        return self.offset + self.amplitude * g

    def __call__(self, *coords: NDArray) -> NDArray:
        g = self._exponent(coords)
        return np.exp(g) if self.positive else np.asarray(g, dtype=float)


def make_generator(
    family: str,
    grid: Grid,
    rng: np.random.Generator,
    *,
    amplitude: float = 1.0,
    offset: float = 0.0,
    positive: bool = False,
    axes: Sequence[str | int] | None = None,
) -> FieldGenerator:
    """Draw a generator of ``family`` adapted to the box and spacing of ``grid``."""
    if family not in FAMILIES:
        raise GridError(f"unknown generator family '{family}'; expected one of {FAMILIES}")
    idx = tuple(grid.axis_index(a) for a in axes) if axes is not None else tuple(range(grid.ndim))
    bounds = grid.bounds()[list(idx)]
    center = bounds.mean(axis=1)
    half = 0.5 * (bounds[:, 1] - bounds[:, 0])
    d = len(idx)
    common = dict(family=family, axes=idx, center=center, half_width=half,
                  amplitude=float(amplitude), offset=float(offset), positive=positive)
    if family == "polynomial":
        return FieldGenerator(
            **common,
            linear=rng.uniform(-1.0, 1.0, d) / d,
            quadratic=np.triu(rng.uniform(-0.5, 0.5, (d, d))) / d,
        )
    if family == "gaussian":
        return FieldGenerator(
            **common,
            bump_center=rng.uniform(-0.3, 0.3, d),
            bump_width=float(rng.uniform(0.5, 0.9)),
        )
    nyquist = np.array([np.pi / grid.spacing(a) for a in idx])
    kmax = np.minimum(BAND_LIMIT * nyquist, 3.0 * np.pi / half)
    return FieldGenerator(
        **common,
        wavevectors=rng.uniform(-1.0, 1.0, (MODES, d)) * kmax,
        phases=rng.uniform(0.0, 2.0 * np.pi, MODES),
        weights=rng.uniform(0.5, 1.0, MODES) / MODES,
    )


def child_seeds(seed: int, count: int) -> list[int]:
    """Independent, reproducible sub-seeds for ``count`` draws."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(count)]
