"""
Madelung Lab - Errors

Exception hierarchy shared by every numerical module.
"""

from __future__ import annotations

from collections.abc import Sequence


class LabError(Exception):
    """Base class for all Madelung Lab failures."""


class GridError(LabError, ValueError):
    """Bad axis, undersized grid, shape mismatch or non-finite samples."""


class PathError(LabError, ValueError):
    """Path leaves the sampled hull, is not planar, or touches a singular core."""


class DensityError(LabError, ValueError):
    """Negative density, or a density at the floor where a division is needed."""

    def __init__(self, message: str, nodes: Sequence[tuple[int, ...]] = ()):
        super().__init__(message)
        self.nodes = list(nodes)


class PhaseSingularityError(LabError, ValueError):
    """|psi| fell below the unwrap threshold inside the unwrap region."""

    def __init__(self, node: tuple[int, ...], coordinates: tuple[float, ...], modulus: float):
        super().__init__(
            f"phase singularity at node {node} (coordinates {coordinates}): |psi| = {modulus:.3e}"
        )
        self.node = node
        self.coordinates = coordinates
        self.modulus = modulus


class CoefficientError(LabError, ValueError):
    """Coefficient set the closed forms cannot use (d = 0 or c2 = 0)."""


class ConstraintError(LabError, ValueError):
    """A constraint residual exceeds its tolerance."""

    def __init__(self, message: str, residuals: dict[str, float] | None = None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class DomainError(LabError, ValueError):
    """Evaluation point outside the principal tan/log branch."""

    def __init__(self, message: str, offending: Sequence[float] = ()):
        super().__init__(message)
        self.offending = [float(x) for x in offending]


class SolverError(LabError, RuntimeError):
    """Linear-solve failure, p(t) crossing zero, or an inconsistent problem."""


class FormatError(LabError, ValueError):
    """Field file with a missing or unsupported format tag."""
