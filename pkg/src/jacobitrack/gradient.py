"""Per-slice gradient fields and the pinned gradient magnitude field."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criticals import CriticalPoint
from .errors import DataError
from .fields import ScalarGrid


@dataclass(frozen=True, eq=False)
class VectorGrid:
    """Gradient samples per vertex, units field-value per world-unit."""

    gx: np.ndarray
    gy: np.ndarray
    spacing: tuple[float, float] = (1.0, 1.0)
    origin: tuple[float, float] = (0.0, 0.0)

    @property
    def width(self) -> int:
        return self.gx.shape[1]

    @property
    def height(self) -> int:
        return self.gx.shape[0]


@dataclass(frozen=True, eq=False)
class MagnitudeGrid:
    """Gradient magnitude per vertex, exactly zero at critical vertices.

    Keeps the pinned criticals around: downstream component and merge-tree
    degrees need their Poincare indices.
    """

    magnitudes: np.ndarray
    criticals: tuple[CriticalPoint, ...]
    spacing: tuple[float, float] = (1.0, 1.0)
    origin: tuple[float, float] = (0.0, 0.0)

    @property
    def width(self) -> int:
        return self.magnitudes.shape[1]

    @property
    def height(self) -> int:
        return self.magnitudes.shape[0]

    def cell_center(self, cell: int) -> tuple[float, float]:
        cj, ci = divmod(cell, self.width - 1)
        return (
            self.origin[0] + (ci + 0.5) * self.spacing[0],
            self.origin[1] + (cj + 0.5) * self.spacing[1],
        )


def gradient_field(grid: ScalarGrid) -> VectorGrid:
    """Central differences in the interior, one-sided on the boundary."""
    if grid.width < 3 or grid.height < 3:
        raise DataError("gradient needs a grid of at least 3x3")
    dy, dx = grid.spacing[1], grid.spacing[0]
    gy, gx = np.gradient(grid.values, dy, dx, edge_order=1)
    return VectorGrid(gx=gx, gy=gy, spacing=grid.spacing, origin=grid.origin)


def magnitude_field(vec: VectorGrid, criticals: list[CriticalPoint]) -> MagnitudeGrid:
    """Euclidean magnitude of the gradient, forced to zero at criticals.

    A PL critical vertex rarely has an exactly vanishing central-difference
    gradient, so the zero set of the magnitude field is pinned explicitly.
    """
    mag = np.hypot(vec.gx, vec.gy)
    flat = mag.ravel()
    for c in criticals:
        flat[c.vertex] = 0.0
    return MagnitudeGrid(
        magnitudes=mag,
        criticals=tuple(criticals),
        spacing=vec.spacing,
        origin=vec.origin,
    )
