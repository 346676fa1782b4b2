"""Grid data model for 2D time-varying scalar fields.

Storage is time-major, row-major per slice: ``values[t, j, i]`` is the sample
at column ``i``, row ``j``, time step ``t``. Vertex ids are flat row-major
indices ``j * width + i``. Disk formats use float32; everything in memory is
float64.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class GridSpec:
    """Shape and world-coordinate layout of a time-varying grid."""

    width: int
    height: int
    timesteps: int
    spacing: tuple[float, float] = (1.0, 1.0)
    origin: tuple[float, float] = (0.0, 0.0)
    time_spacing: float = 1.0

    def __post_init__(self):
        if self.width < 3 or self.height < 3:
            raise DataError(
                f"grid must be at least 3x3, got {self.width}x{self.height}"
            )
        if self.timesteps < 2:
            raise DataError(f"need at least 2 time steps, got {self.timesteps}")
        if self.spacing[0] <= 0 or self.spacing[1] <= 0 or self.time_spacing <= 0:
            raise DataError("spacing values must be positive")

    @property
    def n_vertices(self) -> int:
        return self.width * self.height

    def vertex_xy(self, vertex: int) -> tuple[float, float]:
        j, i = divmod(vertex, self.width)
        return (
            self.origin[0] + i * self.spacing[0],
            self.origin[1] + j * self.spacing[1],
        )


@dataclass(frozen=True, eq=False)
class ScalarGrid:
    """A single 2D scalar field sample on a regular grid."""

    values: np.ndarray  # (height, width) float64
    spacing: tuple[float, float] = (1.0, 1.0)
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 2 or v.shape[1] < 2:
            raise DataError(f"scalar grid must be 2D and at least 2x2, got {v.shape}")
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise DataError(f"non-finite value at vertex {bad}")
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def n_vertices(self) -> int:
        return self.values.size

    def vertex_xy(self, vertex: int) -> tuple[float, float]:
        j, i = divmod(vertex, self.width)
        return (
            self.origin[0] + i * self.spacing[0],
            self.origin[1] + j * self.spacing[1],
        )

    def value_range(self) -> tuple[float, float]:
        return float(self.values.min()), float(self.values.max())


class TimeVaryingField:
    """Immutable stack of scalar grids over uniform time steps."""

    def __init__(self, spec: GridSpec, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        expected = (spec.timesteps, spec.height, spec.width)
        if values.shape != expected:
            raise DataError(
                f"field shape {values.shape} does not match spec {expected}"
            )
        if not np.all(np.isfinite(values)):
            flat = int(np.flatnonzero(~np.isfinite(values.ravel()))[0])
            t, rem = divmod(flat, spec.height * spec.width)
            raise DataError(f"non-finite value at step {t}, vertex {rem}")
        values = values.copy()
        values.setflags(write=False)
        self.spec = spec
        self.values = values

    def slice(self, t: int) -> ScalarGrid:
        """Grid of the field at step ``t``. Pure read; raises on bad index."""
        if not 0 <= t < self.spec.timesteps:
            raise IndexError(
                f"time step {t} out of range [0, {self.spec.timesteps})"
            )
        return ScalarGrid(self.values[t], self.spec.spacing, self.spec.origin)

    def slices(self):
        for t in range(self.spec.timesteps):
            yield self.slice(t)

    def value_range(self) -> tuple[float, float]:
        return float(self.values.min()), float(self.values.max())
