"""Conservative sublevel sets of the gradient magnitude field.

A cell enters the reported sublevel set as soon as one of its corner
vertices is at or below the threshold, so even a component that is a single
pinned zero occupies a spatial region and can be tracked by overlap.
Components are connected under cell 4-adjacency (shared edge), which matches
the corner-to-incident-cells construction and cannot leak across touching
corners.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .criticals import CriticalPoint
from .errors import DataError, InternalInvariantError
from .gradient import MagnitudeGrid

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True, eq=False)
class SublevelComponent:
    """One connected component of the conservative sublevel set."""

    id: int
    t: int
    cells: frozenset[int]
    degree: int
    centroid: tuple[float, float]
    contained_criticals: tuple[CriticalPoint, ...]

    @property
    def cell_count(self) -> int:
        return len(self.cells)

    def vertices(self, width: int) -> frozenset[int]:
        """Corner vertices of the component's cells (grid vertex ids)."""
        out = set()
        cw = width - 1
        for cell in self.cells:
            cj, ci = divmod(cell, cw)
            base = cj * width + ci
            out.update((base, base + 1, base + width, base + width + 1))
        return frozenset(out)


@dataclass(frozen=True)
class ComponentSet:
    t: int
    delta: float
    components: tuple[SublevelComponent, ...]

    def total_degree(self) -> int:
        return sum(c.degree for c in self.components)


def sublevel_mask(mag: MagnitudeGrid, delta: float) -> np.ndarray:
    """(H-1, W-1) mask of cells with at least one corner at or below delta."""
    if delta < 0:
        raise DataError(f"delta must be >= 0, got {delta}")
    below = mag.magnitudes <= delta
    return below[:-1, :-1] | below[:-1, 1:] | below[1:, :-1] | below[1:, 1:]


def sublevel_cells(mag: MagnitudeGrid, delta: float) -> set[int]:
    """Cell ids of the conservative delta-sublevel set."""
    mask = sublevel_mask(mag, delta)
    return set(int(c) for c in np.flatnonzero(mask.ravel()))


def _incident_cell(vertex: int, width: int, height: int) -> int:
    j, i = divmod(vertex, width)
    return min(j, height - 2) * (width - 1) + min(i, width - 2)


def components(
    cells: set[int],
    mag: MagnitudeGrid,
    criticals: list[CriticalPoint] | None = None,
    delta: float = 0.0,
    t: int = 0,
) -> ComponentSet:
    """Label the cell set into 4-connected components.

    Every critical vertex lands in exactly one component through its
    incident cells (those always form a 4-connected 2x2 block inside the
    sublevel set). Component ids ascend by smallest contained cell id, so
    repeated runs label identically.
    """
    if criticals is None:
        criticals = list(mag.criticals)
    h, w = mag.magnitudes.shape
    mask = np.zeros((h - 1, w - 1), dtype=bool)
    if cells:
        flat = np.fromiter(cells, dtype=np.int64, count=len(cells))
        mask.ravel()[flat] = True
    labels, nlab = ndimage.label(mask, structure=_CROSS)
    if nlab == 0:
        return ComponentSet(t=t, delta=delta, components=())

    flat_labels = labels.ravel()
    order = []
    for lab in range(1, nlab + 1):
        first = int(np.flatnonzero(flat_labels == lab)[0])
        order.append((first, lab))
    order.sort()
    remap = {lab: new_id for new_id, (_, lab) in enumerate(order)}

    crit_by_comp: dict[int, list[CriticalPoint]] = {}
    for c in criticals:
        cell = _incident_cell(c.vertex, w, h)
        lab = int(flat_labels[cell])
        if lab == 0:
            raise InternalInvariantError(
                f"critical vertex {c.vertex} has no sublevel cell at delta={delta}"
            )
        crit_by_comp.setdefault(remap[lab], []).append(c)

    comps = []
    for new_id, (_, lab) in enumerate(order):
        cell_ids = np.flatnonzero(flat_labels == lab)
        cj, ci = np.divmod(cell_ids, w - 1)
        cx = mag.origin[0] + (ci.mean() + 0.5) * mag.spacing[0]
        cy = mag.origin[1] + (cj.mean() + 0.5) * mag.spacing[1]
        inside = tuple(sorted(crit_by_comp.get(new_id, []), key=lambda c: c.vertex))
        comps.append(
            SublevelComponent(
                id=new_id,
                t=t,
                cells=frozenset(int(c) for c in cell_ids),
                degree=sum(c.index for c in inside),
                centroid=(float(cx), float(cy)),
                contained_criticals=inside,
            )
        )
    return ComponentSet(t=t, delta=delta, components=tuple(comps))


def components_at(mag: MagnitudeGrid, delta: float, t: int = 0) -> ComponentSet:
    """Convenience: sublevel cells plus labelling in one call."""
    return components(sublevel_cells(mag, delta), mag, list(mag.criticals), delta, t)


def drop_degree_zero(cs: ComponentSet) -> ComponentSet:
    """Remove components whose enclosed Poincare indices sum to zero."""
    return replace(
        cs, components=tuple(c for c in cs.components if c.degree != 0)
    )
