"""Tracking graph over degree-nonzero sublevel components of adjacent steps.

Correspondence is spatial overlap in shared cells. Each component sends at
most one edge forward, to the successor with the largest overlap (ties to
the smaller component id); merges are therefore many-to-one. Tracks are the
maximal paths of the graph: at a merge node the incoming edge with the
largest overlap continues through it, the other predecessors end at the
merge node.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .errors import DataError
from .sublevel import ComponentSet, SublevelComponent


class TrackNode(NamedTuple):
    t: int
    component_id: int
    x: float
    y: float
    degree: int
    cells: int


@dataclass(frozen=True)
class GraphEdge:
    t: int  # earlier step of the pair
    id_from: int
    id_to: int
    overlap: int


@dataclass
class TrackGraph:
    nodes: dict[tuple[int, int], SublevelComponent]
    edges: list[GraphEdge]

    def successor(self) -> dict[tuple[int, int], tuple[int, int]]:
        return {(e.t, e.id_from): (e.t + 1, e.id_to) for e in self.edges}

    def predecessors(self) -> dict[tuple[int, int], list[GraphEdge]]:
        out: dict[tuple[int, int], list[GraphEdge]] = {}
        for e in self.edges:
            out.setdefault((e.t + 1, e.id_to), []).append(e)
        return out


@dataclass
class Track:
    id: int
    nodes: list[TrackNode]

    @property
    def birth(self) -> int:
        return self.nodes[0].t

    @property
    def death(self) -> int:
        return self.nodes[-1].t

    @property
    def length(self) -> int:
        return self.death - self.birth

    @property
    def start_xy(self) -> tuple[float, float]:
        return self.nodes[0].x, self.nodes[0].y

    @property
    def end_xy(self) -> tuple[float, float]:
        return self.nodes[-1].x, self.nodes[-1].y


def overlap(c1: SublevelComponent, c2: SublevelComponent) -> int:
    """Shared cell count under identical cell indexing across steps."""
    return len(c1.cells & c2.cells)


def track_graph(component_sets: list[ComponentSet]) -> TrackGraph:
    """Build the overlap graph; inputs must already be degree-0 free."""
    nodes: dict[tuple[int, int], SublevelComponent] = {}
    for cs in component_sets:
        for c in cs.components:
            if c.degree == 0:
                raise DataError(
                    f"component {c.id}@{c.t} has degree 0; drop those first"
                )
            nodes[(c.t, c.id)] = c
    edges: list[GraphEdge] = []
    for cs_a, cs_b in zip(component_sets, component_sets[1:]):
        for c1 in cs_a.components:
            best = None
            for c2 in cs_b.components:
                ov = overlap(c1, c2)
                if ov == 0:
                    continue
                key = (ov, -c2.id)
                if best is None or key > best[0]:
                    best = (key, c2, ov)
            if best is not None:
                edges.append(
                    GraphEdge(t=c1.t, id_from=c1.id, id_to=best[1].id, overlap=best[2])
                )
    return TrackGraph(nodes=nodes, edges=edges)


def _node_of(comp: SublevelComponent) -> TrackNode:
    return TrackNode(
        t=comp.t,
        component_id=comp.id,
        x=comp.centroid[0],
        y=comp.centroid[1],
        degree=comp.degree,
        cells=comp.cell_count,
    )


def extract_tracks(graph: TrackGraph) -> list[Track]:
    """Maximal paths of the graph, deterministically numbered.

    Tracks start at nodes without a predecessor. Following unique-successor
    edges, a path that reaches a merge node it does not win (largest overlap,
    ties to the smaller predecessor id) terminates there, with the merge node
    as its final element.
    """
    succ = graph.successor()
    preds = graph.predecessors()
    winner: dict[tuple[int, int], tuple[int, int]] = {}
    for key, incoming in preds.items():
        best = max(incoming, key=lambda e: (e.overlap, -e.id_from))
        winner[key] = (best.t, best.id_from)

    starts = sorted(k for k in graph.nodes if k not in preds)
    tracks = []
    for start in starts:
        path = [start]
        cur = start
        while cur in succ:
            nxt = succ[cur]
            path.append(nxt)
            if winner.get(nxt) != cur:
                break
            cur = nxt
        tracks.append(path)
    tracks.sort(key=lambda p: (p[0][0], graph.nodes[p[0]].id))
    return [
        Track(id=k, nodes=[_node_of(graph.nodes[key]) for key in path])
        for k, path in enumerate(tracks)
    ]
