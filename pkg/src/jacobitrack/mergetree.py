"""Merge tree of the magnitude field and static robustness of criticals.

Robustness is diagnostic: it reports, per critical point, the sublevel
threshold at which the component containing it first has degree zero, i.e.
the perturbation effort needed to cancel it against opposite-index partners.
The tracking pipeline consumes the clustering threshold directly; this
module exists so a sensible threshold can be read off the data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .criticals import CriticalPoint, neighbor_table
from .errors import DataError
from .gradient import MagnitudeGrid


@dataclass
class MergeTreeNode:
    vertex: int
    value: float
    kind: str  # "leaf" | "saddle" | "root"
    degree: int
    parent: int | None = None


@dataclass
class MergeTree:
    nodes: list[MergeTreeNode]
    entry: dict[int, int]  # vertex -> node index where it enters the tree
    root: int

    def leaves(self) -> list[MergeTreeNode]:
        return [n for n in self.nodes if n.kind == "leaf"]

    def saddles(self) -> list[MergeTreeNode]:
        return [n for n in self.nodes if n.kind == "saddle"]


@dataclass
class RobustnessReport:
    rows: list[tuple[CriticalPoint, float]] = field(default_factory=list)

    def by_vertex(self) -> dict[int, float]:
        return {c.vertex: r for c, r in self.rows}

    def finite_values(self) -> list[float]:
        return sorted(r for _, r in self.rows if math.isfinite(r) and r > 0)


def merge_tree(mag: MagnitudeGrid) -> MergeTree:
    """Sublevel-set merge tree over triangulation adjacency.

    Leaves sit at local minima of the magnitude field under the shared
    (value, index) order; join nodes record component merges. A critical
    vertex absorbed into an existing component (pinned zeros can be
    adjacent) is recorded as an internal node too, so every degree change
    is visible when walking ancestor chains. Node degrees are the component
    degree right after the node's event; a synthetic root closes the tree at
    the last vertex.
    """
    vals = mag.magnitudes.ravel()
    n = vals.size
    contrib = np.zeros(n, dtype=np.int64)
    for c in mag.criticals:
        contrib[c.vertex] += c.index
    nbrs = neighbor_table(mag.width, mag.height)
    order = np.lexsort((np.arange(n), vals))

    parent = np.full(n, -1, np.int64)
    comp_degree: dict[int, int] = {}
    comp_latest: dict[int, int] = {}
    nodes: list[MergeTreeNode] = []
    entry: dict[int, int] = {}

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for v_np in order:
        v = int(v_np)
        roots = []
        for u in nbrs[v]:
            if u < 0 or parent[u] == -1:
                continue
            r = find(int(u))
            if r not in roots:
                roots.append(r)
        if not roots:
            parent[v] = v
            node = MergeTreeNode(v, float(vals[v]), "leaf", int(contrib[v]))
            nodes.append(node)
            comp_degree[v] = int(contrib[v])
            comp_latest[v] = len(nodes) - 1
            entry[v] = len(nodes) - 1
            continue
        survivor = roots[0]
        if len(roots) == 1:
            parent[v] = survivor
            comp_degree[survivor] += int(contrib[v])
            if contrib[v] != 0:
                node = MergeTreeNode(
                    v, float(vals[v]), "saddle", comp_degree[survivor]
                )
                nodes.append(node)
                nodes[comp_latest[survivor]].parent = len(nodes) - 1
                comp_latest[survivor] = len(nodes) - 1
                entry[v] = len(nodes) - 1
            continue
        deg = sum(comp_degree[r] for r in roots) + int(contrib[v])
        node = MergeTreeNode(v, float(vals[v]), "saddle", deg)
        nodes.append(node)
        for r in roots:
            nodes[comp_latest[r]].parent = len(nodes) - 1
            parent[r] = survivor
        parent[v] = survivor
        comp_degree[survivor] = deg
        comp_latest[survivor] = len(nodes) - 1
        entry[v] = len(nodes) - 1

    top = int(order[-1])
    final = comp_latest[find(top)]
    if nodes[final].vertex == top:
        nodes[final].kind = "root"
        root_idx = final
    else:
        nodes.append(
            MergeTreeNode(top, float(vals[top]), "root", nodes[final].degree)
        )
        root_idx = len(nodes) - 1
        nodes[final].parent = root_idx
    return MergeTree(nodes=nodes, entry=entry, root=root_idx)


def static_robustness(tree: MergeTree, criticals: list[CriticalPoint]) -> RobustnessReport:
    """Magnitude of the lowest settled ancestor with degree zero, per critical.

    A node is settled when its parent sits at a strictly larger value, i.e.
    it is the last event at its threshold along the chain; only settled
    states correspond to complete sublevel sets. Criticals whose chain never
    reaches degree zero get infinity.
    """
    report = RobustnessReport()
    for c in criticals:
        if c.vertex not in tree.entry:
            raise DataError(
                f"critical vertex {c.vertex} is not a node of the merge tree"
            )
        i: int | None = tree.entry[c.vertex]
        rob = math.inf
        while i is not None:
            node = tree.nodes[i]
            p = node.parent
            settled = p is None or tree.nodes[p].value > node.value
            if settled and node.degree == 0:
                rob = node.value
                break
            i = p
        report.rows.append((c, rob))
    return report


def suggest_delta(report: RobustnessReport, fallback: float) -> float:
    """Pick a clustering threshold from the robustness distribution.

    Uses the geometric midpoint of the largest multiplicative gap between
    consecutive finite robustness values; with fewer than two distinct
    values, falls back to the supplied default.
    """
    vals = sorted(set(report.finite_values()))
    if len(vals) < 2:
        return fallback if not vals else float(vals[0])
    best_ratio = 1.0
    best = (vals[0], vals[1])
    for lo, hi in zip(vals, vals[1:]):
        if lo <= 0:
            continue
        ratio = hi / lo
        if ratio > best_ratio:
            best_ratio = ratio
            best = (lo, hi)
    return math.sqrt(best[0] * best[1])
