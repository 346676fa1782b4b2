"""Baseline piecewise-linear Jacobi set of (field, time) on the space-time mesh.

The space-time domain is tetrahedralized by extending each slice's
Freudenthal triangulation: temporal edges join corresponding vertices of
steps t and t+1, and each triangular prism is split into three tetrahedra
with diagonals running from the lowest-index bottom vertex of each quad face
to the other top vertex. Neighbouring prisms therefore agree on shared faces.

An edge is critical when the family h = f + lambda_e * time restricted to the
edge's link has a lower set that is not a single proper arc. Spatial edges
never flatten h for finite lambda (the time field is constant along them and
value ties are broken symbolically), so only temporal and prism-diagonal
edges are classified. Comparisons reduce to exact per-layer tests:
h(w) - h(edge) equals f(w) - f(a) on the lower layer and f(w) - f(b) on the
upper layer, with index tie-breaks, so no floating lambda arithmetic enters
the classification.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .criticals import arc_classification
from .errors import DataError
from .fields import TimeVaryingField

MINIMUM_EDGE = "minimum-edge"
SADDLE_EDGE = "saddle-edge"
MAXIMUM_EDGE = "maximum-edge"
_EDGE_KIND = {1: MINIMUM_EDGE, 2: SADDLE_EDGE, 3: MAXIMUM_EDGE}

VERTICAL = "vertical"

# Link stencils per edge family: (layer, dj, di) offsets from the edge's base
# vertex a=(j,i) at layer t, in cyclic order around the edge. Ref offsets
# locate the layer-(t+1) endpoint b relative to a.
_FAMILIES = {
    "temporal": {
        "entries": ((1, 0, 1), (1, 1, 1), (1, 1, 0), (0, 0, -1), (0, -1, -1), (0, -1, 0)),
        "b_off": (0, 0),
    },
    "hdiag": {
        "entries": ((0, 0, 1), (1, 1, 1), (1, 0, 0), (0, -1, 0)),
        "b_off": (0, 1),
    },
    "vdiag": {
        "entries": ((0, 1, 0), (1, 1, 1), (1, 0, 0), (0, 0, -1)),
        "b_off": (1, 0),
    },
    "nediag": {
        "entries": ((0, 1, 1), (0, 0, 1), (1, 0, 1), (1, 0, 0), (1, 1, 0), (0, 1, 0)),
        "b_off": (1, 1),
    },
}


def lambda_e(f_a: float, f_b: float, g_a: float, g_b: float):
    """Value of lambda flattening f + lambda*g along an edge.

    Returns the distinguished constant ``VERTICAL`` when g(a) = g(b): an
    edge inside one time slice never flattens for finite lambda.
    """
    if g_a == g_b:
        return VERTICAL
    return (f_b - f_a) / (g_a - g_b)


@dataclass(frozen=True)
class JacobiEdge:
    """Critical edge of the space-time mesh; endpoints are (i, j, t) triples.

    ``multiplicity`` counts the strands of the Jacobi set carried by the
    edge: 1 for extremum edges, k - 1 for a saddle edge whose lower link
    splits into k arcs. Vertex degrees are even when counted with
    multiplicity, mirroring the index-(1-k) convention for multi-saddle
    vertices.
    """

    a: tuple[int, int, int]
    b: tuple[int, int, int]
    lam: float
    kind: str
    multiplicity: int = 1


@dataclass(frozen=True)
class SpaceTimeMesh:
    """Implicit tetrahedral mesh over the stacked grid."""

    width: int
    height: int
    timesteps: int

    def spatial_index(self, i: int, j: int) -> int:
        return j * self.width + i

    def prism_tets(self, j: int, i: int, upper: bool, t: int):
        """The three tetrahedra of one prism, as spacetime (i, j, t) tuples.

        ``upper`` selects the triangle of quad (j, i) above (True) or below
        the (i,j)->(i+1,j+1) diagonal. Vertices of the base triangle are
        sorted by spatial index a < b < c; tets are (a,b,c,c'), (a,b,b',c'),
        (a,a',b',c') with primes one step up in time.
        """
        if upper:
            tri = ((i, j), (i + 1, j + 1), (i, j + 1))
        else:
            tri = ((i, j), (i + 1, j), (i + 1, j + 1))
        tri = tuple(sorted(tri, key=lambda p: self.spatial_index(*p)))
        a, b, c = tri
        lo = lambda p: (p[0], p[1], t)
        hi = lambda p: (p[0], p[1], t + 1)
        return (
            (lo(a), lo(b), lo(c), hi(c)),
            (lo(a), lo(b), hi(b), hi(c)),
            (lo(a), hi(a), hi(b), hi(c)),
        )

    def edge_family(self, a, b):
        """Family name for edge (a, b); endpoints sorted by time first."""
        (ia, ja, ta), (ib, jb, tb) = sorted((a, b), key=lambda p: p[2])
        dt, dj, di = tb - ta, jb - ja, ib - ia
        if dt == 0:
            if (dj, di) in ((0, 1), (1, 0), (1, 1), (0, -1), (-1, 0), (-1, -1)):
                return "spatial"
            raise DataError(f"{a}-{b} is not a mesh edge")
        if dt != 1:
            raise DataError(f"{a}-{b} spans more than one time step")
        fam = {(0, 0): "temporal", (0, 1): "hdiag", (1, 0): "vdiag", (1, 1): "nediag"}
        if (dj, di) not in fam:
            raise DataError(f"{a}-{b} is not a mesh edge")
        return fam[(dj, di)]

    def edge_link(self, a, b):
        """Ordered link vertices of a temporal/diagonal edge, plus closed flag."""
        (ia, ja, ta), (ib, jb, tb) = sorted((a, b), key=lambda p: p[2])
        name = self.edge_family(a, b)
        if name == "spatial":
            raise DataError("spatial edges are not classified; link not assembled")
        entries = _FAMILIES[name]["entries"]
        link = []
        ok = []
        for layer, dj, di in entries:
            jj, ii = ja + dj, ia + di
            valid = 0 <= jj < self.height and 0 <= ii < self.width
            ok.append(valid)
            if valid:
                link.append((ii, jj, ta + layer))
        return link, all(ok)


def _slab_family(f0, f1, name):
    """Classify all edges of one family in one slab.

    Returns (kinds, lam, base region offset) with kinds shaped like the
    family's base region: every (j, i) in the region hosts one edge from
    (j, i, t) to (j + bj, i + bi, t + 1).
    """
    h, w = f0.shape
    spec = _FAMILIES[name]
    bj, bi = spec["b_off"]
    hr, wr = h - bj, w - bi
    sp = np.arange(h * w, dtype=np.int64).reshape(h, w)

    fr0 = f0[:hr, :wr]
    sr0 = sp[:hr, :wr]
    fr1 = f1[bj : bj + hr, bi : bi + wr]
    sr1 = sp[bj : bj + hr, bi : bi + wr]

    entries = spec["entries"]
    k = len(entries)
    lower = np.zeros((k, hr, wr), dtype=bool)
    valid = np.zeros((k, hr, wr), dtype=bool)
    for d, (layer, dj, di) in enumerate(entries):
        f = f1 if layer else f0
        fr = fr1 if layer else fr0
        sr = sr1 if layer else sr0
        jlo, jhi = max(0, -dj), min(hr, h - dj)
        ilo, ihi = max(0, -di), min(wr, w - di)
        if jlo >= jhi or ilo >= ihi:
            continue
        base_j, base_i = slice(jlo, jhi), slice(ilo, ihi)
        nb_j, nb_i = slice(jlo + dj, jhi + dj), slice(ilo + di, ihi + di)
        fn, spn = f[nb_j, nb_i], sp[nb_j, nb_i]
        frr, srr = fr[base_j, base_i], sr[base_j, base_i]
        lower[d][base_j, base_i] = (fn < frr) | ((fn == frr) & (spn < srr))
        valid[d][base_j, base_i] = True
    kinds, ncomp = arc_classification(lower, valid)
    mult = np.where(kinds == 2, np.maximum(ncomp - 1, 1), 1).astype(np.int64)
    lam = fr0 - fr1
    return kinds, mult, lam, (bj, bi)


class JacobiEdgeSet:
    """All critical edges of the space-time mesh, in compact array form."""

    def __init__(self, mesh: SpaceTimeMesh, t, sa, sb, lam, kind_codes, mult=None):
        self.mesh = mesh
        self.t = np.asarray(t, dtype=np.int64)
        self.sa = np.asarray(sa, dtype=np.int64)
        self.sb = np.asarray(sb, dtype=np.int64)
        self.lam = np.asarray(lam, dtype=np.float64)
        self.kind_codes = np.asarray(kind_codes, dtype=np.uint8)
        if mult is None:
            mult = np.ones(self.t.size, dtype=np.int64)
        self.mult = np.asarray(mult, dtype=np.int64)

    def __len__(self) -> int:
        return self.t.size

    @cached_property
    def edges(self) -> list[JacobiEdge]:
        w = self.mesh.width
        out = []
        for t, sa, sb, lam, kc, m in zip(
            self.t, self.sa, self.sb, self.lam, self.kind_codes, self.mult
        ):
            ja, ia = divmod(int(sa), w)
            jb, ib = divmod(int(sb), w)
            out.append(
                JacobiEdge(
                    a=(ia, ja, int(t)),
                    b=(ib, jb, int(t) + 1),
                    lam=float(lam),
                    kind=_EDGE_KIND[int(kc)],
                    multiplicity=int(m),
                )
            )
        return out

    def counts_by_kind(self) -> dict[str, int]:
        return {
            name: int((self.kind_codes == code).sum())
            for code, name in _EDGE_KIND.items()
        }

    def vertex_degrees(self) -> np.ndarray:
        """(T, H*W) strand counts per spacetime vertex (multiplicity-weighted)."""
        deg = np.zeros((self.mesh.timesteps, self.mesh.width * self.mesh.height),
                       dtype=np.int64)
        np.add.at(deg, (self.t, self.sa), self.mult)
        np.add.at(deg, (self.t + 1, self.sb), self.mult)
        return deg

    def interior_odd_vertices(self) -> list[tuple[int, int, int]]:
        """Interior spacetime vertices with odd critical-edge degree.

        Empty by the even-degree property of PL Jacobi sets; boundary
        vertices are reported nowhere and asserted nowhere.
        """
        deg = self.vertex_degrees()
        w, h = self.mesh.width, self.mesh.height
        odd = (deg % 2) == 1
        out = []
        for t, sv in zip(*np.nonzero(odd)):
            j, i = divmod(int(sv), w)
            if 0 < i < w - 1 and 0 < j < h - 1 and 0 < t < self.mesh.timesteps - 1:
                out.append((int(i), j, int(t)))
        return out

    def count_between(self, verts_a: frozenset[int], verts_b: frozenset[int],
                      t: int) -> int:
        """Critical edges of slab t with endpoints in the given vertex sets."""
        m = self.t == t
        if not m.any():
            return 0
        sa, sb = self.sa[m], self.sb[m]
        hits = 0
        for u, v in zip(sa, sb):
            if int(u) in verts_a and int(v) in verts_b:
                hits += 1
        return hits


def classify_edge(mesh: SpaceTimeMesh, edge, field: TimeVaryingField) -> str:
    """Kind of a single mesh edge: regular / minimum / maximum / saddle.

    Spatial edges are regular by construction (the time field is flat along
    them and the symbolic order rules out flat scalar edges).
    """
    a, b = edge
    name = mesh.edge_family(a, b)
    if name == "spatial":
        return "regular"
    (ia, ja, ta), _ = sorted((a, b), key=lambda p: p[2])
    f0 = field.values[ta]
    f1 = field.values[ta + 1]
    kinds, _, _, _ = _slab_family(f0, f1, name)
    code = int(kinds[ja, ia])
    return "regular" if code == 0 else _EDGE_KIND[code].removesuffix("-edge")


def jacobi_set(field: TimeVaryingField) -> JacobiEdgeSet:
    """Classify every temporal and diagonal edge; collect the critical ones."""
    spec = field.spec
    mesh = SpaceTimeMesh(spec.width, spec.height, spec.timesteps)
    w = spec.width
    ts, sas, sbs, lams, kcs, mults = [], [], [], [], [], []
    for t in range(spec.timesteps - 1):
        f0 = field.values[t]
        f1 = field.values[t + 1]
        for name in ("temporal", "hdiag", "vdiag", "nediag"):
            kinds, mult, lam, (bj, bi) = _slab_family(f0, f1, name)
            jj, ii = np.nonzero(kinds)
            if jj.size == 0:
                continue
            ts.append(np.full(jj.size, t, dtype=np.int64))
            sas.append(jj * w + ii)
            sbs.append((jj + bj) * w + (ii + bi))
            lams.append(lam[jj, ii])
            kcs.append(kinds[jj, ii])
            mults.append(mult[jj, ii])
    if ts:
        return JacobiEdgeSet(
            mesh,
            np.concatenate(ts),
            np.concatenate(sas),
            np.concatenate(sbs),
            np.concatenate(lams),
            np.concatenate(kcs),
            np.concatenate(mults),
        )
    empty = np.empty(0)
    return JacobiEdgeSet(mesh, empty, empty, empty, empty, empty, empty)
