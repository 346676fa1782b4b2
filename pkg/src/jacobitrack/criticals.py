"""Critical vertex analysis of piecewise-linear scalar grids.

The grid carries an implicit Freudenthal triangulation: every unit quad is
split along the diagonal from ``(i, j)`` to ``(i+1, j+1)``. The link of an
interior vertex is then the 6-cycle E, NE, N, W, SW, S; boundary links are
contiguous sub-paths of that cycle. Vertices are classified by the number of
connected components of their lower link, with ties resolved everywhere by
the global order (value, vertex index), so any input behaves like a Morse
function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from numba import njit

from .errors import DataError, InternalInvariantError
from .fields import ScalarGrid

REGULAR = "regular"
MINIMUM = "minimum"
SADDLE = "saddle"
MAXIMUM = "maximum"

_KIND_NAMES = {0: REGULAR, 1: MINIMUM, 2: SADDLE, 3: MAXIMUM}

# Link cycle of the Freudenthal triangulation as (dj, di) offsets.
LINK_OFFSETS = ((0, 1), (1, 1), (1, 0), (0, -1), (-1, -1), (-1, 0))


@dataclass(frozen=True)
class CriticalPoint:
    """A non-regular vertex of one time slice.

    ``index`` is the Poincare index of the matching gradient-field zero:
    +1 for extrema, 1 - k for a saddle whose lower link has k components
    (so -1 for a simple saddle). ``persistence`` is infinity until a pairing
    has been attached, see :func:`annotate_persistence`.
    """

    vertex: int
    t: int
    kind: str
    index: int
    value: float
    persistence: float = math.inf


class TotalOrder:
    """Strict total order on vertices: (value, vertex index) lexicographic."""

    def __init__(self, values: np.ndarray):
        self.values = np.asarray(values, dtype=np.float64).ravel()

    def less(self, u: int, v: int) -> bool:
        return (self.values[u], u) < (self.values[v], v)

    def argsort(self) -> np.ndarray:
        n = self.values.size
        return np.lexsort((np.arange(n), self.values))


def lower_link_stacks(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-direction lower/valid masks for every vertex, in link-cycle order.

    Returns two (6, H, W) boolean stacks: ``lower[d]`` marks vertices whose
    d-th link neighbour precedes them in the total order, ``valid[d]`` marks
    vertices for which that neighbour exists.
    """
    h, w = values.shape
    idx = np.arange(h * w, dtype=np.int64).reshape(h, w)
    lower = np.zeros((6, h, w), dtype=bool)
    valid = np.zeros((6, h, w), dtype=bool)
    for d, (dj, di) in enumerate(LINK_OFFSETS):
        vj = slice(max(0, -dj), h - max(0, dj))
        vi = slice(max(0, -di), w - max(0, di))
        nj = slice(max(0, dj), h - max(0, -dj))
        ni = slice(max(0, di), w - max(0, -di))
        nv = values[nj, ni]
        vv = values[vj, vi]
        lower[d][vj, vi] = (nv < vv) | ((nv == vv) & (idx[nj, ni] < idx[vj, vi]))
        valid[d][vj, vi] = True
    return lower, valid


def arc_classification(lower: np.ndarray, valid: np.ndarray):
    """Classify link cycles/paths from cyclically ordered lower-set masks.

    Input stacks have shape (k, ...); entry order must follow the link cycle,
    with invalid entries marking boundary truncation. Returns uint8 kind
    codes (0 regular, 1 minimum, 2 saddle, 3 maximum) and the lower-set
    component count per element.
    """
    low = lower & valid
    nlow = low.sum(axis=0)
    nval = valid.sum(axis=0)
    prev = np.roll(low, 1, axis=0)
    ncomp = (low & ~prev).sum(axis=0)
    kinds = np.zeros(lower.shape[1:], dtype=np.uint8)
    kinds[nlow == 0] = 1
    kinds[(nlow == nval) & (nlow > 0)] = 3
    undecided = kinds == 0
    kinds[undecided & (ncomp >= 2)] = 2
    return kinds, ncomp


def classify_grid(grid: ScalarGrid):
    """Kind codes, Poincare indices and lower-link component counts."""
    lower, valid = lower_link_stacks(grid.values)
    kinds, ncomp = arc_classification(lower, valid)
    poincare = np.zeros(kinds.shape, dtype=np.int32)
    poincare[(kinds == 1) | (kinds == 3)] = 1
    sad = kinds == 2
    poincare[sad] = 1 - ncomp[sad]
    return kinds, poincare, ncomp


def classify_vertex(grid: ScalarGrid, vertex: int, order: TotalOrder | None = None) -> str:
    """Class of one vertex; ``order`` defaults to the shared (value, index) order."""
    if not 0 <= vertex < grid.n_vertices:
        raise DataError(f"vertex {vertex} out of range")
    kinds, _, _ = classify_grid(grid)
    return _KIND_NAMES[int(kinds.ravel()[vertex])]


def critical_points(grid: ScalarGrid, t: int = 0) -> list[CriticalPoint]:
    """Every non-regular vertex of the slice, exactly once, in vertex order."""
    kinds, poincare, _ = classify_grid(grid)
    kflat = kinds.ravel()
    pflat = poincare.ravel()
    vflat = grid.values.ravel()
    out = []
    for v in np.flatnonzero(kflat):
        out.append(
            CriticalPoint(
                vertex=int(v),
                t=t,
                kind=_KIND_NAMES[int(kflat[v])],
                index=int(pflat[v]),
                value=float(vflat[v]),
            )
        )
    return out


def boundary_maximum_count(grid: ScalarGrid) -> int:
    """Number of boundary vertices whose lower link is their full link.

    Under partial-link classification these count as maxima with index +1
    but contribute 0 to the Euler characteristic, so the index sum over all
    critical points is 1 + this count for a disk-like grid.
    """
    kinds, _, _ = classify_grid(grid)
    h, w = kinds.shape
    interior = np.zeros((h, w), dtype=bool)
    interior[1:-1, 1:-1] = True
    return int(((kinds == 3) & ~interior).sum())


# ---------------------------------------------------------------------------
# Union-find sweeps (persistence pairing and cancellation).


@lru_cache(maxsize=32)
def neighbor_table(width: int, height: int) -> np.ndarray:
    """(n, 6) table of link neighbours per vertex, -1 where absent."""
    n = width * height
    idx = np.arange(n, dtype=np.int64).reshape(height, width)
    table = np.full((n, 6), -1, dtype=np.int64)
    for d, (dj, di) in enumerate(LINK_OFFSETS):
        vj = slice(max(0, -dj), height - max(0, dj))
        vi = slice(max(0, -di), width - max(0, di))
        nj = slice(max(0, dj), height - max(0, -dj))
        ni = slice(max(0, di), width - max(0, -di))
        table[idx[vj, vi].ravel(), d] = idx[nj, ni].ravel()
    table.setflags(write=False)
    return table


@njit(cache=True)
def _uf_find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _sublevel_sweep(vals, orig, order, pos, nbrs, eps, do_cancel,
                    pair_birth, pair_join, move_anchor):
    """Ascending union-find sweep over the vertex order.

    Records (birth, join) persistence pairs. With ``do_cancel`` set, a pair
    with persistence strictly below ``eps`` is cancelled instead: the younger
    component's members are flattened to the join value and tagged with the
    join vertex in ``move_anchor``. A cancellation that would push any member
    beyond ``eps`` of its original value is skipped and counted; the caller
    treats leftover skips as failure to converge. Returns (pairs recorded,
    cancellations applied, cancellations skipped).
    """
    n = order.shape[0]
    parent = np.full(n, -1, np.int64)
    birth = np.full(n, -1, np.int64)
    head = np.full(n, -1, np.int64)
    tail = np.full(n, -1, np.int64)
    nxt = np.full(n, -1, np.int64)
    roots = np.empty(8, np.int64)
    npairs = 0
    ncancel = 0
    nskip = 0
    for k in range(n):
        v = order[k]
        nr = 0
        for a in range(nbrs.shape[1]):
            u = nbrs[v, a]
            if u < 0 or parent[u] == -1:
                continue
            r = _uf_find(parent, u)
            dup = False
            for b in range(nr):
                if roots[b] == r:
                    dup = True
                    break
            if not dup:
                roots[nr] = r
                nr += 1
        if nr == 0:
            parent[v] = v
            birth[v] = v
            head[v] = v
            tail[v] = v
            nxt[v] = -1
            continue
        eld = roots[0]
        for b in range(1, nr):
            if pos[birth[roots[b]]] < pos[birth[eld]]:
                eld = roots[b]
        for b in range(nr):
            r = roots[b]
            if r == eld:
                continue
            bb = birth[r]
            pers = vals[v] - vals[bb]
            cancel = False
            if do_cancel and pers < eps:
                cancel = True
                u = head[r]
                while u != -1:
                    d = vals[v] - orig[u]
                    if d < 0.0:
                        d = -d
                    if d > eps:
                        cancel = False
                        break
                    u = nxt[u]
            if cancel:
                u = head[r]
                while u != -1:
                    vals[u] = vals[v]
                    move_anchor[u] = v
                    u = nxt[u]
                ncancel += 1
            else:
                if do_cancel and pers < eps:
                    nskip += 1
                pair_birth[npairs] = bb
                pair_join[npairs] = v
                npairs += 1
            parent[r] = eld
            nxt[tail[eld]] = head[r]
            tail[eld] = tail[r]
        parent[v] = eld
        nxt[tail[eld]] = v
        tail[eld] = v
        nxt[v] = -1
    return npairs, ncancel, nskip


def _run_sweep(vals: np.ndarray, nbrs: np.ndarray, eps: float, do_cancel: bool,
               orig: np.ndarray | None = None):
    n = vals.size
    if orig is None:
        orig = vals
    order = np.lexsort((np.arange(n), vals))
    pos = np.empty(n, np.int64)
    pos[order] = np.arange(n)
    pair_birth = np.empty(n, np.int64)
    pair_join = np.empty(n, np.int64)
    move_anchor = np.full(n, -1, np.int64)
    npairs, ncancel, nskip = _sublevel_sweep(
        vals, orig, order, pos, nbrs, eps, do_cancel,
        pair_birth, pair_join, move_anchor,
    )
    return order, pos, pair_birth[:npairs], pair_join[:npairs], move_anchor, ncancel, nskip


@dataclass(frozen=True)
class PersistencePair:
    extremum: int
    saddle: int
    persistence: float
    side: str  # "min" or "max"


def persistence_pairs(grid: ScalarGrid) -> list[PersistencePair]:
    """Extremum-saddle pairs of the slice.

    Min-saddle pairs come from the sublevel sweep of the field, max-saddle
    pairs from the sweep of the negated field. The global minimum and global
    maximum stay unpaired and are not reported.
    """
    vals = grid.values.ravel().astype(np.float64).copy()
    nbrs = neighbor_table(grid.width, grid.height)
    out = []
    _, _, pb, pj, _, _, _ = _run_sweep(vals.copy(), nbrs, -1.0, False)
    for b, j in zip(pb, pj):
        out.append(PersistencePair(int(b), int(j), float(vals[j] - vals[b]), "min"))
    _, _, pb, pj, _, _, _ = _run_sweep(-vals, nbrs, -1.0, False)
    for b, j in zip(pb, pj):
        out.append(PersistencePair(int(b), int(j), float(vals[b] - vals[j]), "max"))
    out.sort(key=lambda p: (p.persistence, p.extremum, p.side))
    return out


def annotate_persistence(grid: ScalarGrid, points: list[CriticalPoint]) -> list[CriticalPoint]:
    """Attach pairing persistence to critical points (inf when unpaired).

    A saddle that appears in several pairs gets the smallest one: the
    cheapest cancellation that would remove it.
    """
    best: dict[int, float] = {}
    for p in persistence_pairs(grid):
        for v in (p.extremum, p.saddle):
            if p.persistence < best.get(v, math.inf):
                best[v] = p.persistence
    return [replace(c, persistence=best.get(c.vertex, math.inf)) for c in points]


# ---------------------------------------------------------------------------
# Persistence simplification.

_MAX_ROUNDS = 64


def _group_components(group: np.ndarray, gset: set[int], nbrs: np.ndarray):
    """Connected components of a tie group, each sorted, ordered by smallest member."""
    comps = []
    seen: set[int] = set()
    for v in sorted(gset):
        if v in seen:
            continue
        comp = []
        stack = [v]
        seen.add(v)
        while stack:
            u = stack.pop()
            comp.append(u)
            for w in nbrs[u]:
                w = int(w)
                if w >= 0 and w in gset and w not in seen:
                    seen.add(w)
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def _anchored_cover(remaining: set[int], adj: dict[int, list[int]],
                    anchors: set[int]) -> bool:
    """True when every connected piece of ``remaining`` contains an anchor."""
    left = set(remaining)
    while left:
        seed = next(iter(left))
        comp_has = False
        stack = [seed]
        left.discard(seed)
        comp = [seed]
        while stack:
            u = stack.pop()
            if u in anchors:
                comp_has = True
            for w in adj[u]:
                if w in left:
                    left.discard(w)
                    stack.append(w)
                    comp.append(w)
        if not comp_has:
            return False
    return True


def _order_ok(order: list[int], adj: dict[int, list[int]],
              down: set[int], up: set[int]) -> bool:
    """Check the two-sided drain property of a plateau order.

    Every vertex needs an earlier neighbour unless it touches lower exterior
    ground (or is the designated first when there is none), and a later
    neighbour unless it touches higher ground (or is the designated last).
    """
    pos = {u: k for k, u in enumerate(order)}
    for k, u in enumerate(order):
        if u not in down and not (not down and k == 0):
            if not any(pos[w] < k for w in adj[u]):
                return False
        if u not in up and not (not up and k == len(order) - 1):
            if not any(pos[w] > k for w in adj[u]):
                return False
    return True


def _growth_order(comp: list[int], adj: dict[int, list[int]], seeds: set[int]):
    """Connected growth from the seed set, smallest-index-first frontier.

    Every non-seed vertex enters adjacent to an earlier one, so the order
    carries the downward half of the drain property by construction.
    """
    import heapq

    seed_list = sorted(seeds) if seeds else [comp[0]]
    in_comp = set(comp)
    heap = [s for s in seed_list if s in in_comp]
    heapq.heapify(heap)
    seen = set(heap)
    out = []
    while heap:
        u = heapq.heappop(heap)
        out.append(u)
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                heapq.heappush(heap, w)
    if len(out) != len(comp):
        return None
    return out


def _flow_order(comp: list[int], adj: dict[int, list[int]],
                down: set[int], up: set[int]):
    """Order a plateau by a discrete potential with flow from up to down.

    Unit current is injected at the upward contacts and drained at the
    downward ones; interior vertices are harmonic. Sources sit strictly
    above their neighbourhood mean and sinks strictly below, so sorting by
    the potential gives every vertex the required lower and higher
    neighbours except where exterior contact already provides them.
    Degenerate cases (flat pockets, singular systems) are left to the
    caller's validity check.
    """
    from scipy.sparse import csr_matrix
    from scipy.sparse.linalg import spsolve

    local = {u: k for k, u in enumerate(comp)}
    g = len(comp)
    snk = down if down else {comp[0]}
    src = up - snk
    if not src:
        src = {u for u in reversed(comp) if u not in snk}
        src = {next(iter(sorted(src, reverse=True)))} if src else set()
    if not src:
        return None
    rhs = np.zeros(g)
    for u in src:
        rhs[local[u]] = 1.0 / len(src)
    rows, cols, data = [], [], []
    for u in comp:
        k = local[u]
        if u in snk:  # Dirichlet 0 at the sinks
            rows.append(k)
            cols.append(k)
            data.append(1.0)
            rhs[k] = 0.0
            continue
        rows.append(k)
        cols.append(k)
        data.append(float(len(adj[u])))
        for w in adj[u]:
            if w in snk:
                continue  # sink value is 0
            rows.append(k)
            cols.append(local[w])
            data.append(-1.0)
    a = csr_matrix((data, (rows, cols)), shape=(g, g))
    try:
        h = spsolve(a, rhs)
    except Exception:
        return None
    if not np.all(np.isfinite(h)):
        return None
    ranks = np.lexsort((np.asarray(comp), h))
    return [comp[k] for k in ranks]


def _peel_order(comp: list[int], adj: dict[int, list[int]],
                down: set[int], up: set[int]):
    """Exact drain order by peeling the last position first.

    A vertex may be peeled when it is covered upward (exterior-above or an
    already-peeled neighbour) and its removal leaves every remaining piece
    attached to a downward anchor; any vertex of an anchored piece keeps an
    unpeeled neighbour on its path to the anchor, which becomes its earlier
    neighbour. Quadratic; used only for small stubborn groups.
    """
    anchors = down if down else {comp[0]}
    remaining = set(comp)
    placed: set[int] = set()
    rev: list[int] = []
    while remaining:
        pick = None
        for u in sorted(remaining):
            covered_up = (
                u in up
                or (not up and not placed)
                or any(w in placed for w in adj[u])
            )
            if not covered_up:
                continue
            if _anchored_cover(remaining - {u}, adj, anchors):
                pick = u
                break
        if pick is None:
            return None
        remaining.discard(pick)
        placed.add(pick)
        rev.append(pick)
    rev.reverse()
    return rev


_PEEL_LIMIT = 800


def _drain_component(comp: list[int], vals: np.ndarray, base: float,
                     nbrs: np.ndarray, gset: set[int]):
    """Order one plateau component so its baked ladder holds no new extrema.

    Every vertex must get a strictly lower neighbour (an earlier ladder
    vertex or strictly-lower exterior ground) and a strictly higher one (a
    later ladder vertex or higher exterior), except one designated end when
    the plateau lacks exterior contact on that side. Tries the harmonic
    order first and falls back to the exact quadratic peel for small groups.
    Returns None when no valid order was found; the caller leaves the tie
    for a later round.
    """
    down: set[int] = set()
    up: set[int] = set()
    for u in comp:
        for w in nbrs[u]:
            w = int(w)
            if w < 0 or w in gset:
                continue
            if vals[w] < base:
                down.add(u)
            elif vals[w] > base:
                up.add(u)
    cset = set(comp)
    adj = {u: [int(w) for w in nbrs[u] if int(w) in cset] for u in comp}
    if len(comp) == 1:
        return list(comp)
    order = _growth_order(comp, adj, down)
    if order is not None and _order_ok(order, adj, down, up):
        return order
    rev = _growth_order(comp, adj, up)
    if rev is not None:
        rev = rev[::-1]
        if _order_ok(rev, adj, down, up):
            return rev
    order = _flow_order(comp, adj, down, up)
    if order is not None and _order_ok(order, adj, down, up):
        return order
    if len(comp) <= _PEEL_LIMIT:
        return _peel_order(comp, adj, down, up)
    return None


def _bake_groups(vals: np.ndarray, orig: np.ndarray, touched: np.ndarray,
                 eps: float, nbrs: np.ndarray) -> None:
    """Spread touched value ties into strictly increasing micro-ladders.

    Ladder steps stay within the remaining per-vertex budget
    eps - |vals - orig| and inside the gap to the next distinct value, so
    neither the budget nor the order against other values is disturbed.
    Groups whose ladder cannot be built or represented are left tied for a
    later round.
    """
    n = vals.size
    order = np.lexsort((np.arange(n), vals))
    sv = vals[order]
    starts = np.flatnonzero(np.concatenate(([True], sv[1:] != sv[:-1])))
    ends = np.concatenate((starts[1:], [n]))
    for a, b in zip(starts, ends):
        if b - a < 2:
            continue
        group = order[a:b]
        if not touched[group].any():
            continue
        base = float(sv[a])
        gap_up = float(sv[b] - base) if b < n else max(1.0, abs(base))
        gap_down = float(base - sv[a - 1]) if a > 0 else max(1.0, abs(base))
        gset = set(int(v) for v in group)
        ladder: list[int] = []
        bad = False
        for comp in _group_components(group, gset, nbrs):
            sub = _drain_component(comp, vals, base, nbrs, gset)
            if sub is None:
                bad = True
                break
            ladder.extend(sub)
        if bad:
            continue
        lad = np.asarray(ladder, dtype=np.int64)
        size = lad.size
        ranks = np.arange(size, dtype=np.float64)
        room = np.maximum(eps - np.abs(vals[lad] - orig[lad]), 0.0)
        # spread into the wider adjacent gap; the pinned end keeps base
        upward = gap_up >= gap_down
        steps = ranks if upward else (size - 1 - ranks)
        gap = gap_up if upward else gap_down
        with np.errstate(divide="ignore", invalid="ignore"):
            per_step = np.where(steps > 0, room / np.maximum(steps, 1.0), np.inf)
        tau = 0.5 * min(float(per_step.min()), gap / size)
        if tau <= 0.0:
            continue
        cand = base + ranks * tau if upward else base - (size - 1 - ranks) * tau
        ok = (
            bool(np.all(np.diff(cand) > 0))
            and float(cand[-1]) < base + gap_up
            and float(cand[0]) > base - gap_down
            and bool(np.all(np.abs(cand - orig[lad]) <= eps))
        )
        if ok:
            vals[lad] = cand


def _cancel_pass(vals: np.ndarray, orig: np.ndarray, nbrs: np.ndarray,
                 eps: float) -> tuple[int, int]:
    _, _, _, _, move_anchor, ncancel, nskip = _run_sweep(vals, nbrs, eps, True, orig)
    if ncancel:
        _bake_groups(vals, orig, move_anchor >= 0, eps, nbrs)
    return ncancel, nskip


def resolve_threshold(grid: ScalarGrid, eps_p: float, mode: str) -> float:
    if eps_p < 0:
        raise DataError(f"persistence threshold must be >= 0, got {eps_p}")
    if mode == "absolute":
        return float(eps_p)
    if mode == "fraction-of-range":
        lo, hi = grid.value_range()
        return float(eps_p) * (hi - lo)
    raise DataError(f"unknown persistence mode {mode!r}")


def simplify_field(grid: ScalarGrid, eps_p: float, mode: str = "absolute") -> ScalarGrid:
    """Remove every finite persistence pair below the threshold.

    Cancellations flatten the younger branch onto its join value on both the
    sublevel and superlevel side, then bake the flattened plateaus into
    strictly distinct drain-ordered values so they do not re-introduce
    spurious criticals under (value, index) tie-breaking. Pointwise change is
    bounded by the threshold; criticals at or above it keep their vertices;
    the operation is idempotent. Inputs whose sub-threshold pairs are packed
    so densely that cancelling them all cannot fit the pointwise budget
    (e.g. data quantized in steps comparable to eps_p) raise
    InternalInvariantError instead of returning a loosened field.
    """
    eps = resolve_threshold(grid, eps_p, mode)
    if eps <= 0.0:
        return ScalarGrid(grid.values.copy(), grid.spacing, grid.origin)
    vals = grid.values.ravel().astype(np.float64).copy()
    orig = vals.copy()
    nbrs = neighbor_table(grid.width, grid.height)
    for _ in range(_MAX_ROUNDS):
        c_min, s_min = _cancel_pass(vals, orig, nbrs, eps)
        neg = -vals
        c_max, s_max = _cancel_pass(neg, -orig, nbrs, eps)
        vals = -neg
        if c_min == 0 and c_max == 0:
            if s_min or s_max:
                raise InternalInvariantError(
                    f"{s_min + s_max} pairs below the threshold cannot be "
                    "cancelled within the pointwise budget; the field's pair "
                    "structure is too dense for eps_p"
                )
            break
    else:
        raise InternalInvariantError(
            "persistence simplification did not converge after "
            f"{_MAX_ROUNDS} rounds"
        )
    drift = float(np.max(np.abs(vals - orig)))
    if drift > eps * (1 + 1e-9) + 1e-300:
        raise InternalInvariantError(
            f"simplification drifted {drift} past the budget {eps}"
        )
    return ScalarGrid(vals.reshape(grid.values.shape), grid.spacing, grid.origin)
