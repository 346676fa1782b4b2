"""Track repair by spatio-temporal proximity, plus short-track filtering.

Two merge rules run one pass each, in ascending birth order:

(a) a track starting at (t, x, y) adopts the track whose end lies within the
    spatial ball and within the preceding eps_t steps, preferring the
    closest end time. Ends at t itself are not candidates: a merged track
    must stay strictly time-increasing, and with eps_t = 0 no merge happens.

(b) a track ending at (t, x, y) splices onto a track that ends later, starts
    within [t - eps_t, t] and starts inside the ball; the adopted track's
    prefix up to t is dropped. Ties go to the closest start time.

Single passes keep the repair conservative: iterating to a fixpoint could
chain unrelated tracks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DataError
from .tracking import Track


@dataclass(frozen=True)
class PostprocessParams:
    eps_t: int = 0
    eps_s: float = 0.0
    eps_l: int = 0

    def __post_init__(self):
        if self.eps_t < 0 or self.eps_s < 0 or self.eps_l < 0:
            raise DataError("post-processing thresholds must be >= 0")


def _dist(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def merge_end_to_start(tracks: list[Track], eps_t: int, eps_s: float) -> list[Track]:
    """Rule (a): connect a nearby earlier end to each track start."""
    if eps_t < 0 or eps_s < 0:
        raise DataError("eps_t and eps_s must be >= 0")
    current: dict[int, Track] = {tr.id: tr for tr in tracks}
    alive = set(current)
    for tid in sorted(current, key=lambda i: (current[i].birth, i)):
        if tid not in alive:
            continue
        tau1 = current[tid]
        t0 = tau1.birth
        best = None
        for oid in alive:
            if oid == tid:
                continue
            tau2 = current[oid]
            if not (t0 - eps_t <= tau2.death < t0):
                continue
            if _dist(tau2.end_xy, tau1.start_xy) > eps_s:
                continue
            key = (t0 - tau2.death, oid)  # closest end time, then smaller id
            if best is None or key < best[0]:
                best = (key, oid)
        if best is not None:
            oid = best[1]
            tau2 = current[oid]
            merged = Track(id=tau2.id, nodes=tau2.nodes + tau1.nodes)
            current[oid] = merged
            alive.discard(tid)
            del current[tid]
    return [current[i] for i in sorted(alive, key=lambda i: (current[i].birth, i))]


def merge_overlapping(tracks: list[Track], eps_t: int, eps_s: float) -> list[Track]:
    """Rule (b): splice onto an overlapping later track, dropping its prefix."""
    if eps_t < 0 or eps_s < 0:
        raise DataError("eps_t and eps_s must be >= 0")
    current: dict[int, Track] = {tr.id: tr for tr in tracks}
    alive = set(current)
    for tid in sorted(current, key=lambda i: (current[i].birth, i)):
        if tid not in alive:
            continue
        tau1 = current[tid]
        t_end = tau1.death
        best = None
        for oid in alive:
            if oid == tid:
                continue
            tau2 = current[oid]
            if tau2.death <= t_end:
                continue
            if not (t_end - eps_t <= tau2.birth <= t_end):
                continue
            if _dist(tau2.start_xy, tau1.end_xy) > eps_s:
                continue
            key = (t_end - tau2.birth, oid)  # closest start time, then smaller id
            if best is None or key < best[0]:
                best = (key, oid)
        if best is not None:
            oid = best[1]
            tau2 = current[oid]
            suffix = [nd for nd in tau2.nodes if nd.t > t_end]
            merged = Track(id=tau1.id, nodes=tau1.nodes + suffix)
            current[tid] = merged
            alive.discard(oid)
            del current[oid]
    return [current[i] for i in sorted(alive, key=lambda i: (current[i].birth, i))]


def filter_short(tracks: list[Track], eps_l: int) -> list[Track]:
    """Drop tracks whose lifetime (death - birth) is below the threshold."""
    if eps_l < 0:
        raise DataError("eps_l must be >= 0")
    return [tr for tr in tracks if tr.length >= eps_l]


def postprocess(tracks: list[Track], params: PostprocessParams) -> list[Track]:
    """Apply rule (a), then rule (b), then the length filter."""
    out = merge_end_to_start(tracks, params.eps_t, params.eps_s)
    out = merge_overlapping(out, params.eps_t, params.eps_s)
    out = filter_short(out, params.eps_l)
    for tr in out:
        times = [nd.t for nd in tr.nodes]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DataError(f"track {tr.id} is not strictly time-increasing")
    return out
