"""End-to-end pipeline: ingest or synthesize, simplify, cluster, track, write.

Stage order per step: persistence simplification -> critical points ->
gradient and pinned magnitude -> sublevel components -> degree-0 drop ->
overlap tracking -> post-processing -> writers. All per-step stages are pure
and may run on a thread pool; results are merged in step order, so output is
independent of the thread count.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from .criticals import annotate_persistence, critical_points, simplify_field
from .errors import ConfigError, DataError, InternalInvariantError
from .fields import ScalarGrid, TimeVaryingField
from .fileio import (
    FORMATS,
    load_field,
    write_critical_points,
    write_graph_dumps,
    write_jacobi_edges,
    write_robustness,
    write_stats,
    write_tracks,
)
from .gradient import gradient_field, magnitude_field
from .jacobi import jacobi_set
from .mergetree import merge_tree, static_robustness, suggest_delta
from .postprocess import PostprocessParams, postprocess
from .sublevel import components_at, drop_degree_zero
from .synth import PRESETS, make_preset
from .tracking import extract_tracks, track_graph


@dataclass
class PipelineConfig:
    input: str | None = None
    fmt: str | None = None
    synth: str | None = None
    synth_grid: tuple[int, int, int] | None = None
    delta: float | None = None  # None = suggest from the robustness report
    persistence: float = 0.01
    persistence_mode: str = "fraction-of-range"
    eps_t: int = 0
    eps_s: float = 0.0
    eps_l: int = 0
    emit_original_jacobi: bool = False
    robustness_report: bool = False
    dump_intermediate: bool = False
    threads: int = 1
    seed: int = 17
    out: str | None = None

    def validate(self) -> None:
        if (self.input is None) == (self.synth is None):
            raise ConfigError("exactly one of --input and --synth is required")
        if self.input is not None and self.fmt not in FORMATS:
            raise ConfigError(f"--format must be one of {FORMATS}")
        if self.synth is not None and self.synth not in PRESETS:
            raise ConfigError(
                f"unknown synth preset {self.synth!r}; choose from {sorted(PRESETS)}"
            )
        if self.delta is not None and self.delta < 0:
            raise ConfigError("--delta must be >= 0")
        if self.persistence < 0:
            raise ConfigError("--persistence must be >= 0")
        if self.persistence_mode not in ("absolute", "fraction-of-range"):
            raise ConfigError("--persistence-mode must be absolute or fraction-of-range")
        if self.eps_t < 0 or self.eps_s < 0 or self.eps_l < 0:
            raise ConfigError("post-processing thresholds must be >= 0")
        if self.threads < 1:
            raise ConfigError("--threads must be >= 1")


@dataclass
class PipelineResult:
    tracks: list
    graph: object
    component_sets: list
    delta: float
    stats: dict = dc_field(default_factory=dict)


def _map_steps(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    cfg.validate()
    stats: dict = {}
    times: dict[str, float] = {}

    def staged(name, fn):
        t0 = time.perf_counter()
        try:
            out = fn()
        except (DataError, InternalInvariantError) as exc:
            raise type(exc)(f"stage {name}: {exc}") from exc
        times[name] = time.perf_counter() - t0
        return out

    if cfg.synth is not None:
        field = staged(
            "synthesize", lambda: make_preset(cfg.synth, cfg.synth_grid, cfg.seed)[0]
        )
    else:
        field = staged("ingest", lambda: load_field(cfg.input, cfg.fmt))
    spec = field.spec
    T = spec.timesteps
    stats["vertices_per_step"] = spec.n_vertices
    stats["timesteps"] = T

    lo, hi = field.value_range()
    eps_abs = (
        cfg.persistence
        if cfg.persistence_mode == "absolute"
        else cfg.persistence * (hi - lo)
    )
    stats["persistence_threshold"] = f"{eps_abs:.9g}"

    simplified: list[ScalarGrid] = staged(
        "simplify",
        lambda: _map_steps(
            lambda t: simplify_field(field.slice(t), eps_abs, "absolute"),
            range(T),
            cfg.threads,
        ),
    )
    crits = staged(
        "criticals",
        lambda: _map_steps(
            lambda t: critical_points(simplified[t], t), range(T), cfg.threads
        ),
    )
    stats["critical_points_total"] = sum(len(c) for c in crits)

    mags = staged(
        "gradient",
        lambda: _map_steps(
            lambda t: magnitude_field(gradient_field(simplified[t]), crits[t]),
            range(T),
            cfg.threads,
        ),
    )

    delta = cfg.delta
    if delta is None:
        def _suggest():
            tree0 = merge_tree(mags[0])
            report0 = static_robustness(tree0, crits[0])
            fallback = 0.1 * max(float(mags[0].magnitudes.max()), 1e-12)
            return suggest_delta(report0, fallback)

        delta = staged("robustness", _suggest)
    stats["delta"] = f"{delta:.9g}"

    comp_sets = staged(
        "sublevel",
        lambda: _map_steps(
            lambda t: components_at(mags[t], delta, t), range(T), cfg.threads
        ),
    )
    stats["components_total"] = sum(len(cs.components) for cs in comp_sets)
    tracked_sets = [drop_degree_zero(cs) for cs in comp_sets]
    stats["degree_zero_dropped"] = stats["components_total"] - sum(
        len(cs.components) for cs in tracked_sets
    )

    graph = staged("tracking", lambda: track_graph(tracked_sets))
    stats["simplified_edges"] = len(graph.edges)
    raw_tracks = extract_tracks(graph)
    stats["tracks_before_postprocess"] = len(raw_tracks)

    params = PostprocessParams(cfg.eps_t, cfg.eps_s, cfg.eps_l)
    tracks = staged("postprocess", lambda: postprocess(raw_tracks, params))
    stats["tracks_after_postprocess"] = len(tracks)
    if len(tracks) > len(raw_tracks):
        raise InternalInvariantError("post-processing increased the track count")
    if graph.nodes and len(raw_tracks) > len(graph.nodes):
        raise InternalInvariantError("more tracks than graph nodes")

    edge_set = None
    if cfg.emit_original_jacobi:
        edge_set = staged("jacobi-baseline", lambda: jacobi_set(field))
        stats["original_jacobi_edges"] = len(edge_set)

    if cfg.out is not None:
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)

        def write_all():
            write_tracks(tracks, out_dir / "tracks.csv", "csv", spec.time_spacing)
            write_tracks(
                tracks, out_dir / "tracks.vtk", "vtk-legacy-polydata", spec.time_spacing
            )
            write_graph_dumps(graph, out_dir)
            if edge_set is not None:
                write_jacobi_edges(edge_set, out_dir / "jacobi_edges.csv", spec, "csv")
                write_jacobi_edges(
                    edge_set, out_dir / "jacobi_edges.vtk", spec, "vtk-legacy-polydata"
                )
            if cfg.robustness_report:
                rob_path = out_dir / "robustness.csv"
                if rob_path.exists():
                    rob_path.unlink()
                for t in range(T):
                    tree = merge_tree(mags[t])
                    rep = static_robustness(tree, crits[t])
                    write_robustness(rep, t, rob_path, append=t > 0)
            if cfg.dump_intermediate:
                rows = []
                for t in range(T):
                    for c in annotate_persistence(simplified[t], crits[t]):
                        x, y = simplified[t].vertex_xy(c.vertex)
                        rows.append((t, c.vertex, x, y, c.kind, c.index, c.persistence))
                write_critical_points(rows, out_dir / "critical_points.csv")
                for t in range(T):
                    mags[t].magnitudes.astype("<f4").tofile(
                        out_dir / f"magnitude_{t}.raw"
                    )

        staged("write", write_all)

    for name, dt in times.items():
        stats[f"seconds_{name}"] = f"{dt:.4f}"
    if cfg.out is not None:
        write_stats(stats, Path(cfg.out) / "stats.txt")
    return PipelineResult(
        tracks=tracks,
        graph=graph,
        component_sets=comp_sets,
        delta=float(delta),
        stats=stats,
    )


def scaling_probe(
    preset: str = "rotating-gaussians-small",
    base: tuple[int, int, int] = (32, 32, 40),
    delta: float | None = None,
    repeats: int = 1,
) -> list[dict]:
    """Wall-time table for the base size, doubled T, and doubled vertex count.

    Doubling either axis should change runtime by roughly the same factor;
    ratios are reported against the base run.
    """
    w, h, T = base
    w2 = int(round(w * 2**0.5))
    h2 = int(round(h * 2**0.5))
    sizes = [
        ("base", (w, h, T)),
        ("double-T", (w, h, 2 * T)),
        ("double-n", (w2, h2, T)),
    ]
    rows = []
    for name, grid in sizes:
        best = float("inf")
        for _ in range(max(1, repeats)):
            cfg = PipelineConfig(synth=preset, synth_grid=grid, delta=delta, out=None)
            t0 = time.perf_counter()
            run_pipeline(cfg)
            best = min(best, time.perf_counter() - t0)
        rows.append({"name": name, "grid": grid, "seconds": best})
    base_s = rows[0]["seconds"]
    for row in rows:
        row["ratio"] = row["seconds"] / base_s if base_s > 0 else float("nan")
    return rows
