"""Ingestion and persistence of pipeline inputs and outputs.

A field lives under a path stem: ``<stem>.meta`` is a flat ``key: value``
sidecar (width, height, timesteps, dx, dy, ox, oy, dt), and the samples are
either one file per step (``<stem>_<t>.raw`` / ``<stem>_<t>.csv``) or a
single ``<stem>.raw`` for the stacked layout. Raw files are little-endian
IEEE-754 float32, row-major; CSV files are height rows by width columns.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import DataError
from .fields import GridSpec, TimeVaryingField
from .jacobi import JacobiEdgeSet
from .mergetree import RobustnessReport
from .tracking import Track

FORMATS = ("raw-f32", "csv-stack", "stacked-raw")

_META_KEYS = ("width", "height", "timesteps", "dx", "dy", "ox", "oy", "dt")


def write_metadata(spec: GridSpec, stem: Path) -> Path:
    path = Path(f"{stem}.meta")
    rows = {
        "width": spec.width,
        "height": spec.height,
        "timesteps": spec.timesteps,
        "dx": spec.spacing[0],
        "dy": spec.spacing[1],
        "ox": spec.origin[0],
        "oy": spec.origin[1],
        "dt": spec.time_spacing,
    }
    path.write_text("".join(f"{k}: {v}\n" for k, v in rows.items()))
    return path


def read_metadata(stem: Path) -> GridSpec:
    path = Path(f"{stem}.meta")
    if not path.exists():
        raise DataError(f"metadata sidecar not found: {path}")
    values: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise DataError(f"{path}:{lineno}: expected 'key: value', got {line!r}")
        key, _, val = line.partition(":")
        values[key.strip()] = val.strip()
    for key in ("width", "height", "timesteps"):
        if key not in values:
            raise DataError(f"{path}: missing required key {key!r}")
    try:
        return GridSpec(
            width=int(values["width"]),
            height=int(values["height"]),
            timesteps=int(values["timesteps"]),
            spacing=(float(values.get("dx", 1.0)), float(values.get("dy", 1.0))),
            origin=(float(values.get("ox", 0.0)), float(values.get("oy", 0.0))),
            time_spacing=float(values.get("dt", 1.0)),
        )
    except ValueError as exc:
        raise DataError(f"{path}: malformed metadata value ({exc})") from exc


def _read_raw(path: Path, expected: int) -> np.ndarray:
    if not path.exists():
        raise DataError(f"raw file not found: {path}")
    data = np.fromfile(path, dtype="<f4")
    if data.size != expected:
        raise DataError(
            f"{path}: expected {expected} float32 values ({expected * 4} bytes), "
            f"found {data.size} ({path.stat().st_size} bytes)"
        )
    bad = np.flatnonzero(~np.isfinite(data))
    if bad.size:
        raise DataError(f"{path}: non-finite value at offset {int(bad[0]) * 4} bytes")
    return data.astype(np.float64)


def _read_csv_slice(path: Path, spec: GridSpec) -> np.ndarray:
    if not path.exists():
        raise DataError(f"csv file not found: {path}")
    rows = []
    with path.open(newline="") as fh:
        for rowno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != spec.width:
                raise DataError(
                    f"{path}: row {rowno} has {len(row)} columns, expected {spec.width}"
                )
            try:
                vals = [float(x) for x in row]
            except ValueError as exc:
                raise DataError(f"{path}: row {rowno}: {exc}") from exc
            for col, v in enumerate(vals):
                if not np.isfinite(v):
                    raise DataError(
                        f"{path}: non-finite value at row {rowno}, column {col + 1}"
                    )
            rows.append(vals)
    if len(rows) != spec.height:
        raise DataError(
            f"{path}: found {len(rows)} rows, expected {spec.height}"
        )
    return np.asarray(rows, dtype=np.float64)


def load_field(stem, fmt: str) -> TimeVaryingField:
    """Load a field from ``<stem>.meta`` plus its data files."""
    if fmt not in FORMATS:
        raise DataError(f"unknown format {fmt!r}; choose from {FORMATS}")
    stem = Path(stem)
    spec = read_metadata(stem)
    n = spec.width * spec.height
    if fmt == "stacked-raw":
        data = _read_raw(Path(f"{stem}.raw"), n * spec.timesteps)
        values = data.reshape(spec.timesteps, spec.height, spec.width)
    elif fmt == "raw-f32":
        slabs = [
            _read_raw(Path(f"{stem}_{t}.raw"), n).reshape(spec.height, spec.width)
            for t in range(spec.timesteps)
        ]
        values = np.stack(slabs)
    else:
        slabs = [
            _read_csv_slice(Path(f"{stem}_{t}.csv"), spec)
            for t in range(spec.timesteps)
        ]
        values = np.stack(slabs)
    return TimeVaryingField(spec, values)


def save_field(field: TimeVaryingField, stem, fmt: str) -> None:
    """Write a field under a path stem, float32 on disk."""
    if fmt not in FORMATS:
        raise DataError(f"unknown format {fmt!r}; choose from {FORMATS}")
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    write_metadata(field.spec, stem)
    if fmt == "stacked-raw":
        field.values.astype("<f4").tofile(f"{stem}.raw")
    elif fmt == "raw-f32":
        for t in range(field.spec.timesteps):
            field.values[t].astype("<f4").tofile(f"{stem}_{t}.raw")
    else:
        for t in range(field.spec.timesteps):
            np.savetxt(f"{stem}_{t}.csv", field.values[t], delimiter=",", fmt="%.9g")


# ---------------------------------------------------------------------------
# Track and report writers.

TRACK_CSV_HEADER = "track_id,timestep,x,y,degree,component_cells"


def write_tracks(tracks: list[Track], path, fmt: str, time_spacing: float = 1.0) -> None:
    """Write tracks as CSV rows or VTK legacy polydata (time on the z axis)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        lines = [TRACK_CSV_HEADER]
        for tr in tracks:
            for nd in tr.nodes:
                lines.append(
                    f"{tr.id},{nd.t},{nd.x:.9g},{nd.y:.9g},{nd.degree},{nd.cells}"
                )
        path.write_text("\n".join(lines) + "\n")
        return
    if fmt != "vtk-legacy-polydata":
        raise DataError(f"unknown track format {fmt!r}")
    out = [
        "# vtk DataFile Version 3.0",
        "jacobitrack tracks",
        "ASCII",
        "DATASET POLYDATA",
    ]
    npoints = sum(len(tr.nodes) for tr in tracks)
    out.append(f"POINTS {npoints} double")
    offsets = []
    k = 0
    for tr in tracks:
        offsets.append(k)
        for nd in tr.nodes:
            out.append(f"{nd.x:.9g} {nd.y:.9g} {nd.t * time_spacing:.9g}")
            k += 1
    polylines = [tr for tr in tracks if len(tr.nodes) >= 2]
    size = sum(len(tr.nodes) + 1 for tr in polylines)
    out.append(f"LINES {len(polylines)} {size}")
    for tr, start in zip(tracks, offsets):
        if len(tr.nodes) < 2:
            continue
        ids = " ".join(str(start + m) for m in range(len(tr.nodes)))
        out.append(f"{len(tr.nodes)} {ids}")
    path.write_text("\n".join(out) + "\n")


def write_stats(stats: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{k}: {v}\n" for k, v in stats.items()))


def read_stats(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if ":" in line:
            k, _, v = line.partition(":")
            out[k.strip()] = v.strip()
    return out


def write_graph_dumps(graph, out_dir) -> None:
    """nodes.csv (t,id,degree,cx,cy,cells) and edges.csv (t,id_from,id_to,overlap)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["t,id,degree,cx,cy,cells"]
    for (t, cid), comp in sorted(graph.nodes.items()):
        lines.append(
            f"{t},{cid},{comp.degree},{comp.centroid[0]:.9g},"
            f"{comp.centroid[1]:.9g},{comp.cell_count}"
        )
    (out_dir / "nodes.csv").write_text("\n".join(lines) + "\n")
    lines = ["t,id_from,id_to,overlap"]
    for e in graph.edges:
        lines.append(f"{e.t},{e.id_from},{e.id_to},{e.overlap}")
    (out_dir / "edges.csv").write_text("\n".join(lines) + "\n")


def write_jacobi_edges(edge_set: JacobiEdgeSet, path, spec: GridSpec,
                       fmt: str = "csv") -> None:
    """Edge dump: ax,ay,at,bx,by,bt,lambda,kind; or VTK lines for comparison."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dx, dy = spec.spacing
    ox, oy = spec.origin
    if fmt == "csv":
        lines = ["ax,ay,at,bx,by,bt,lambda,kind"]
        for e in edge_set.edges:
            ax, ay = ox + e.a[0] * dx, oy + e.a[1] * dy
            bx, by = ox + e.b[0] * dx, oy + e.b[1] * dy
            lines.append(
                f"{ax:.9g},{ay:.9g},{e.a[2]},{bx:.9g},{by:.9g},{e.b[2]},"
                f"{e.lam:.9g},{e.kind}"
            )
        path.write_text("\n".join(lines) + "\n")
        return
    if fmt != "vtk-legacy-polydata":
        raise DataError(f"unknown jacobi dump format {fmt!r}")
    out = [
        "# vtk DataFile Version 3.0",
        "jacobitrack baseline jacobi set",
        "ASCII",
        "DATASET POLYDATA",
        f"POINTS {2 * len(edge_set)} double",
    ]
    for e in edge_set.edges:
        out.append(
            f"{ox + e.a[0] * dx:.9g} {oy + e.a[1] * dy:.9g} "
            f"{e.a[2] * spec.time_spacing:.9g}"
        )
        out.append(
            f"{ox + e.b[0] * dx:.9g} {oy + e.b[1] * dy:.9g} "
            f"{e.b[2] * spec.time_spacing:.9g}"
        )
    out.append(f"LINES {len(edge_set)} {3 * len(edge_set)}")
    for k in range(len(edge_set)):
        out.append(f"2 {2 * k} {2 * k + 1}")
    path.write_text("\n".join(out) + "\n")


def write_critical_points(rows, path) -> None:
    """rows: iterable of (t, vertex, x, y, kind, index, persistence)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["t,vertex,x,y,kind,index,persistence"]
    for t, v, x, y, kind, index, pers in rows:
        lines.append(f"{t},{v},{x:.9g},{y:.9g},{kind},{index},{pers:.9g}")
    path.write_text("\n".join(lines) + "\n")


def write_robustness(report: RobustnessReport, t: int, path, append: bool = False) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [] if append and path.exists() else ["t,vertex,kind,index,robustness"]
    for c, rob in report.rows:
        lines.append(f"{t},{c.vertex},{c.kind},{c.index},{rob:.9g}")
    mode = "a" if append and path.exists() else "w"
    with path.open(mode) as fh:
        fh.write("\n".join(lines) + "\n")
