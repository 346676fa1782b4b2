"""Command line driver.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 internal
invariant violation.
"""
from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, DataError, InternalInvariantError
from .fileio import FORMATS
from .pipeline import PipelineConfig, run_pipeline, scaling_probe
from .synth import PRESETS


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="jacobitrack",
        description=(
            "Compute simplified feature-tracking graphs for 2D time-varying "
            "scalar fields, with an optional baseline PL Jacobi set."
        ),
    )
    src = p.add_argument_group("input")
    src.add_argument("--input", help="path stem of an ingested field")
    src.add_argument("--format", choices=FORMATS, help="on-disk layout of --input")
    src.add_argument("--synth", choices=sorted(PRESETS), help="synthetic preset")
    src.add_argument(
        "--synth-grid",
        metavar="WxHxT",
        help="override the preset grid, e.g. 64x64x300",
    )
    params = p.add_argument_group("parameters")
    params.add_argument(
        "--delta",
        default="auto",
        help="sublevel clustering threshold; 'auto' reads it off the "
        "robustness report of the first step (default: auto)",
    )
    params.add_argument(
        "--persistence", type=float, default=0.01,
        help="persistence threshold for per-step pre-simplification",
    )
    params.add_argument(
        "--persistence-mode",
        choices=("absolute", "fraction-of-range"),
        default="fraction-of-range",
    )
    params.add_argument("--eps-t", type=int, default=0,
                        help="max temporal gap bridged when repairing tracks")
    params.add_argument("--eps-s", type=float, default=0.0,
                        help="spatial radius (world units) for track repair")
    params.add_argument("--min-track-length", type=int, default=0,
                        help="discard tracks shorter than this many steps")
    emit = p.add_argument_group("outputs")
    emit.add_argument("--emit-original-jacobi", action="store_true",
                      help="also compute the unsimplified PL Jacobi set")
    emit.add_argument("--robustness-report", action="store_true",
                      help="write per-step robustness of all critical points")
    emit.add_argument("--dump-intermediate", action="store_true",
                      help="write per-step critical points and magnitude grids")
    emit.add_argument("--scaling-probe", action="store_true",
                      help="time the pipeline at base/double sizes and exit")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=17)
    p.add_argument("--out", default="out", help="output directory")
    return p


def _parse_grid(text: str | None):
    if text is None:
        return None
    try:
        w, h, t = (int(x) for x in text.lower().split("x"))
        return (w, h, t)
    except ValueError:
        raise ConfigError(f"--synth-grid expects WxHxT, got {text!r}")


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    if args.delta == "auto":
        delta = None
    else:
        try:
            delta = float(args.delta)
        except ValueError:
            raise ConfigError(f"--delta expects a number or 'auto', got {args.delta!r}")
    return PipelineConfig(
        input=args.input,
        fmt=args.format,
        synth=args.synth,
        synth_grid=_parse_grid(args.synth_grid),
        delta=delta,
        persistence=args.persistence,
        persistence_mode=args.persistence_mode,
        eps_t=args.eps_t,
        eps_s=args.eps_s,
        eps_l=args.min_track_length,
        emit_original_jacobi=args.emit_original_jacobi,
        robustness_report=args.robustness_report,
        dump_intermediate=args.dump_intermediate,
        threads=args.threads,
        seed=args.seed,
        out=args.out,
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.scaling_probe:
            preset = args.synth or "rotating-gaussians-small"
            grid = _parse_grid(args.synth_grid) or (32, 32, 40)
            rows = scaling_probe(preset=preset, base=grid)
            print(f"{'size':<10} {'grid':<16} {'seconds':>9} {'ratio':>7}")
            for row in rows:
                g = "x".join(str(x) for x in row["grid"])
                print(f"{row['name']:<10} {g:<16} {row['seconds']:>9.3f} "
                      f"{row['ratio']:>7.2f}")
            return 0
        cfg = config_from_args(args)
        result = run_pipeline(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except InternalInvariantError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return 3
    print(f"delta: {result.delta:.6g}")
    print(f"tracks: {result.stats['tracks_after_postprocess']}"
          f" (before post-processing: {result.stats['tracks_before_postprocess']})")
    print(f"graph edges: {result.stats['simplified_edges']}")
    if "original_jacobi_edges" in result.stats:
        print(f"baseline jacobi edges: {result.stats['original_jacobi_edges']}")
    if cfg.out is not None:
        print(f"artifacts in {cfg.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
