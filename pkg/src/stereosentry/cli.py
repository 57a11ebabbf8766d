"""Command-line surface: run the stack, calibrate, compute depth, bench.

Exit codes: 0 success, 2 usage or configuration problems, 3 runtime
failures. argparse already exits with 2 on bad flags, so config errors
share that code.
"""

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .bench import run_benchmark
from .calibration import (
    DegenerateInputError,
    EstimationError,
    NumericalError,
    calibrate_camera,
    compute_rectification,
    load_correspondences,
    stereo_extrinsics,
)
from .camera_model import StereoRig, default_rig
from .config import SYNTHETIC_RIG, ConfigError, RunConfig, load_config, resolve_path
from .gimbal import CommandBroadcaster
from .imgio import read_ppm, write_ppm
from .runtime import Runtime
from .service import SentryService
from .simworld import default_scene, load_scene
from .stereo import (
    colorize_jet,
    depth_from_disparity,
    match_disparity,
    rectify_image,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load_run_inputs(args):
    """Config file plus flag/env overrides, then the scene and rig."""
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = RunConfig()

    overrides = {}
    env_port = os.environ.get("SENTRY_PORT")
    if env_port is not None:
        try:
            overrides["port"] = int(env_port)
        except ValueError:
            raise ConfigError(f"SENTRY_PORT: not an integer: {env_port!r}")
    if args.port is not None:
        overrides["port"] = args.port
    if getattr(args, "fps", None) is not None:
        overrides["fps"] = args.fps
    if getattr(args, "jpeg_quality", None) is not None:
        overrides["jpeg_quality"] = args.jpeg_quality
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)

    if cfg.scene is not None:
        base = args.config if args.config else "."
        scene = load_scene(resolve_path(base, cfg.scene))
    else:
        scene = default_scene()

    if cfg.rig == SYNTHETIC_RIG:
        rig = default_rig()
    else:
        base = args.config if args.config else "."
        rig = StereoRig.load(resolve_path(base, cfg.rig))
    return cfg, scene, rig


def _console_dir():
    """The built web console, when the repo checkout carries one."""
    root = Path(__file__).resolve().parents[2]
    dist = root / "frontend" / "dist"
    return dist if (dist / "index.html").is_file() else None


def cmd_run(args):
    cfg, scene, rig = _load_run_inputs(args)
    broadcaster = None
    if cfg.command_port:
        broadcaster = CommandBroadcaster(port=cfg.command_port)
    runtime = Runtime(cfg, scene, rig=rig, broadcaster=broadcaster)
    try:
        with runtime, SentryService(runtime, port=cfg.port,
                                    static_dir=_console_dir()) as svc:
            print(f"serving {svc.url}", flush=True)
            if broadcaster is not None:
                print(f"serial command mirror on tcp port {broadcaster.port}",
                      flush=True)
            try:
                while True:
                    time.sleep(0.5)
            except KeyboardInterrupt:
                print("shutting down", flush=True)
    finally:
        if broadcaster is not None:
            broadcaster.close()
    return EXIT_OK


def cmd_calibrate(args):
    size = tuple(int(x) for x in args.size.split("x"))
    left_views = load_correspondences(args.left)
    right_views = load_correspondences(args.right)

    intr_l, poses_l, rms_l = calibrate_camera(left_views, size=size)
    print(f"left  rms: {rms_l:.3e} px ({len(left_views)} views)")
    intr_r, poses_r, rms_r = calibrate_camera(right_views, size=size)
    print(f"right rms: {rms_r:.3e} px ({len(right_views)} views)")

    by_id_l = {v.view_id: p for v, p in zip(left_views, poses_l)}
    by_id_r = {v.view_id: p for v, p in zip(right_views, poses_r)}
    shared = sorted(set(by_id_l) & set(by_id_r))
    if not shared:
        raise DegenerateInputError("no shared view ids between the cameras")
    R_rel, t_rel = stereo_extrinsics(
        [by_id_l[i] for i in shared], [by_id_r[i] for i in shared])
    rig = StereoRig(left=intr_l, right=intr_r,
                    relative_rotation=R_rel, relative_translation=t_rel)
    rig.save(args.output)
    print(f"baseline: {rig.baseline * 1000:.2f} mm")
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_depth(args):
    left = read_ppm(args.left)
    right = read_ppm(args.right)
    if left.shape != right.shape:
        print(f"error: image sizes differ: {left.shape[:2]} vs "
              f"{right.shape[:2]}", file=sys.stderr)
        return EXIT_CONFIG

    rig = default_rig() if args.rig == SYNTHETIC_RIG else StereoRig.load(args.rig)
    maps = compute_rectification(rig)
    rect_l = rectify_image(left, maps.remap_left)
    rect_r = rectify_image(right, maps.remap_right)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_ppm(rect_l, out / "rect_left.ppm")
    write_ppm(rect_r, out / "rect_right.ppm")

    disp = match_disparity(rect_l, rect_r, d_max=args.max_disparity,
                           block=args.block)
    disp.save(out / "disparity.pgm")
    write_ppm(colorize_jet(disp.values), out / "disparity_jet.ppm")

    depth = depth_from_disparity(disp, maps.new_intrinsics.fx,
                                 maps.rectified_baseline)
    finite = depth.values[np.isfinite(depth.values)]
    stats = {
        "valid_fraction": round(1.0 - disp.invalid_fraction, 4),
        "median_m": round(float(np.median(finite)), 4) if finite.size else None,
        "min_m": round(float(finite.min()), 4) if finite.size else None,
        "max_m": round(float(finite.max()), 4) if finite.size else None,
        "focal_px": round(depth.focal_px, 4),
        "baseline_m": round(depth.baseline_m, 6),
    }
    (out / "depth_stats.json").write_text(json.dumps(stats, indent=2) + "\n")
    print(json.dumps(stats))
    return EXIT_OK


def cmd_bench(args):
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = RunConfig()
    if args.fps is not None:
        from dataclasses import replace
        cfg = replace(cfg, fps=args.fps)
    scene = None
    if cfg.scene is not None:
        base = args.config if args.config else "."
        scene = load_scene(resolve_path(base, cfg.scene))
    report = run_benchmark(cfg, duration_s=args.duration, scene=scene)
    print(json.dumps(report, indent=2))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stereosentry",
        description="stereo telepresence sentry: simulator, pipeline, service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the full stack and serve HTTP")
    p_run.add_argument("--config", help="run configuration JSON")
    p_run.add_argument("--port", type=int, help="HTTP port (overrides config)")
    p_run.add_argument("--fps", type=float, help="render rate (overrides config)")
    p_run.add_argument("--jpeg-quality", type=int, dest="jpeg_quality",
                       help="stream JPEG quality 1-100")
    p_run.set_defaults(func=cmd_run)

    p_cal = sub.add_parser("calibrate", help="calibrate a stereo rig from "
                                             "board correspondences")
    p_cal.add_argument("--left", required=True,
                       help="left-camera correspondence JSON")
    p_cal.add_argument("--right", required=True,
                       help="right-camera correspondence JSON")
    p_cal.add_argument("--output", required=True, help="rig JSON to write")
    p_cal.add_argument("--size", default="640x480", help="sensor size WxH")
    p_cal.set_defaults(func=cmd_calibrate)

    p_dep = sub.add_parser("depth", help="disparity and depth for one pair")
    p_dep.add_argument("left", help="left image (PPM)")
    p_dep.add_argument("right", help="right image (PPM)")
    p_dep.add_argument("--rig", default=SYNTHETIC_RIG,
                       help="rig JSON path or 'synthetic-default'")
    p_dep.add_argument("--out", required=True, help="output directory")
    p_dep.add_argument("--max-disparity", type=int, default=64)
    p_dep.add_argument("--block", type=int, default=9)
    p_dep.set_defaults(func=cmd_depth)

    p_ben = sub.add_parser("bench", help="measure latency and throughput "
                                         "with a loopback client")
    p_ben.add_argument("--config", help="run configuration JSON")
    p_ben.add_argument("--duration", type=float, default=10.0)
    p_ben.add_argument("--fps", type=float, help="render rate override")
    p_ben.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateInputError, EstimationError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
