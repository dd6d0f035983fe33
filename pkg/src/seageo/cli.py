"""Command-line front end: synth / calibrate / track / eval."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import formats, pipeline, synth
from .config import PipelineConfig, default_config, load_config
from .errors import SeageoError
from .pipeline import CalibrationSet, calibrate, evaluate, run

_ASSOC_FLAGS = ("alpha", "sigma", "p_thr", "max_coast_frames")
_TRACKER_FLAGS = ("r_xy_px", "r_w_px", "q_px", "q_w_px", "init_v_std_px", "width_floor_px")
_UKF_FLAGS = ("spread", "prior_knowledge", "secondary_scaling", "q_intensity", "r_pos", "init_v_std", "r_floor")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="pipeline config file (INI)")
    for name in _ASSOC_FLAGS + _TRACKER_FLAGS + _UKF_FLAGS:
        kind = int if name == "max_coast_frames" else float
        p.add_argument(f"--{name.replace('_', '-')}", type=kind, default=None, dest=name)
    p.add_argument("--earth-radius-m", type=float, default=None, dest="earth_radius_m")


def _load_merged(args: argparse.Namespace) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else default_config()
    assoc = replace(
        cfg.assoc, **{k: getattr(args, k) for k in _ASSOC_FLAGS if getattr(args, k, None) is not None}
    )
    params = replace(
        cfg.tracker_params,
        **{k: getattr(args, k) for k in _TRACKER_FLAGS if getattr(args, k, None) is not None},
    )
    ukf = replace(
        cfg.ukf, **{k: getattr(args, k) for k in _UKF_FLAGS if getattr(args, k, None) is not None}
    )
    radius = args.earth_radius_m if getattr(args, "earth_radius_m", None) is not None else cfg.earth_radius_m
    return PipelineConfig(assoc, params, ukf, radius, cfg.synth_overrides)


def cmd_synth(args: argparse.Namespace) -> int:
    if args.list:
        for name in sorted(synth.bundled_scenarios()):
            print(name)
        return 0
    cfg = load_config(args.config) if args.config else default_config()
    overrides = dict(cfg.synth_overrides)
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    for key in ("duration_s", "fps", "pixel_std", "dropout_prob", "dropout_windows", "distractors"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = str(value)
    name = args.scenario or overrides.get("scenario")
    if not name:
        print("error: no scenario named (use --scenario or a [synth] config section)", file=sys.stderr)
        return 2
    scenario = synth.apply_overrides(synth.get_scenario(name), overrides)
    bundle = synth.generate(scenario, args.out)
    for label, path in (
        ("detections", bundle.detections),
        ("camera-track", bundle.camera_track),
        ("quadruplets", bundle.quadruplets),
        ("truth", bundle.truth),
        ("true-calibration", bundle.true_calibration),
    ):
        print(f"{label}: {path}")
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = _load_merged(args)
    cal = CalibrationSet(
        quadruplets=formats.read_quadruplets(args.quadruplets),
        camera_track=formats.read_camera_track(args.camera_track),
    )
    reference, pmap = calibrate(cal, earth_radius_m=cfg.earth_radius_m)
    formats.write_calibration(args.out, reference.origin, pmap)
    print(f"calibration written: {args.out}")
    print(f"condition estimate: {pmap.condition_estimate:.6g}")
    print(f"origin: ({reference.origin.lat_deg:.7f}, {reference.origin.lon_deg:.7f})")
    return 0


def cmd_track(args: argparse.Namespace) -> int:
    cfg = _load_merged(args)
    detections = formats.read_detections(args.detections)
    camera_track = formats.read_camera_track(args.camera_track)
    origin, pmap = formats.read_calibration(args.calibration)
    reference = pipeline.GeoReference(origin, cfg.earth_radius_m)

    init = None
    if args.init_frame is not None:
        candidates = [d for d in detections if d.frame == args.init_frame]
        if not candidates or args.init_index >= len(candidates):
            print(
                f"error: no detection at frame {args.init_frame} index {args.init_index}",
                file=sys.stderr,
            )
            return 1
        init = candidates[args.init_index]

    traj = run(
        detections,
        camera_track,
        reference,
        pmap,
        assoc=cfg.assoc,
        tracker_params=cfg.tracker_params,
        ukf_params=cfg.ukf,
        init=init,
    )
    formats.write_trajectory(args.out, traj)
    coasted = sum(1 for p in traj.points if p.coasted)
    print(f"trajectory written: {args.out} ({len(traj.points)} points, {coasted} coasted)")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    traj = formats.read_trajectory(args.trajectory)
    truth = formats.read_truth(args.truth)
    report = evaluate(traj, truth, skip_coasted=args.skip_coasted)
    print(formats.render_report_text(report))
    if args.report:
        formats.write_report(args.report, report)
        print(f"report written: {args.report}")
    if args.plot_data:
        formats.write_plot_data(args.plot_data, traj, truth)
        print(f"plot data written: {args.plot_data}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seageo",
        description="Geoposition a boat from monocular detections: calibrate, track, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scenario dataset")
    p.add_argument("--scenario", help="bundled scenario name (see --list)")
    p.add_argument("--out", default="synth-out", help="output directory")
    p.add_argument("--config", help="pipeline config file with a [synth] section")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--duration-s", type=float, default=None, dest="duration_s")
    p.add_argument("--fps", type=float, default=None)
    p.add_argument("--pixel-std", type=float, default=None, dest="pixel_std")
    p.add_argument("--dropout-prob", type=float, default=None, dest="dropout_prob")
    p.add_argument("--dropout-windows", default=None, dest="dropout_windows", help="e.g. 12.0:12.8,20:21")
    p.add_argument("--distractors", type=int, default=None)
    p.add_argument("--list", action="store_true", help="list bundled scenarios and exit")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("calibrate", help="estimate the pixel->plane map from quadruplets")
    p.add_argument("--quadruplets", required=True)
    p.add_argument("--camera-track", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("track", help="run the full tracking + geopositioning pipeline")
    p.add_argument("--detections", required=True)
    p.add_argument("--camera-track", required=True)
    p.add_argument("--calibration", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--init-frame", type=int, default=None, help="frame of the designated target detection")
    p.add_argument("--init-index", type=int, default=0, help="index within that frame's detections")
    _add_config_flags(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="compare a trajectory against GPS ground truth")
    p.add_argument("--trajectory", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--plot-data", dest="plot_data", help="write raw/smoothed/truth polylines here")
    p.add_argument("--skip-coasted", action="store_true", dest="skip_coasted")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SeageoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
