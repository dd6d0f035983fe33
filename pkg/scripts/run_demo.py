#!/usr/bin/env python3
"""Run one synthetic scenario through the whole chain and print the report.

Usage:
    python scripts/run_demo.py [--scenario NAME] [--workdir DIR] [--seed N]

Files land in the workdir so the intermediate artifacts can be inspected
(detections.jsonl, calibration.json, trajectory.jsonl, report.json, ...).
"""

import argparse
import sys
import tempfile
from pathlib import Path

from seageo.cli import main as seageo_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenario", default="noisy-near-horizon")
    parser.add_argument("--workdir", default=None, help="default: a fresh temp dir")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    workdir = Path(args.workdir) if args.workdir else Path(tempfile.mkdtemp(prefix="seageo-demo-"))
    workdir.mkdir(parents=True, exist_ok=True)
    print(f"workdir: {workdir}")

    synth_args = ["synth", "--scenario", args.scenario, "--out", str(workdir)]
    if args.seed is not None:
        synth_args += ["--seed", str(args.seed)]
    for step in (
        synth_args,
        [
            "calibrate",
            "--quadruplets", str(workdir / "quadruplets.jsonl"),
            "--camera-track", str(workdir / "camera_track.jsonl"),
            "--out", str(workdir / "calibration.json"),
        ],
        [
            "track",
            "--detections", str(workdir / "detections.jsonl"),
            "--camera-track", str(workdir / "camera_track.jsonl"),
            "--calibration", str(workdir / "calibration.json"),
            "--out", str(workdir / "trajectory.jsonl"),
        ],
        [
            "eval",
            "--trajectory", str(workdir / "trajectory.jsonl"),
            "--truth", str(workdir / "truth.jsonl"),
            "--report", str(workdir / "report.json"),
            "--plot-data", str(workdir / "plot_data.json"),
        ],
    ):
        print(f"\n$ seageo {' '.join(step)}")
        rc = seageo_main(step)
        if rc != 0:
            return rc
    return 0


if __name__ == "__main__":
    sys.exit(main())
