"""Readers and writers for the on-disk interchange formats.

All record streams are JSON Lines with fixed schemas; the calibration file
and evaluation report are single JSON documents.  Readers validate strictly
(types, ranges, ordering, and no unknown keys) and raise ParseError naming
the offending file and line.  Writers are atomic (temp file + rename) and
deterministic: identical objects serialize to identical bytes.

Schemas:
  detections   {"frame": int, "t": s, "bbox": [x, y, w, h], "score": f, "p_c": f?}
  camera track {"t": s, "lat": deg, "lon": deg, "heading": deg?}
  quadruplets  {"t": s, "u": px, "v": px, "lat": deg, "lon": deg}
  trajectory   {"t": s, "lat":, "lon":, "lat_raw":, "lon_raw":, "east": m, "north": m, "coasted": bool}
  truth        {"t": s, "lat": deg, "lon": deg}
  calibration  {"H": [9], "T_local": [9], "T_world": [9], "origin": {"lat","lon"},
                "distortion": {...}|null, "condition": f, "format_version": 1}

A trajectory's "east"/"north" are the smoothed position in the fixed frame
anchored at the calibration origin; raw_local is not stored, so file-loaded
trajectories carry raw positions in geo form only.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from .errors import DomainError, ParseError
from .geodesy import GeoPoint, LocalPoint
from .pipeline import (
    CameraSample,
    ErrorStats,
    EvalReport,
    GeoTrajectory,
    Quadruplet,
    TrajectoryPoint,
)
from .planarmap import DistortionParams, PixelPoint, PlanarMap, Similarity2D
from .tracker import BBox, Detection

FORMAT_VERSION = 1


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write whole-file atomically: same-directory temp file, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(path), line_no, f"invalid JSON: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise ParseError(str(path), line_no, "record must be a JSON object")
            yield line_no, obj


class _Record:
    """One parsed JSONL object with schema-checking accessors."""

    def __init__(self, path: str, line: int, obj: dict, allowed: set[str], required: set[str]):
        self.path = str(path)
        self.line = line
        self.obj = obj
        unknown = set(obj) - allowed
        if unknown:
            self.fail(f"unknown keys {sorted(unknown)}")
        missing = required - set(obj)
        if missing:
            self.fail(f"missing keys {sorted(missing)}")

    def fail(self, message: str):
        raise ParseError(self.path, self.line, message)

    def number(self, key: str) -> float:
        v = self.obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.fail(f"{key!r} must be a finite number, got {v!r}")
        return float(v)

    def integer(self, key: str) -> int:
        v = self.obj[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(f"{key!r} must be an integer, got {v!r}")
        return v

    def boolean(self, key: str) -> bool:
        v = self.obj[key]
        if not isinstance(v, bool):
            self.fail(f"{key!r} must be a boolean, got {v!r}")
        return v

    def unit(self, key: str) -> float:
        v = self.number(key)
        if not 0.0 <= v <= 1.0:
            self.fail(f"{key!r} must lie in [0, 1], got {v}")
        return v

    def domain(self, fn: Callable[[], Any], what: str):
        try:
            return fn()
        except DomainError as exc:
            self.fail(f"invalid {what}: {exc}")


# ---------------------------------------------------------------------------
# detections

def read_detections(path: str | Path) -> list[Detection]:
    dets: list[Detection] = []
    prev_frame = None
    prev_t = None
    for line_no, obj in _iter_jsonl(path):
        rec = _Record(path, line_no, obj, {"frame", "t", "bbox", "score", "p_c"}, {"frame", "t", "bbox", "score"})
        frame = rec.integer("frame")
        t = rec.number("t")
        bbox = obj["bbox"]
        if not (isinstance(bbox, list) and len(bbox) == 4 and all(isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) for x in bbox)):
            rec.fail(f"'bbox' must be a list of 4 finite numbers, got {bbox!r}")
        score = rec.unit("score")
        p_c = rec.unit("p_c") if "p_c" in obj else None
        if prev_frame is not None:
            if frame < prev_frame:
                rec.fail(f"frames must be non-decreasing ({frame} after {prev_frame})")
            if t < prev_t:
                rec.fail(f"timestamps must be non-decreasing ({t} after {prev_t})")
            if frame == prev_frame and t != prev_t:
                rec.fail(f"frame {frame} carries two timestamps ({prev_t} and {t})")
        prev_frame, prev_t = frame, t
        box = rec.domain(lambda: BBox(*(float(x) for x in bbox)), "bbox")
        dets.append(rec.domain(lambda: Detection(frame, t, box, score, p_c), "detection"))
    return dets


def detection_to_record(d: Detection) -> dict:
    if d.det_score is None:
        raise DomainError("the detections format requires a detector score")
    rec: dict = {
        "frame": d.frame,
        "t": d.t,
        "bbox": [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h],
        "score": d.det_score,
    }
    if d.p_c is not None:
        rec["p_c"] = d.p_c
    return rec


def write_detections(path: str | Path, dets: Sequence[Detection]) -> None:
    atomic_write_text(path, "".join(_dump_line(detection_to_record(d)) + "\n" for d in dets))


# ---------------------------------------------------------------------------
# camera track

def read_camera_track(path: str | Path) -> list[CameraSample]:
    samples: list[CameraSample] = []
    prev_t = None
    for line_no, obj in _iter_jsonl(path):
        rec = _Record(path, line_no, obj, {"t", "lat", "lon", "heading"}, {"t", "lat", "lon"})
        t = rec.number("t")
        if prev_t is not None and t <= prev_t:
            rec.fail(f"timestamps must strictly increase ({t} after {prev_t})")
        prev_t = t
        heading = rec.number("heading") if "heading" in obj else None
        pos = rec.domain(lambda: GeoPoint(rec.number("lat"), rec.number("lon")), "GPS position")
        samples.append(rec.domain(lambda: CameraSample(t, pos, heading), "camera sample"))
    return samples


def write_camera_track(path: str | Path, samples: Sequence[CameraSample]) -> None:
    lines = []
    for s in samples:
        rec: dict = {"t": s.t, "lat": s.position.lat_deg, "lon": s.position.lon_deg}
        if s.heading_deg is not None:
            rec["heading"] = s.heading_deg
        lines.append(_dump_line(rec) + "\n")
    atomic_write_text(path, "".join(lines))


# ---------------------------------------------------------------------------
# quadruplets

def read_quadruplets(path: str | Path) -> list[Quadruplet]:
    quads: list[Quadruplet] = []
    for line_no, obj in _iter_jsonl(path):
        rec = _Record(path, line_no, obj, {"t", "u", "v", "lat", "lon"}, {"t", "u", "v", "lat", "lon"})
        pixel = rec.domain(lambda: PixelPoint(rec.number("u"), rec.number("v")), "pixel")
        geo = rec.domain(lambda: GeoPoint(rec.number("lat"), rec.number("lon")), "GPS position")
        quads.append(Quadruplet(rec.number("t"), pixel, geo))
    return quads


def write_quadruplets(path: str | Path, quads: Sequence[Quadruplet]) -> None:
    atomic_write_text(
        path,
        "".join(
            _dump_line(
                {"t": q.t, "u": q.pixel.u, "v": q.pixel.v, "lat": q.geo.lat_deg, "lon": q.geo.lon_deg}
            )
            + "\n"
            for q in quads
        ),
    )


# ---------------------------------------------------------------------------
# ground truth

def read_truth(path: str | Path) -> list[tuple[float, GeoPoint]]:
    truth: list[tuple[float, GeoPoint]] = []
    prev_t = None
    for line_no, obj in _iter_jsonl(path):
        rec = _Record(path, line_no, obj, {"t", "lat", "lon"}, {"t", "lat", "lon"})
        t = rec.number("t")
        if prev_t is not None and t <= prev_t:
            rec.fail(f"timestamps must strictly increase ({t} after {prev_t})")
        prev_t = t
        truth.append((t, rec.domain(lambda: GeoPoint(rec.number("lat"), rec.number("lon")), "GPS position")))
    return truth


def write_truth(path: str | Path, truth: Sequence[tuple[float, GeoPoint]]) -> None:
    atomic_write_text(
        path,
        "".join(_dump_line({"t": t, "lat": g.lat_deg, "lon": g.lon_deg}) + "\n" for t, g in truth),
    )


# ---------------------------------------------------------------------------
# trajectory

def read_trajectory(path: str | Path) -> GeoTrajectory:
    points: list[TrajectoryPoint] = []
    prev_t = None
    keys = {"t", "lat", "lon", "lat_raw", "lon_raw", "east", "north", "coasted"}
    for line_no, obj in _iter_jsonl(path):
        rec = _Record(path, line_no, obj, keys, keys)
        t = rec.number("t")
        if prev_t is not None and t <= prev_t:
            rec.fail(f"timestamps must strictly increase ({t} after {prev_t})")
        prev_t = t
        smoothed_geo = rec.domain(lambda: GeoPoint(rec.number("lat"), rec.number("lon")), "GPS position")
        raw_geo = rec.domain(lambda: GeoPoint(rec.number("lat_raw"), rec.number("lon_raw")), "GPS position")
        local = rec.domain(lambda: LocalPoint(rec.number("east"), rec.number("north")), "local position")
        points.append(
            TrajectoryPoint(
                t=t,
                raw_geo=raw_geo,
                smoothed_geo=smoothed_geo,
                smoothed_local=local,
                coasted=rec.boolean("coasted"),
            )
        )
    return GeoTrajectory(points)


def write_trajectory(path: str | Path, traj: GeoTrajectory) -> None:
    lines = []
    for p in traj.points:
        lines.append(
            _dump_line(
                {
                    "t": p.t,
                    "lat": p.smoothed_geo.lat_deg,
                    "lon": p.smoothed_geo.lon_deg,
                    "lat_raw": p.raw_geo.lat_deg,
                    "lon_raw": p.raw_geo.lon_deg,
                    "east": p.smoothed_local.east_m,
                    "north": p.smoothed_local.north_m,
                    "coasted": p.coasted,
                }
            )
            + "\n"
        )
    atomic_write_text(path, "".join(lines))


# ---------------------------------------------------------------------------
# calibration

def _matrix9(rec_fail, value, what: str) -> np.ndarray:
    if not (
        isinstance(value, list)
        and len(value) == 9
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x) for x in value)
    ):
        rec_fail(f"{what} must be a list of 9 finite numbers")
    return np.array(value, dtype=float).reshape(3, 3)


def _similarity_from_matrix(rec_fail, m: np.ndarray, what: str) -> Similarity2D:
    if not (
        m[0, 0] == m[1, 1]
        and m[0, 1] == 0.0
        and m[1, 0] == 0.0
        and m[2, 0] == 0.0
        and m[2, 1] == 0.0
        and m[2, 2] == 1.0
        and m[0, 0] > 0
    ):
        rec_fail(f"{what} must have the form [s 0 tx; 0 s ty; 0 0 1] with s > 0")
    return Similarity2D(float(m[0, 0]), float(m[0, 2]), float(m[1, 2]))


def read_calibration(path: str | Path) -> tuple[GeoPoint, PlanarMap]:
    """Load a calibration document; returns (origin, map)."""

    def fail(msg: str, line: int | None = None):
        raise ParseError(str(path), line, msg)

    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            fail(f"invalid JSON: {exc.msg}", exc.lineno)
    if not isinstance(obj, dict):
        fail("calibration file must hold a JSON object")
    keys = {"H", "T_local", "T_world", "origin", "distortion", "condition", "format_version"}
    unknown = set(obj) - keys
    if unknown:
        fail(f"unknown keys {sorted(unknown)}")
    missing = keys - set(obj)
    if missing:
        fail(f"missing keys {sorted(missing)}")
    if obj["format_version"] != FORMAT_VERSION:
        fail(f"unsupported format_version {obj['format_version']!r}")

    H = _matrix9(fail, obj["H"], "'H'")
    t_local = _similarity_from_matrix(fail, _matrix9(fail, obj["T_local"], "'T_local'"), "'T_local'")
    t_world = _similarity_from_matrix(fail, _matrix9(fail, obj["T_world"], "'T_world'"), "'T_world'")
    condition = obj["condition"]
    if isinstance(condition, bool) or not isinstance(condition, (int, float)):
        fail("'condition' must be a number")

    distortion = None
    if obj["distortion"] is not None:
        d = obj["distortion"]
        dkeys = {"k1", "k2", "cx", "cy", "f"}
        if not isinstance(d, dict) or set(d) != dkeys:
            fail(f"'distortion' must be null or an object with keys {sorted(dkeys)}")
        if not all(isinstance(d[k], (int, float)) and not isinstance(d[k], bool) and math.isfinite(d[k]) for k in dkeys):
            fail("'distortion' values must be finite numbers")
        try:
            distortion = DistortionParams(d["k1"], d["k2"], d["cx"], d["cy"], d["f"])
        except DomainError as exc:
            fail(f"invalid distortion: {exc}")

    origin_obj = obj["origin"]
    if not isinstance(origin_obj, dict) or set(origin_obj) != {"lat", "lon"}:
        fail("'origin' must be an object with keys ['lat', 'lon']")
    try:
        origin = GeoPoint(origin_obj["lat"], origin_obj["lon"])
        pmap = PlanarMap(
            H=H,
            t_local=t_local,
            t_world=t_world,
            condition_estimate=float(condition),
            distortion=distortion,
        )
    except DomainError as exc:
        fail(str(exc))
    return origin, pmap


def write_calibration(path: str | Path, origin: GeoPoint, pmap: PlanarMap) -> None:
    doc = {
        "H": [float(x) for x in pmap.H.ravel()],
        "T_local": [float(x) for x in pmap.t_local.as_matrix().ravel()],
        "T_world": [float(x) for x in pmap.t_world.as_matrix().ravel()],
        "origin": {"lat": origin.lat_deg, "lon": origin.lon_deg},
        "distortion": None
        if pmap.distortion is None
        else {
            "k1": pmap.distortion.k1,
            "k2": pmap.distortion.k2,
            "cx": pmap.distortion.cx,
            "cy": pmap.distortion.cy,
            "f": pmap.distortion.f,
        },
        "condition": pmap.condition_estimate,
        "format_version": FORMAT_VERSION,
    }
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


# ---------------------------------------------------------------------------
# evaluation report

def _stats_dict(s: ErrorStats) -> dict:
    return {
        "rmse_m": s.rmse_m,
        "mean_err_m": s.mean_err_m,
        "max_err_m": s.max_err_m,
        "east_rmse_m": s.east_rmse_m,
        "north_rmse_m": s.north_rmse_m,
        "n_matched": s.n_matched,
    }


def write_report(path: str | Path, report: EvalReport) -> None:
    doc = {"raw": _stats_dict(report.raw), "smoothed": _stats_dict(report.smoothed)}
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def render_report_text(report: EvalReport) -> str:
    lines = []
    for name, s in (("raw", report.raw), ("smoothed", report.smoothed)):
        lines.append(
            f"{name:9s} rmse {s.rmse_m:10.4f} m | mean {s.mean_err_m:10.4f} m | "
            f"max {s.max_err_m:10.4f} m | east-rmse {s.east_rmse_m:10.4f} m | "
            f"north-rmse {s.north_rmse_m:10.4f} m | matched {s.n_matched}"
        )
    return "\n".join(lines)


def write_plot_data(
    path: str | Path, traj: GeoTrajectory, truth: Sequence[tuple[float, GeoPoint]]
) -> None:
    """Export raw / smoothed / truth polylines for external plotting."""
    doc = {
        "truth": [{"t": t, "lat": g.lat_deg, "lon": g.lon_deg} for t, g in truth],
        "raw": [{"t": p.t, "lat": p.raw_geo.lat_deg, "lon": p.raw_geo.lon_deg} for p in traj.points],
        "smoothed": [
            {"t": p.t, "lat": p.smoothed_geo.lat_deg, "lon": p.smoothed_geo.lon_deg}
            for p in traj.points
        ],
    }
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")
