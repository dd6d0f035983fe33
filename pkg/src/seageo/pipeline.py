"""End-to-end orchestration: calibrate, run the two-stage filter chain, evaluate.

Frame handling on a moving platform: the plane map is estimated in a frame
anchored translationally at the camera's own GPS position (interpolated per
quadruplet / per frame), with axes fixed relative to north unless a per-frame
heading is supplied, in which case the camera-frame result is rotated by the
heading before the geo conversion.  The world filter runs in one fixed frame
(anchored at the calibration origin) so its constant-velocity model stays
meaningful across frames; per-frame referencing happens only at the geo
boundary.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CoverageError, DomainError, EmptyOverlapError, TimeOrderError
from .geodesy import EARTH_RADIUS_M, GeoPoint, GeoReference, LocalPoint, geo_to_local
from .planarmap import (
    HORIZON_EPS,
    Correspondence,
    DistortionParams,
    PixelPoint,
    PlanarMap,
    estimate_homography,
)
from .tracker import AssociationConfig, Detection, TrackerParams, effective_p_c, track_sequence
from .worldfilter import UkfParams, init_world_state, ukf_predict, ukf_update


@dataclass(frozen=True)
class CameraSample:
    """One GPS fix of the observing platform; heading is clockwise from north."""

    t: float
    position: GeoPoint
    heading_deg: float | None = None

    def __post_init__(self):
        if self.heading_deg is not None and not 0.0 <= self.heading_deg < 360.0:
            raise DomainError(f"heading {self.heading_deg} outside [0, 360)")


@dataclass(frozen=True)
class Quadruplet:
    """One calibration record: an image anchor and the GPS position it depicts."""

    t: float
    pixel: PixelPoint
    geo: GeoPoint


@dataclass
class CalibrationSet:
    quadruplets: list[Quadruplet]
    camera_track: list[CameraSample]


@dataclass(frozen=True, slots=True)
class TrajectoryPoint:
    t: float
    raw_geo: GeoPoint
    smoothed_geo: GeoPoint
    smoothed_local: LocalPoint
    coasted: bool
    raw_local: LocalPoint | None = None  # fixed-frame measurement; None for file-loaded points


@dataclass
class GeoTrajectory:
    points: list[TrajectoryPoint]

    def __post_init__(self):
        for a, b in zip(self.points, self.points[1:]):
            if b.t <= a.t:
                raise TimeOrderError(f"trajectory times must strictly increase ({b.t} after {a.t})")


@dataclass(frozen=True)
class ErrorStats:
    rmse_m: float
    mean_err_m: float
    max_err_m: float
    east_rmse_m: float
    north_rmse_m: float
    n_matched: int


@dataclass(frozen=True)
class EvalReport:
    raw: ErrorStats
    smoothed: ErrorStats


def enu_to_camera_frame(heading_deg: float, east: float, north: float) -> tuple[float, float]:
    """Rotate east/north into the camera frame (x = right of heading, y = along it)."""
    if heading_deg == 0.0:
        return east, north
    h = math.radians(heading_deg)
    ch, sh = math.cos(h), math.sin(h)
    return east * ch - north * sh, east * sh + north * ch


def camera_frame_to_enu(heading_deg: float, x: float, y: float) -> tuple[float, float]:
    """Inverse of :func:`enu_to_camera_frame`."""
    if heading_deg == 0.0:
        return x, y
    h = math.radians(heading_deg)
    ch, sh = math.cos(h), math.sin(h)
    return x * ch + y * sh, -x * sh + y * ch


class CameraPath:
    """Time interpolator over a camera GPS track (linear; heading unwrapped)."""

    def __init__(self, samples: Sequence[CameraSample]):
        if not samples:
            raise DomainError("camera track is empty")
        self._t = np.array([s.t for s in samples])
        if np.any(np.diff(self._t) <= 0):
            raise TimeOrderError("camera track timestamps must strictly increase")
        self._lat = np.array([s.position.lat_deg for s in samples])
        self._lon = np.array([s.position.lon_deg for s in samples])
        with_heading = [s.heading_deg is not None for s in samples]
        if any(with_heading) and not all(with_heading):
            raise DomainError("camera track mixes samples with and without heading")
        self.has_heading = all(with_heading)
        if self.has_heading:
            unwrapped = np.unwrap(np.radians([s.heading_deg for s in samples]))
            self._heading = np.degrees(unwrapped)
        else:
            self._heading = np.zeros_like(self._t)

    @property
    def t_start(self) -> float:
        return float(self._t[0])

    @property
    def t_end(self) -> float:
        return float(self._t[-1])

    def require_covered(self, t: float, what: str) -> None:
        if t < self.t_start - 1e-9 or t > self.t_end + 1e-9:
            raise CoverageError(
                f"{what} at t={t} outside camera track span [{self.t_start}, {self.t_end}]"
            )

    def position(self, t: float) -> GeoPoint:
        return GeoPoint(float(np.interp(t, self._t, self._lat)), float(np.interp(t, self._t, self._lon)))

    def heading(self, t: float) -> float:
        if not self.has_heading:
            return 0.0
        return float(np.interp(t, self._t, self._heading)) % 360.0

    def positions(self, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return np.interp(ts, self._t, self._lat), np.interp(ts, self._t, self._lon)

    def headings(self, ts: np.ndarray) -> np.ndarray:
        if not self.has_heading:
            return np.zeros_like(ts)
        return np.interp(ts, self._t, self._heading) % 360.0


def calibrate(
    cal: CalibrationSet,
    earth_radius_m: float = EARTH_RADIUS_M,
    distortion: DistortionParams | None = None,
) -> tuple[GeoReference, PlanarMap]:
    """Estimate the pixel->plane map from GPS-tagged image anchors.

    Each quadruplet's GPS position is expressed in the plane anchored at the
    camera's (interpolated) position at that quadruplet's time, then the
    homography is fit to the resulting correspondences.  The returned
    reference anchors the fixed world frame at the camera position at the
    first quadruplet's time.
    """
    if len(cal.quadruplets) < 4:
        raise DomainError(f"calibration needs at least 4 quadruplets, got {len(cal.quadruplets)}")
    path = CameraPath(cal.camera_track)
    for q in cal.quadruplets:
        path.require_covered(q.t, "quadruplet")

    origin = path.position(cal.quadruplets[0].t)
    corr = []
    for q in cal.quadruplets:
        cam_ref = GeoReference(path.position(q.t), earth_radius_m)
        enu = geo_to_local(cam_ref, q.geo)
        x, y = enu_to_camera_frame(path.heading(q.t), enu.east_m, enu.north_m)
        corr.append(Correspondence(q.pixel, LocalPoint(x, y)))
    pmap = estimate_homography(corr, distortion)
    return GeoReference(origin, earth_radius_m), pmap


def select_init(dets: Sequence[Detection]) -> Detection:
    """Default target designation: best appearance score in the earliest frame."""
    if not dets:
        raise DomainError("cannot select an initial target from zero detections")
    first_frame = min(d.frame for d in dets)
    candidates = [d for d in dets if d.frame == first_frame]
    best = candidates[0]
    for d in candidates[1:]:
        if effective_p_c(d) > effective_p_c(best) or (
            effective_p_c(d) == effective_p_c(best)
            and (d.det_score or 0.0) > (best.det_score or 0.0)
        ):
            best = d
    return best


def _frame_clock(detections: Sequence[Detection]) -> list[tuple[int, float, list[Detection]]]:
    """Group detections by frame and fill gaps with empty frames.

    Frame times for gap frames are interpolated linearly in the frame index,
    so coasting steps keep a consistent clock through detection dropouts.
    """
    by_frame: dict[int, list[Detection]] = {}
    times: dict[int, float] = {}
    for d in detections:
        if d.frame in times and times[d.frame] != d.t:
            raise DomainError(f"frame {d.frame} has inconsistent timestamps {times[d.frame]} and {d.t}")
        times[d.frame] = d.t
        by_frame.setdefault(d.frame, []).append(d)
    known = sorted(times)
    t_known = np.array([times[f] for f in known])
    if np.any(np.diff(t_known) <= 0):
        raise TimeOrderError("detection timestamps must increase with frame index")
    all_frames = np.arange(known[0], known[-1] + 1)
    all_t = np.interp(all_frames, np.array(known, dtype=float), t_known)
    return [(int(f), float(t), by_frame.get(int(f), [])) for f, t in zip(all_frames, all_t)]


def run(
    detections: Sequence[Detection],
    camera_track: Sequence[CameraSample],
    reference: GeoReference,
    pmap: PlanarMap,
    assoc: AssociationConfig = AssociationConfig(),
    tracker_params: TrackerParams = TrackerParams(),
    ukf_params: UkfParams = UkfParams(),
    init: Detection | None = None,
) -> GeoTrajectory:
    """Track in the image, lift each anchor to the sea plane, smooth in the world.

    Per frame: associate/update the image filter; take the chosen detection's
    bottom-center (or the predicted position while coasting); map it through
    the homography into the camera-anchored plane; convert to GPS via the
    camera position at that frame; re-anchor in the fixed frame and update the
    world filter.  Pixels on the horizon contribute no world update and the
    emitted point is flagged coasted.
    """
    if not detections:
        raise DomainError("cannot run the pipeline on zero detections")
    path = CameraPath(camera_track)
    frames = _frame_clock(detections)
    path.require_covered(frames[0][1], "detection")
    path.require_covered(frames[-1][1], "detection")

    if init is None:
        init = select_init(list(detections))

    steps = track_sequence(frames, init, assoc, tracker_params)
    n = len(steps)

    ts = np.array([t for _, t, _ in frames])
    lat_cam, lon_cam = path.positions(ts)
    head_arr = path.headings(ts)
    radius = reference.earth_radius_m

    # pixel anchors: chosen detection's bottom-center, else the prediction
    au = np.empty(n)
    av = np.empty(n)
    for i, step in enumerate(steps):
        if step.chosen is not None:
            b = step.chosen.bbox
            au[i] = b.x + b.w * 0.5
            av[i] = b.y + b.h
        else:
            au[i] = step.state.mean[0]
            av[i] = step.state.mean[1]

    # pixel -> camera-anchored plane, vectorized across frames (the math
    # mirrors planarmap.undistort / planarmap.apply elementwise)
    if pmap.distortion is not None:
        d = pmap.distortion
        dx = (au - d.cx) / d.f
        dy = (av - d.cy) / d.f
        r2 = dx * dx + dy * dy
        gain = 1.0 + d.k1 * r2 + d.k2 * r2 * r2
        uu = d.cx + d.f * dx * gain
        vv = d.cy + d.f * dy * gain
    else:
        uu, vv = au, av
    h = pmap.H
    w3 = h[2, 0] * uu + h[2, 1] * vv + h[2, 2]
    horizon = np.abs(w3) < HORIZON_EPS
    w3 = np.where(horizon, 1.0, w3)
    cam_x = (h[0, 0] * uu + h[0, 1] * vv + h[0, 2]) / w3
    cam_y = (h[1, 0] * uu + h[1, 1] * vv + h[1, 2]) / w3

    # camera frame -> ENU relative to the camera, then to GPS via the
    # per-frame camera reference (mirrors camera_frame_to_enu / local_to_geo)
    hr = np.radians(head_arr)
    ch = np.cos(hr)
    sh = np.sin(hr)
    east_rel = cam_x * ch + cam_y * sh
    north_rel = -cam_x * sh + cam_y * ch
    lat_raw = lat_cam + np.degrees(north_rel / radius)
    lon_raw = lon_cam + np.degrees(east_rel / (radius * np.cos(np.radians(lat_cam))))

    # sequential world filtering in the fixed frame
    o_lat = reference.origin.lat_deg
    o_lon = reference.origin.lon_deg
    cos_o = math.cos(math.radians(o_lat))
    world = None
    sm_e = np.empty(n)
    sm_n = np.empty(n)
    ze = np.empty(n)
    zn = np.empty(n)
    emitted = np.zeros(n, dtype=bool)
    for i, step in enumerate(steps):
        if horizon[i]:
            measurement = None
        else:
            # must mirror geodesy.geo_to_local exactly (the round-trip
            # invariant compares against it at 1e-9 m)
            e = math.radians(lon_raw[i] - o_lon) * radius * cos_o
            nn = math.radians(lat_raw[i] - o_lat) * radius
            measurement = LocalPoint(e, nn)
        if world is None:
            if measurement is None:
                # no usable fix yet; nothing to anchor the world filter on
                continue
            world = init_world_state(step.t, measurement, ukf_params)
        else:
            world = ukf_predict(world, step.t, ukf_params)
            if measurement is not None:
                world = ukf_update(world, measurement, ukf_params)
        emitted[i] = True
        sm_e[i] = world.mean[0]
        sm_n[i] = world.mean[1]
        if measurement is None:
            ze[i] = sm_e[i]
            zn[i] = sm_n[i]
        else:
            ze[i] = measurement.east_m
            zn[i] = measurement.north_m

    # smoothed positions back to GPS in the fixed frame (mirrors local_to_geo)
    lat_sm = o_lat + np.degrees(sm_n / radius)
    lon_sm = o_lon + np.degrees(sm_e / (radius * cos_o))

    points: list[TrajectoryPoint] = []
    for i, step in enumerate(steps):
        if not emitted[i]:
            continue
        smoothed_geo = GeoPoint(float(lat_sm[i]), float(lon_sm[i]))
        if horizon[i]:
            raw_geo = smoothed_geo
        else:
            raw_geo = GeoPoint(float(lat_raw[i]), float(lon_raw[i]))
        points.append(
            TrajectoryPoint(
                t=step.t,
                raw_geo=raw_geo,
                smoothed_geo=smoothed_geo,
                smoothed_local=LocalPoint(float(sm_e[i]), float(sm_n[i])),
                coasted=step.coasted or bool(horizon[i]),
                raw_local=LocalPoint(float(ze[i]), float(zn[i])),
            )
        )
    return GeoTrajectory(points)


def evaluate(
    traj: GeoTrajectory,
    truth: Sequence[tuple[float, GeoPoint]],
    skip_coasted: bool = False,
    earth_radius_m: float = EARTH_RADIUS_M,
) -> EvalReport:
    """Compare the trajectory against GPS ground truth.

    For every truth sample inside the trajectory's span, the raw and smoothed
    geo estimates are linearly interpolated (in the plane anchored at that
    truth sample, so the comparison is in meters) and the 2-D position errors
    are aggregated.
    """
    for (ta, _), (tb, _) in zip(truth, truth[1:]):
        if tb <= ta:
            raise TimeOrderError("ground-truth timestamps must strictly increase")
    points = [p for p in traj.points if not (skip_coasted and p.coasted)]
    if not points:
        raise EmptyOverlapError("no trajectory points available for evaluation")
    ts = [p.t for p in points]

    raw_errs: list[tuple[float, float]] = []
    smooth_errs: list[tuple[float, float]] = []
    for t_true, g_true in truth:
        if t_true < ts[0] or t_true > ts[-1]:
            continue
        k = bisect_right(ts, t_true) - 1
        if k >= len(points) - 1:
            k2 = k
            frac = 0.0
        else:
            k2 = k + 1
            frac = (t_true - ts[k]) / (ts[k2] - ts[k])
        ref = GeoReference(g_true, earth_radius_m)
        for errs, geo_a, geo_b in (
            (raw_errs, points[k].raw_geo, points[k2].raw_geo),
            (smooth_errs, points[k].smoothed_geo, points[k2].smoothed_geo),
        ):
            a = geo_to_local(ref, geo_a)
            b = geo_to_local(ref, geo_b)
            errs.append(
                (
                    a.east_m + frac * (b.east_m - a.east_m),
                    a.north_m + frac * (b.north_m - a.north_m),
                )
            )
    if not raw_errs:
        raise EmptyOverlapError("no ground-truth samples fall inside the trajectory span")
    return EvalReport(raw=_stats(raw_errs), smoothed=_stats(smooth_errs))


def _stats(errs: list[tuple[float, float]]) -> ErrorStats:
    e = np.array([x for x, _ in errs])
    n = np.array([y for _, y in errs])
    norms = np.hypot(e, n)
    return ErrorStats(
        rmse_m=float(np.sqrt(np.mean(norms**2))),
        mean_err_m=float(np.mean(norms)),
        max_err_m=float(np.max(norms)),
        east_rmse_m=float(np.sqrt(np.mean(e**2))),
        north_rmse_m=float(np.sqrt(np.mean(n**2))),
        n_matched=len(errs),
    )
