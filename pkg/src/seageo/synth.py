"""Synthetic maritime scenarios with exactly known geometry.

Every end-to-end check in this repo runs against data generated here: boat
paths on the sea plane, a camera with a known pixel<->plane map (built from a
simple oblique pinhole model or an explicit matrix), detections projected
through that map with controllable noise and dropouts, calibration
quadruplets, and GPS ground truth.  Generation is a pure function of the
scenario config, including its seed: the same config produces byte-identical
files.

The camera-relative geometry mirrors the pipeline's model exactly: boat
positions are expressed relative to the camera's GPS position at each frame
(rotated by the camera heading when one is set) before projecting to pixels,
so a moving platform exercises the same per-frame anchoring the tracker-side
code performs in reverse.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import formats
from .errors import DomainError, GenerationError
from .geodesy import GeoPoint, GeoReference, LocalPoint, local_to_geo
from .pipeline import CameraSample, Quadruplet, enu_to_camera_frame
from .planarmap import (
    DistortionParams,
    PixelPoint,
    PlanarMap,
    apply as map_apply,
    inverse_apply,
)
from .tracker import BBox, Detection


@dataclass(frozen=True)
class PinholeSpec:
    """Oblique camera over a flat sea: enough to derive the plane homography.

    The camera sits height_m above the plane looking along its +y (forward)
    axis, tilted down by tilt_deg; focal_px and the principal point (cx, cy)
    give the pixel scale.  The horizon line sits at v = cy - focal_px*tan(tilt).
    """

    height_m: float = 15.0
    focal_px: float = 1000.0
    tilt_deg: float = 10.0
    cx: float = 640.0
    cy: float = 360.0
    image_w: int = 1280
    image_h: int = 720

    def plane_to_pixel_matrix(self) -> np.ndarray:
        th = math.radians(self.tilt_deg)
        c, s = math.cos(th), math.sin(th)
        f, cx, cy, h = self.focal_px, self.cx, self.cy, self.height_m
        return np.array(
            [
                [f, cx * c, cx * h * s],
                [0.0, cy * c - f * s, h * (cy * s + f * c)],
                [0.0, c, h * s],
            ]
        )


@dataclass(frozen=True)
class CameraSpec:
    start: GeoPoint = GeoPoint(36.0, -75.0)
    vel_east: float = 0.0
    vel_north: float = 0.0
    heading_deg: float | None = None
    pinhole: PinholeSpec = PinholeSpec()
    homography: tuple[float, ...] | None = None  # explicit pixel->plane H, row-major
    distortion: DistortionParams | None = None

    def true_map(self) -> PlanarMap:
        if self.homography is not None:
            H = np.array(self.homography, dtype=float).reshape(3, 3)
        else:
            H = np.linalg.inv(self.pinhole.plane_to_pixel_matrix())
        return PlanarMap.from_matrix(H, distortion=self.distortion)


@dataclass(frozen=True)
class BoatSpec:
    """One boat: a path, a physical width, and emission statistics.

    The path is either start + constant velocity or piecewise-linear
    waypoints (t, east, north); coordinates are in the scene frame anchored
    at the camera's start position, or relative to the moving camera when
    relative_to_camera is set.  A boat flagged as calibration source donates
    its noiseless track to the quadruplets file; emit_detections False keeps
    it out of the detection stream entirely.
    """

    name: str
    target: bool = False
    width_m: float = 6.0
    p_c_mean: float = 0.9
    p_c_std: float = 0.0
    det_score_mean: float = 0.9
    det_score_std: float = 0.0
    start_east: float = 0.0
    start_north: float = 100.0
    vel_east: float = 0.0
    vel_north: float = 0.0
    waypoints: tuple[tuple[float, float, float], ...] | None = None
    relative_to_camera: bool = False
    emit_detections: bool = True
    calibration_source: bool = False

    def path_position(self, t: float) -> tuple[float, float]:
        if self.waypoints is not None:
            ts = [w[0] for w in self.waypoints]
            return (
                float(np.interp(t, ts, [w[1] for w in self.waypoints])),
                float(np.interp(t, ts, [w[2] for w in self.waypoints])),
            )
        return self.start_east + self.vel_east * t, self.start_north + self.vel_north * t


@dataclass(frozen=True)
class NoiseSpec:
    pixel_std: float = 0.0
    dropout_prob: float = 0.0
    dropout_windows: tuple[tuple[float, float], ...] = ()  # [t0, t1), target only


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    seed: int
    duration_s: float
    fps: float
    camera: CameraSpec = CameraSpec()
    boats: tuple[BoatSpec, ...] = ()
    noise: NoiseSpec = NoiseSpec()
    distractors: int = 0
    quadruplet_cadence_s: float = 1.0
    truth_cadence_s: float = 1.0

    def __post_init__(self):
        if not self.fps > 0:
            raise DomainError(f"fps must be positive, got {self.fps}")
        if not self.duration_s > 0:
            raise DomainError(f"duration must be positive, got {self.duration_s}")
        if sum(1 for b in self.boats if b.target) != 1:
            raise DomainError("exactly one boat must be marked as the target")

    def target(self) -> BoatSpec:
        return next(b for b in self.boats if b.target)


@dataclass(frozen=True)
class SynthBundle:
    """Paths of the generated dataset, all in the pipeline file formats."""

    detections: Path
    camera_track: Path
    quadruplets: Path
    truth: Path
    true_calibration: Path


def _horizon_v(pmap: PlanarMap, cx: float) -> float | None:
    """Image row where the plane maps to infinity, along the column u = cx."""
    row = pmap.H[2]
    if row[1] == 0.0:
        return None
    return float(-(row[0] * cx + row[2]) / row[1])


def pixel_jacobian(pmap: PlanarMap, world: LocalPoint) -> np.ndarray:
    """d(pixel)/d(plane) of the plane->pixel direction at ``world`` (2x2).

    Lens distortion, when present, is ignored here; the Jacobian is of the
    ideal projective map only.
    """
    hinv = np.linalg.inv(pmap.H)
    vec = hinv @ np.array([world.east_m, world.north_m, 1.0])
    if abs(vec[2]) < 1e-12:
        raise GenerationError(f"plane point ({world.east_m}, {world.north_m}) is on the horizon")
    u = vec[0] / vec[2]
    v = vec[1] / vec[2]
    return np.array(
        [
            [(hinv[0, 0] - u * hinv[2, 0]) / vec[2], (hinv[0, 1] - u * hinv[2, 1]) / vec[2]],
            [(hinv[1, 0] - v * hinv[2, 0]) / vec[2], (hinv[1, 1] - v * hinv[2, 1]) / vec[2]],
        ]
    )


def meters_per_pixel(pmap: PlanarMap, world: LocalPoint) -> float:
    """Worst-case plane displacement produced by a unit pixel displacement."""
    return float(np.linalg.svd(np.linalg.inv(pixel_jacobian(pmap, world)), compute_uv=False)[0])


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _auto_distractors(cfg: ScenarioConfig, pmap: PlanarMap, rng: np.random.Generator) -> list[BoatSpec]:
    """Deterministically sampled extra boats inside the visible sea region.

    Sampled southward velocities are clamped so no distractor can reach the
    plane's line at infinity within the configured duration (explicit boats,
    by contrast, fail generation hard if they cross it).
    """
    ph = cfg.camera.pinhole
    v_h = _horizon_v(pmap, ph.cx)
    v_lo = ph.image_h * 0.95
    v_hi = (v_h + 0.2 * (ph.image_h - v_h)) if v_h is not None else ph.image_h * 0.05
    out = []
    for i in range(cfg.distractors):
        u = rng.uniform(0.15 * ph.image_w, 0.85 * ph.image_w)
        v = rng.uniform(v_hi, v_lo)
        pos = map_apply(pmap, PixelPoint(u, v))
        vel_north = float(rng.uniform(-1.0, 1.0))
        min_final_north = 15.0
        if pos.north_m + vel_north * cfg.duration_s < min_final_north:
            vel_north = (min_final_north - pos.north_m) / cfg.duration_s
        out.append(
            BoatSpec(
                name=f"distractor-{i}",
                width_m=float(rng.uniform(4.0, 8.0)),
                p_c_mean=0.1,
                p_c_std=0.02,
                det_score_mean=0.85,
                det_score_std=0.02,
                start_east=pos.east_m,
                start_north=pos.north_m,
                vel_east=float(rng.uniform(-2.0, 2.0)),
                vel_north=vel_north,
                relative_to_camera=True,
            )
        )
    return out


def _in_dropout(t: float, windows: tuple[tuple[float, float], ...]) -> bool:
    return any(t0 <= t < t1 for t0, t1 in windows)


def generate(cfg: ScenarioConfig, out_dir: str | Path) -> SynthBundle:
    """Render the scenario into the five pipeline-format files under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    pmap = cfg.camera.true_map()
    heading = cfg.camera.heading_deg if cfg.camera.heading_deg is not None else 0.0
    scene_ref = GeoReference(cfg.camera.start)

    boats = list(cfg.boats) + _auto_distractors(cfg, pmap, rng)
    cal_sources = [b for b in boats if b.calibration_source]
    if len(cal_sources) > 1:
        raise DomainError("at most one boat may be the calibration source")
    cal_boat = cal_sources[0] if cal_sources else cfg.target()

    n_frames = int(round(cfg.duration_s * cfg.fps)) + 1
    quad_step = max(1, int(round(cfg.quadruplet_cadence_s * cfg.fps)))
    truth_step = max(1, int(round(cfg.truth_cadence_s * cfg.fps)))

    camera_samples: list[CameraSample] = []
    detections: list[Detection] = []
    quadruplets: list[Quadruplet] = []
    truth: list[tuple[float, GeoPoint]] = []
    horizon_sign = 0.0
    hinv_row = np.linalg.inv(pmap.H)[2]

    for i in range(n_frames):
        t = i / cfg.fps
        cam_off_e = cfg.camera.vel_east * t
        cam_off_n = cfg.camera.vel_north * t
        cam_geo = local_to_geo(scene_ref, LocalPoint(cam_off_e, cam_off_n))
        camera_samples.append(CameraSample(t, cam_geo, cfg.camera.heading_deg))

        cam_ref = GeoReference(cam_geo)
        for boat in boats:
            e, n = boat.path_position(t)
            if boat.relative_to_camera:
                rel_e, rel_n = e, n
            else:
                rel_e, rel_n = e - cam_off_e, n - cam_off_n
            # GPS positions are anchored at the camera per frame, matching the
            # frame convention the consuming pipeline inverts; this keeps the
            # synthetic world exactly self-consistent for the noiseless oracle
            boat_geo = local_to_geo(cam_ref, LocalPoint(rel_e, rel_n))
            bx, by = enu_to_camera_frame(heading, rel_e, rel_n)

            # horizon guard: every boat must stay on the visible side of the
            # plane's line at infinity for the whole run
            z = hinv_row[0] * bx + hinv_row[1] * by + hinv_row[2]
            if abs(z) < 1e-9 or (horizon_sign != 0.0 and math.copysign(1.0, z) != horizon_sign):
                raise GenerationError(f"boat {boat.name!r} crosses the horizon locus at t={t}")
            horizon_sign = math.copysign(1.0, z)

            pixel = inverse_apply(pmap, LocalPoint(bx, by))

            if boat is cal_boat and i % quad_step == 0:
                quadruplets.append(Quadruplet(t, pixel, boat_geo))

            if boat.target and i % truth_step == 0:
                truth.append((t, boat_geo))

            if not boat.emit_detections:
                continue
            if boat.target and _in_dropout(t, cfg.noise.dropout_windows):
                continue
            if cfg.noise.dropout_prob > 0 and rng.uniform() < cfg.noise.dropout_prob:
                continue

            jac = pixel_jacobian(pmap, LocalPoint(bx, by))
            dist = math.hypot(bx, by)
            if dist < 1e-9:
                raise GenerationError(f"boat {boat.name!r} is at the camera position at t={t}")
            perp = np.array([-by / dist, bx / dist])
            width_px = boat.width_m * float(np.linalg.norm(jac @ perp))

            u, v, w = pixel.u, pixel.v, width_px
            if cfg.noise.pixel_std > 0:
                u += rng.normal(0.0, cfg.noise.pixel_std)
                v += rng.normal(0.0, cfg.noise.pixel_std)
                w += rng.normal(0.0, cfg.noise.pixel_std)
            w = max(w, 1.0)
            h_box = max(0.45 * w, 1.0)
            score = _clamp01(
                boat.det_score_mean + (rng.normal(0.0, boat.det_score_std) if boat.det_score_std > 0 else 0.0)
            )
            p_c = _clamp01(
                boat.p_c_mean + (rng.normal(0.0, boat.p_c_std) if boat.p_c_std > 0 else 0.0)
            )
            detections.append(
                Detection(
                    frame=i,
                    t=t,
                    bbox=BBox(u - w / 2.0, v - h_box, w, h_box),
                    det_score=score,
                    p_c=p_c,
                )
            )

    bundle = SynthBundle(
        detections=out_dir / "detections.jsonl",
        camera_track=out_dir / "camera_track.jsonl",
        quadruplets=out_dir / "quadruplets.jsonl",
        truth=out_dir / "truth.jsonl",
        true_calibration=out_dir / "true_calibration.json",
    )
    formats.write_detections(bundle.detections, detections)
    formats.write_camera_track(bundle.camera_track, camera_samples)
    formats.write_quadruplets(bundle.quadruplets, quadruplets)
    formats.write_truth(bundle.truth, truth)
    formats.write_calibration(bundle.true_calibration, cfg.camera.start, pmap)
    return bundle


# ---------------------------------------------------------------------------
# bundled scenarios

def _zigzag(t_end: float, e_amp: float, n_lo: float, n_hi: float, legs: int = 4):
    """Waypoints sweeping east/west while advancing north: a non-collinear path."""
    pts = []
    for k in range(legs + 1):
        t = t_end * k / legs
        e = e_amp if k % 2 else -e_amp
        n = n_lo + (n_hi - n_lo) * k / legs
        pts.append((t, e, n))
    return tuple(pts)


def bundled_scenarios() -> dict[str, ScenarioConfig]:
    """Named scenarios used by the test and acceptance suites."""
    cam_still = CameraSpec()

    def cal_boat(t_end: float, e_amp: float = 40.0, n_lo: float = 70.0, n_hi: float = 130.0,
                 relative: bool = False) -> BoatSpec:
        return BoatSpec(
            name="calibration",
            waypoints=_zigzag(t_end, e_amp, n_lo, n_hi),
            emit_detections=False,
            calibration_source=True,
            relative_to_camera=relative,
        )

    scenarios = {
        "noiseless-straight": ScenarioConfig(
            name="noiseless-straight",
            seed=101,
            duration_s=30.0,
            fps=10.0,
            camera=cam_still,
            boats=(
                BoatSpec(
                    name="target",
                    target=True,
                    p_c_mean=0.95,
                    start_east=-20.0,
                    start_north=85.0,
                    vel_east=1.5,
                    vel_north=0.4,
                ),
                cal_boat(30.0),
            ),
        ),
        "noisy-near-horizon": ScenarioConfig(
            name="noisy-near-horizon",
            seed=202,
            duration_s=40.0,
            fps=10.0,
            camera=CameraSpec(pinhole=PinholeSpec(height_m=10.0, tilt_deg=6.0)),
            boats=(
                BoatSpec(
                    name="target",
                    target=True,
                    p_c_mean=0.9,
                    p_c_std=0.02,
                    det_score_std=0.02,
                    start_east=-30.0,
                    start_north=140.0,
                    vel_east=1.5,
                    vel_north=0.5,
                ),
                cal_boat(40.0, n_lo=80.0, n_hi=170.0),
            ),
            noise=NoiseSpec(pixel_std=1.0),
            distractors=2,
        ),
        "crossing-distractor": ScenarioConfig(
            name="crossing-distractor",
            seed=303,
            duration_s=30.0,
            fps=10.0,
            camera=cam_still,
            boats=(
                BoatSpec(
                    name="target",
                    target=True,
                    p_c_mean=0.95,
                    p_c_std=0.02,
                    det_score_std=0.02,
                    start_east=-30.0,
                    start_north=100.0,
                    vel_east=2.0,
                ),
                BoatSpec(
                    name="crosser",
                    p_c_mean=0.05,
                    p_c_std=0.02,
                    det_score_std=0.02,
                    start_east=30.0,
                    start_north=96.0,
                    vel_east=-2.0,
                    vel_north=0.3,
                ),
                cal_boat(30.0, n_lo=75.0, n_hi=135.0),
            ),
            noise=NoiseSpec(pixel_std=0.3),
        ),
        "occlusion-gap": ScenarioConfig(
            name="occlusion-gap",
            seed=404,
            duration_s=30.0,
            fps=10.0,
            camera=cam_still,
            boats=(
                BoatSpec(
                    name="target",
                    target=True,
                    p_c_mean=0.95,
                    start_east=-20.0,
                    start_north=85.0,
                    vel_east=1.5,
                    vel_north=0.4,
                ),
                cal_boat(30.0),
            ),
            noise=NoiseSpec(dropout_windows=((12.0, 12.8),)),
        ),
        "moving-platform": ScenarioConfig(
            name="moving-platform",
            seed=505,
            duration_s=30.0,
            fps=10.0,
            camera=CameraSpec(vel_east=2.0, vel_north=1.0),
            boats=(
                BoatSpec(
                    name="target",
                    target=True,
                    p_c_mean=0.95,
                    start_east=-25.0,
                    start_north=90.0,
                    vel_east=1.5,
                    vel_north=0.5,
                    relative_to_camera=True,
                ),
                cal_boat(30.0, relative=True),
            ),
        ),
    }
    return scenarios


def get_scenario(name: str) -> ScenarioConfig:
    scenarios = bundled_scenarios()
    if name not in scenarios:
        raise DomainError(f"unknown scenario {name!r}; available: {sorted(scenarios)}")
    return scenarios[name]


# ---------------------------------------------------------------------------
# config-file overrides

OVERRIDE_KEYS = {
    "scenario",
    "seed",
    "duration_s",
    "fps",
    "pixel_std",
    "dropout_prob",
    "dropout_windows",
    "distractors",
    "quadruplet_cadence_s",
    "truth_cadence_s",
}


def _parse_windows(raw: str) -> tuple[tuple[float, float], ...]:
    windows = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        bits = part.split(":")
        if len(bits) != 2:
            raise DomainError(f"dropout window {part!r} must have the form start:end")
        windows.append((float(bits[0]), float(bits[1])))
    return tuple(windows)


def apply_overrides(cfg: ScenarioConfig, overrides: dict[str, str]) -> ScenarioConfig:
    """Apply flat config-file / CLI overrides to a scenario.

    Changing the duration rescales waypoint times proportionally so paths
    designed for the whole run (the calibration zigzag in particular) keep
    their shape instead of degenerating to a fragment.
    """
    unknown = set(overrides) - OVERRIDE_KEYS
    if unknown:
        raise DomainError(f"unknown scenario keys {sorted(unknown)}")
    changes: dict = {}
    noise_changes: dict = {}
    for key, raw in overrides.items():
        if key == "scenario":
            continue
        try:
            if key == "seed":
                changes["seed"] = int(raw)
            elif key == "distractors":
                changes["distractors"] = int(raw)
            elif key in ("duration_s", "fps", "quadruplet_cadence_s", "truth_cadence_s"):
                changes[key] = float(raw)
            elif key in ("pixel_std", "dropout_prob"):
                noise_changes[key] = float(raw)
            elif key == "dropout_windows":
                noise_changes[key] = _parse_windows(raw)
        except ValueError:
            raise DomainError(f"invalid value for {key!r}: {raw!r}") from None
    if noise_changes:
        changes["noise"] = dataclasses.replace(cfg.noise, **noise_changes)
    if "duration_s" in changes and changes["duration_s"] != cfg.duration_s:
        scale = changes["duration_s"] / cfg.duration_s
        boats = tuple(
            dataclasses.replace(
                b, waypoints=tuple((t * scale, e, n) for t, e, n in b.waypoints)
            )
            if b.waypoints is not None
            else b
            for b in cfg.boats
        )
        changes["boats"] = boats
    return dataclasses.replace(cfg, **changes) if changes else cfg
