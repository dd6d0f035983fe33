"""Tracking-by-detection of the target boat in image space.

A linear Kalman filter runs on [x, y, w, vx, vy], where (x, y) is the
bottom-center of the bounding box (the point touching the sea surface) and
w is the box width in pixels.  Position follows a constant-velocity model,
width a random walk.  Per frame, each candidate detection is scored with

    P_K = exp(-d^2 / sigma^2)            # distance gate
    P   = alpha * P_C + (1 - alpha) * P_K  # convex blend with appearance

and the best-scoring detection is accepted when P reaches the threshold;
otherwise the track coasts on prediction alone.  After too many consecutive
coasts the track is lost, and a later detection that clears the threshold
re-initializes it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, FilterDegeneracyError, TimeOrderError
from .planarmap import PixelPoint


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: top-left corner (x, y), width w, height h, in pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise DomainError(f"bounding box must have positive size, got w={self.w}, h={self.h}")


@dataclass(frozen=True)
class Detection:
    """One detector output; p_c is the appearance-classifier probability when available."""

    frame: int
    t: float
    bbox: BBox
    det_score: float | None = None
    p_c: float | None = None

    def __post_init__(self):
        for name, value in (("det_score", self.det_score), ("p_c", self.p_c)):
            if value is not None and not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value}")


def effective_p_c(det: Detection) -> float:
    """Appearance probability with documented fallbacks: p_c, else detector score, else 0.5."""
    if det.p_c is not None:
        return det.p_c
    if det.det_score is not None:
        return det.det_score
    return 0.5


def bottom_center(b: BBox) -> PixelPoint:
    """The box point assumed to touch the sea surface: (x + w/2, y + h)."""
    return PixelPoint(b.x + b.w / 2.0, b.y + b.h)


@dataclass
class TrackState:
    """Gaussian belief over [x, y, w, vx, vy] (px, px, px, px/s, px/s)."""

    mean: np.ndarray
    cov: np.ndarray
    last_t: float
    frames_coasted: int = 0

    def position(self) -> PixelPoint:
        return PixelPoint(float(self.mean[0]), float(self.mean[1]))


@dataclass(frozen=True)
class AssociationConfig:
    """Association scoring constants; defaults follow the reference operating point."""

    alpha: float = 0.5
    sigma: float = 10.0
    p_thr: float = 0.51
    max_coast_frames: int = 30

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 < self.p_thr < 1.0:
            raise DomainError(f"p_thr must lie in (0, 1), got {self.p_thr}")
        if self.max_coast_frames < 0:
            raise DomainError("max_coast_frames must be non-negative")


@dataclass(frozen=True)
class TrackerParams:
    """Noise model for the image-space filter (all in pixels / seconds)."""

    r_xy_px: float = 2.0        # measurement std on x, y
    r_w_px: float = 4.0         # measurement std on w
    q_px: float = 10.0          # white-noise-acceleration intensity, px^2/s^3
    q_w_px: float = 1.0         # width random-walk intensity, px^2/s
    init_v_std_px: float = 20.0
    width_floor_px: float = 1.0


def init_state(det: Detection, params: TrackerParams) -> TrackState:
    """Start a track at a designated detection: zero velocity, configured prior."""
    bc = bottom_center(det.bbox)
    mean = np.array([bc.u, bc.v, max(det.bbox.w, params.width_floor_px), 0.0, 0.0])
    cov = np.diag(
        [
            params.r_xy_px**2,
            params.r_xy_px**2,
            params.r_w_px**2,
            params.init_v_std_px**2,
            params.init_v_std_px**2,
        ]
    ).astype(float)
    return TrackState(mean=mean, cov=cov, last_t=det.t, frames_coasted=0)


@lru_cache(maxsize=256)
def _process_noise(dt: float, q: float, q_w: float) -> np.ndarray:
    dt2 = dt * dt
    q_pp = q * dt * dt2 / 3.0
    q_pv = q * dt2 / 2.0
    Q = np.zeros((5, 5))
    Q[0, 0] = Q[1, 1] = q_pp
    Q[0, 3] = Q[3, 0] = q_pv
    Q[1, 4] = Q[4, 1] = q_pv
    Q[3, 3] = Q[4, 4] = q * dt
    Q[2, 2] = q_w * dt
    Q.setflags(write=False)
    return Q


def kf_predict(s: TrackState, t_next: float, q: float, q_w: float = 0.0) -> TrackState:
    """Constant-velocity propagation to ``t_next`` with white-noise-acceleration Q.

    The transition F is identity plus x<-vx and y<-vy couplings, so F P F^T is
    computed with row/column slice updates instead of full matmuls.
    """
    dt = t_next - s.last_t
    if dt < 0:
        raise TimeOrderError(f"prediction time {t_next} precedes state time {s.last_t}")
    if dt == 0.0:
        return TrackState(s.mean.copy(), s.cov.copy(), s.last_t, s.frames_coasted)

    mean = s.mean.copy()
    mean[0] += dt * mean[3]
    mean[1] += dt * mean[4]

    cov = s.cov.copy()
    cov[0] += dt * cov[3]
    cov[1] += dt * cov[4]
    cov[:, 0] += dt * cov[:, 3]
    cov[:, 1] += dt * cov[:, 4]
    cov += _process_noise(dt, q, q_w)

    cov += cov.T
    cov *= 0.5
    return TrackState(mean=mean, cov=cov, last_t=t_next, frames_coasted=s.frames_coasted)


def kf_update(
    s: TrackState,
    obs: tuple[float, float, float],
    r: tuple[float, float, float],
    width_floor: float = 1.0,
) -> TrackState:
    """Correct the state with an (x, y, w) observation.

    ``r`` holds the three measurement variances.  Uses the Joseph-form
    covariance update to preserve symmetry and positive semidefiniteness.
    """
    P = s.cov
    a = float(P[0, 0]) + r[0]
    d = float(P[1, 1]) + r[1]
    f = float(P[2, 2]) + r[2]
    b = float(P[0, 1])
    c = float(P[0, 2])
    e = float(P[1, 2])
    # symmetric 3x3 inverse by adjugate; Sylvester minors give the PD check
    c11 = d * f - e * e
    c12 = c * e - b * f
    c13 = b * e - c * d
    det = a * c11 + b * c12 + c * c13
    if a <= 0 or a * d - b * b <= 0 or det <= 0:
        raise FilterDegeneracyError("innovation covariance is not positive definite")
    s_inv = np.array(
        [
            [c11 / det, c12 / det, c13 / det],
            [c12 / det, (a * f - c * c) / det, (b * c - a * e) / det],
            [c13 / det, (b * c - a * e) / det, (a * d - b * b) / det],
        ]
    )

    K = P[:, :3] @ s_inv  # (5, 3); P symmetric so this equals (S^-1 P[:3,:])^T
    innovation = np.asarray(obs, dtype=float) - s.mean[:3]
    mean = s.mean + K @ innovation

    # Joseph form, (I-KH) P (I-KH)^T + K R K^T, expanded so no 5x5 matmul
    # or identity allocation is needed (H selects the first three components)
    AP = P - K @ P[:3, :]
    cov = AP - AP[:, :3] @ K.T + (K * r) @ K.T
    cov += cov.T
    cov *= 0.5

    mean[2] = max(mean[2], width_floor)
    return TrackState(mean=mean, cov=cov, last_t=s.last_t, frames_coasted=0)


def gating_probability(predicted: PixelPoint, detected: PixelPoint, sigma: float) -> float:
    """Distance gate P_K = exp(-d^2 / sigma^2) between prediction and detection."""
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    du = predicted.u - detected.u
    dv = predicted.v - detected.v
    return math.exp(-(du * du + dv * dv) / (sigma * sigma))


def association_score(p_c: float, p_k: float, alpha: float) -> float:
    """Convex blend P = alpha * P_C + (1 - alpha) * P_K."""
    for name, value in (("p_c", p_c), ("p_k", p_k), ("alpha", alpha)):
        if not 0.0 <= value <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {value}")
    return alpha * p_c + (1.0 - alpha) * p_k


def associate(
    s: TrackState, dets: Sequence[Detection], cfg: AssociationConfig
) -> tuple[Detection | None, float]:
    """Pick the detection maximizing P, or none when no score clears the threshold.

    Ties break deterministically: smaller pixel distance first, then input order.
    """
    if not dets:
        return None, 0.0
    frame = dets[0].frame
    for d in dets[1:]:
        if d.frame != frame:
            raise DomainError("all detections passed to associate() must share one frame")

    pred = s.position()
    best: Detection | None = None
    best_p = -1.0
    best_d = math.inf
    for det in dets:
        bc = bottom_center(det.bbox)
        du = pred.u - bc.u
        dv = pred.v - bc.v
        d2 = du * du + dv * dv
        p_k = math.exp(-d2 / (cfg.sigma * cfg.sigma))
        p = cfg.alpha * effective_p_c(det) + (1.0 - cfg.alpha) * p_k
        if p > best_p or (p == best_p and d2 < best_d):
            best, best_p, best_d = det, p, d2
    assert best is not None
    if best_p >= cfg.p_thr:
        return best, best_p
    return None, best_p


@dataclass(frozen=True)
class TrackStep:
    """Per-frame tracker output: the posterior state and what it was driven by."""

    frame: int
    t: float
    state: TrackState
    chosen: Detection | None
    score: float
    coasted: bool
    lost: bool


def track_sequence(
    frames: Iterable[tuple[int, float, Sequence[Detection]]],
    init: Detection,
    cfg: AssociationConfig = AssociationConfig(),
    params: TrackerParams = TrackerParams(),
) -> list[TrackStep]:
    """Fold the filter over per-frame detection lists.

    ``init`` designates the target in its first frame.  Each frame runs
    predict -> associate -> update (or coast).  Once the coast count exceeds
    ``max_coast_frames`` the track is lost; a subsequent detection whose
    combined score clears the threshold re-initializes the state in place.
    """
    state = init_state(init, params)
    r = (params.r_xy_px**2, params.r_xy_px**2, params.r_w_px**2)
    lost = False
    steps: list[TrackStep] = []

    for frame_id, t, dets in frames:
        state = kf_predict(state, t, params.q_px, params.q_w_px)
        chosen, score = associate(state, dets, cfg)
        if chosen is not None:
            if lost:
                state = init_state(chosen, params)
                lost = False
            else:
                bc = bottom_center(chosen.bbox)
                state = kf_update(
                    state, (bc.u, bc.v, chosen.bbox.w), r, width_floor=params.width_floor_px
                )
            coasted = False
        else:
            state = replace(state, frames_coasted=state.frames_coasted + 1)
            if state.frames_coasted > cfg.max_coast_frames:
                lost = True
            coasted = True
        steps.append(
            TrackStep(
                frame=frame_id,
                t=t,
                state=state,
                chosen=chosen,
                score=score,
                coasted=coasted,
                lost=lost,
            )
        )
    return steps
