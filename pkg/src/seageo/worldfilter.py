"""Unscented Kalman filter over the boat's world-plane position.

Second smoothing stage: the state is [east, north, v_east, v_north] in a
fixed metric frame, driven by plane-position measurements produced by the
projective map.  Sigma points use the scaled parameterization (spread /
prior-knowledge / secondary-scaling, conventional defaults 1e-3 / 2 / 0);
the motion model is constant velocity, so on clean data the filter is
numerically equivalent to a linear Kalman filter, which the tests exploit
as an oracle.  Covariance square roots take a Cholesky fast path and fall
back to a symmetric eigendecomposition that clamps rounding-level negative
eigenvalues to zero; anything more indefinite raises instead of being
silently accepted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import DomainError, FilterDegeneracyError, TimeOrderError
from .geodesy import LocalPoint

_EIG_CLAMP = -1e-9


@dataclass
class WorldState:
    """Gaussian belief over [e, n, ve, vn] (m, m, m/s, m/s)."""

    mean: np.ndarray
    cov: np.ndarray
    last_t: float

    def position(self) -> LocalPoint:
        return LocalPoint(float(self.mean[0]), float(self.mean[1]))


@dataclass(frozen=True)
class UkfParams:
    """Sigma-point spread and noise configuration.

    spread / prior_knowledge / secondary_scaling are the usual scaled-UKF
    triple; q_intensity is the white-noise-acceleration intensity (m^2/s^3),
    r_pos the per-axis measurement variance (m^2, floored at r_floor so that
    exact measurements remain usable), init_v_std the prior velocity std used
    when a trajectory is started from its first sample.
    """

    spread: float = 1e-3
    prior_knowledge: float = 2.0
    secondary_scaling: float = 0.0
    q_intensity: float = 0.1
    r_pos: float = 4.0
    init_v_std: float = 5.0
    r_floor: float = 1e-6

    def __post_init__(self):
        if not 0.0 < self.spread <= 1.0:
            raise DomainError(f"spread must lie in (0, 1], got {self.spread}")
        if self.q_intensity < 0 or self.r_pos < 0:
            raise DomainError("noise intensities must be non-negative")
        if self.r_floor <= 0:
            raise DomainError("r_floor must be positive")

    def effective_r_pos(self) -> float:
        return max(self.r_pos, self.r_floor)


@lru_cache(maxsize=32)
def _weights(n: int, spread: float, prior_knowledge: float, secondary_scaling: float):
    lam = spread * spread * (n + secondary_scaling) - n
    if n + lam <= 0:
        raise DomainError(
            f"sigma-point scaling invalid: n + lambda = {n + lam} must be positive"
        )
    wm = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
    wc = wm.copy()
    wm[0] = lam / (n + lam)
    wc[0] = lam / (n + lam) + (1.0 - spread * spread + prior_knowledge)
    wm.setflags(write=False)
    wc.setflags(write=False)
    wc_col = wc.reshape(-1, 1).copy()
    wc_col.setflags(write=False)
    return lam, wm, wc, wc_col


def _chol4(a: np.ndarray, scale: float) -> np.ndarray | None:
    """Unrolled Cholesky of ``scale * a`` for 4x4; None when a pivot fails.

    The scale is folded in via cholesky(s*A) = sqrt(s) * cholesky(A).
    """
    m = a.tolist()
    p = m[0][0]
    if p <= 0.0:
        return None
    l00 = math.sqrt(p)
    l10 = m[1][0] / l00
    l20 = m[2][0] / l00
    l30 = m[3][0] / l00
    p = m[1][1] - l10 * l10
    if p <= 0.0:
        return None
    l11 = math.sqrt(p)
    l21 = (m[2][1] - l20 * l10) / l11
    l31 = (m[3][1] - l30 * l10) / l11
    p = m[2][2] - l20 * l20 - l21 * l21
    if p <= 0.0:
        return None
    l22 = math.sqrt(p)
    l32 = (m[3][2] - l30 * l20 - l31 * l21) / l22
    p = m[3][3] - l30 * l30 - l31 * l31 - l32 * l32
    if p <= 0.0:
        return None
    l33 = math.sqrt(p)
    g = math.sqrt(scale)
    return np.array(
        [
            [g * l00, 0.0, 0.0, 0.0],
            [g * l10, g * l11, 0.0, 0.0],
            [g * l20, g * l21, g * l22, 0.0],
            [g * l30, g * l31, g * l32, g * l33],
        ]
    )


def _psd_sqrt(cov: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Matrix square root of ``scale * cov`` for a PSD covariance.

    Fast path: Cholesky (unrolled for the 4-state filter).  When that fails
    (semidefinite or slightly indefinite from rounding) fall back to the
    symmetric eigendecomposition, clamping eigenvalues in [-1e-9, 0) to zero
    and rejecting anything more negative.
    """
    if cov.shape == (4, 4):
        root = _chol4(cov, scale)
        if root is not None:
            return root
    else:
        try:
            return np.linalg.cholesky(scale * cov)
        except np.linalg.LinAlgError:
            pass
    eigvals, eigvecs = np.linalg.eigh((cov + cov.T) * 0.5)
    if eigvals[0] < _EIG_CLAMP:
        raise FilterDegeneracyError(
            f"covariance is indefinite (min eigenvalue {eigvals[0]:.3e})"
        )
    eigvals = np.maximum(eigvals, 0.0)
    return (eigvecs * np.sqrt(scale * eigvals)) @ eigvecs.T


def sigma_points(
    mean: np.ndarray, cov: np.ndarray, params: UkfParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Deterministic sample set whose weighted moments match (mean, cov).

    Returns (points, mean_weights, cov_weights) with points of shape
    (2n+1, n): the mean itself plus +/- the columns of sqrt((n+lam)*cov).
    """
    mean = np.asarray(mean, dtype=float)
    n = mean.shape[0]
    lam, wm, wc, _ = _weights(n, params.spread, params.prior_knowledge, params.secondary_scaling)
    root = _psd_sqrt(np.asarray(cov, dtype=float), n + lam)
    points = np.empty((2 * n + 1, n))
    points[0] = mean
    points[1 : n + 1] = mean + root.T
    points[n + 1 :] = mean - root.T
    return points, wm, wc


def _unscented_moments(points: np.ndarray, wm: np.ndarray, wc_col: np.ndarray):
    mean = wm @ points
    dev = points - mean
    cov = (dev * wc_col).T @ dev
    return mean, dev, cov


@lru_cache(maxsize=256)
def _cv_matrix_t(dt: float) -> np.ndarray:
    F = np.eye(4)
    F[0, 2] = dt
    F[1, 3] = dt
    Ft = F.T.copy()
    Ft.setflags(write=False)
    return Ft


def _cv_transition(points: np.ndarray, dt: float) -> np.ndarray:
    if points.shape[1] == 4:
        return points @ _cv_matrix_t(dt)
    out = points.copy()
    out[:, 0] += dt * points[:, 2]
    out[:, 1] += dt * points[:, 3]
    return out


@lru_cache(maxsize=256)
def _process_noise(dt: float, q: float) -> np.ndarray:
    dt2 = dt * dt
    q_pp = q * dt * dt2 / 3.0
    q_pv = q * dt2 / 2.0
    q_vv = q * dt
    Q = np.zeros((4, 4))
    Q[0, 0] = Q[1, 1] = q_pp
    Q[0, 2] = Q[2, 0] = q_pv
    Q[1, 3] = Q[3, 1] = q_pv
    Q[2, 2] = Q[3, 3] = q_vv
    Q.setflags(write=False)
    return Q


def ukf_predict(s: WorldState, t_next: float, params: UkfParams) -> WorldState:
    """Propagate the belief to ``t_next`` through the constant-velocity model."""
    dt = t_next - s.last_t
    if dt < 0:
        raise TimeOrderError(f"prediction time {t_next} precedes state time {s.last_t}")
    if dt == 0.0:
        return WorldState(s.mean.copy(), s.cov.copy(), s.last_t)
    points, wm, wc = sigma_points(s.mean, s.cov, params)
    _, _, _, wc_col = _weights(
        s.mean.shape[0], params.spread, params.prior_knowledge, params.secondary_scaling
    )
    propagated = _cv_transition(points, dt)
    mean, _, cov = _unscented_moments(propagated, wm, wc_col)
    cov = cov + _process_noise(dt, params.q_intensity)
    cov = (cov + cov.T) * 0.5
    return WorldState(mean=mean, cov=cov, last_t=t_next)


def ukf_update(s: WorldState, z: LocalPoint, params: UkfParams) -> WorldState:
    """Fuse a plane-position measurement h(x) = (e, n) into the belief."""
    points, _, _ = sigma_points(s.mean, s.cov, params)
    _, _, _, wc_col = _weights(
        s.mean.shape[0], params.spread, params.prior_knowledge, params.secondary_scaling
    )
    # points are symmetric about the prior mean, so deviations from s.mean
    # are the canonical (and exactly cancellation-free) choice
    x_dev = points - s.mean
    z_dev = x_dev[:, :2]
    # cross-covariance between state and measurement; its top 2x2 block is
    # the measurement covariance itself, since h just selects (e, n)
    cross = (x_dev * wc_col).T @ z_dev  # (n, 2)
    r = params.effective_r_pos()
    s00 = float(cross[0, 0]) + r
    s11 = float(cross[1, 1]) + r
    s01 = float(cross[0, 1])
    det = s00 * s11 - s01 * s01
    if s00 <= 0 or det <= 0:
        raise FilterDegeneracyError("innovation covariance is not positive definite")
    # K = cross @ S^-1, with the 2x2 inverse written out
    inv = np.array([[s11 / det, -s01 / det], [-s01 / det, s00 / det]])
    K = cross @ inv
    innovation = np.array([z.east_m - float(s.mean[0]), z.north_m - float(s.mean[1])])
    mean = s.mean + K @ innovation
    # K S K^T = cross K^T since K = cross S^-1 and S is symmetric
    cov = s.cov - cross @ K.T
    cov = (cov + cov.T) * 0.5
    return WorldState(mean=mean, cov=cov, last_t=s.last_t)


def init_world_state(t: float, z: LocalPoint, params: UkfParams) -> WorldState:
    """Start the filter at the first sample: measured position, zero velocity."""
    r = params.effective_r_pos()
    v_var = params.init_v_std**2
    return WorldState(
        mean=np.array([z.east_m, z.north_m, 0.0, 0.0]),
        cov=np.diag([r, r, v_var, v_var]).astype(float),
        last_t=t,
    )


def smooth_trajectory(
    samples: Sequence[tuple[float, LocalPoint]], params: UkfParams = UkfParams()
) -> list[tuple[float, WorldState]]:
    """Forward-filter a time-ordered list of plane positions.

    Purely causal: each output state conditions only on samples up to its
    time; no backward smoothing pass is applied.
    """
    if not samples:
        return []
    out: list[tuple[float, WorldState]] = []
    t0, z0 = samples[0]
    state = init_world_state(t0, z0, params)
    out.append((t0, state))
    prev_t = t0
    for t, z in samples[1:]:
        if t <= prev_t:
            raise TimeOrderError(f"sample times must be strictly increasing ({t} after {prev_t})")
        state = ukf_predict(state, t, params)
        state = ukf_update(state, z, params)
        out.append((t, state))
        prev_t = t
    return out
