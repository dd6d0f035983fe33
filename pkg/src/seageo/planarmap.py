"""Plane-projective map between image pixels and the local sea plane.

The visible sea is modeled as a plane, so a single 3x3 homography relates
pixel coordinates to metric east/north coordinates.  Estimation is the
classic direct linear transform: both point sets are first conditioned with
a similarity (centroid at the origin, RMS radius sqrt(2)) to keep the design
matrix well conditioned, the homogeneous least-squares problem is solved by
SVD, and the result is denormalized and rescaled to unit Frobenius norm.

Conventions:
  - pixels: origin top-left, u = column, v = row; subpixel and out-of-frame
    values are allowed (anchors may be extrapolated).
  - H maps raw pixels to raw local meters (the conditioning transforms are
    already folded in); it is invertible away from the horizon line, where
    the homogeneous w coordinate vanishes.
  - optional lens correction is a two-coefficient radial model applied to
    the pixel before the projective map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateGeometryError, DomainError, PointAtInfinityError
from .geodesy import LocalPoint

# |w| below this is treated as "on the horizon" rather than returning
# astronomically large plane coordinates.
HORIZON_EPS = 1e-12

# Relative floor on the second-smallest singular value of the design matrix;
# below it the correspondence geometry does not determine a homography.
_RANK_TOL = 1e-9


@dataclass(frozen=True, slots=True)
class PixelPoint:
    """Image position in pixels, origin at the top-left corner."""

    u: float
    v: float

    def __post_init__(self):
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise DomainError(f"non-finite pixel coordinates ({self.u}, {self.v})")


@dataclass(frozen=True)
class Correspondence:
    """One training pair: a pixel anchor and its known plane position."""

    pixel: PixelPoint
    world: LocalPoint


@dataclass(frozen=True)
class Similarity2D:
    """Isotropic scale + translation, as the 3x3 matrix [[s,0,tx],[0,s,ty],[0,0,1]]."""

    scale: float
    tx: float
    ty: float

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError(f"similarity scale must be positive, got {self.scale}")

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [[self.scale, 0.0, self.tx], [0.0, self.scale, self.ty], [0.0, 0.0, 1.0]]
        )

    def inverse(self) -> "Similarity2D":
        return Similarity2D(1.0 / self.scale, -self.tx / self.scale, -self.ty / self.scale)

    def transform(self, x: float, y: float) -> tuple[float, float]:
        return self.scale * x + self.tx, self.scale * y + self.ty

    @staticmethod
    def identity() -> "Similarity2D":
        return Similarity2D(1.0, 0.0, 0.0)


@dataclass(frozen=True)
class DistortionParams:
    """Two-coefficient radial lens model on focal-normalized coordinates."""

    k1: float
    k2: float
    cx: float
    cy: float
    f: float

    def __post_init__(self):
        if not self.f > 0:
            raise DomainError(f"distortion focal length must be positive, got {self.f}")


def undistort(d: DistortionParams, p: PixelPoint) -> PixelPoint:
    """Radial correction: with x=(u-cx)/f, y=(v-cy)/f and r^2 = x^2+y^2,

        corrected = (cx, cy) + f * (x, y) * (1 + k1*r^2 + k2*r^4)

    Identity when k1 = k2 = 0.
    """
    if d.k1 == 0.0 and d.k2 == 0.0:
        return p
    x = (p.u - d.cx) / d.f
    y = (p.v - d.cy) / d.f
    r2 = x * x + y * y
    gain = 1.0 + d.k1 * r2 + d.k2 * r2 * r2
    return PixelPoint(d.cx + d.f * x * gain, d.cy + d.f * y * gain)


def distort(d: DistortionParams, p: PixelPoint) -> PixelPoint:
    """Numerical inverse of :func:`undistort` (Newton on the radial profile)."""
    if d.k1 == 0.0 and d.k2 == 0.0:
        return p
    x = (p.u - d.cx) / d.f
    y = (p.v - d.cy) / d.f
    r_u = math.hypot(x, y)
    if r_u == 0.0:
        return p
    # Solve r * (1 + k1 r^2 + k2 r^4) = r_u for the distorted radius r.
    r = r_u
    for _ in range(50):
        r2 = r * r
        fval = r * (1.0 + d.k1 * r2 + d.k2 * r2 * r2) - r_u
        fprime = 1.0 + 3.0 * d.k1 * r2 + 5.0 * d.k2 * r2 * r2
        step = fval / fprime
        r -= step
        if abs(step) < 1e-15 * (1.0 + abs(r)):
            break
    ratio = r / r_u
    return PixelPoint(d.cx + d.f * x * ratio, d.cy + d.f * y * ratio)


@dataclass
class PlanarMap:
    """Estimated pixel->plane homography with its conditioning metadata.

    ``H`` is the denormalized matrix (raw pixels to raw meters), scaled to
    unit Frobenius norm with H[2,2] >= 0.  ``t_local``/``t_world`` are the
    conditioning similarities used during estimation and ``condition_estimate``
    is the ratio of the largest to the second-smallest singular value of the
    conditioned design matrix (a proxy for how weakly the training geometry
    constrains the map).  Treat instances as immutable.
    """

    H: np.ndarray
    t_local: Similarity2D
    t_world: Similarity2D
    condition_estimate: float
    distortion: DistortionParams | None = None

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float)
        if H.shape != (3, 3) or not np.all(np.isfinite(H)):
            raise DomainError("H must be a finite 3x3 matrix")
        self.H = _normalize_scale(H)
        if abs(np.linalg.det(self.H)) < 1e-12:
            raise DegenerateGeometryError(
                "homography matrix is numerically singular", self.condition_estimate
            )

    @staticmethod
    def from_matrix(H: np.ndarray, distortion: DistortionParams | None = None) -> "PlanarMap":
        """Wrap an explicitly specified matrix (identity conditioning, condition 1)."""
        return PlanarMap(
            H=np.asarray(H, dtype=float),
            t_local=Similarity2D.identity(),
            t_world=Similarity2D.identity(),
            condition_estimate=1.0,
            distortion=distortion,
        )


def _normalize_scale(H: np.ndarray) -> np.ndarray:
    """Fix the homogeneous scale: unit Frobenius norm, deterministic sign.

    Idempotent: an already-normalized matrix passes through bit-identically,
    so reloading a serialized map does not perturb it.
    """
    norm = float(np.linalg.norm(H))
    if norm == 0.0:
        raise DegenerateGeometryError("zero homography matrix")
    if abs(norm - 1.0) > 1e-12:
        H = H / norm
    anchor = H[2, 2]
    if abs(anchor) < 1e-12:
        flat = H.ravel()
        anchor = flat[int(np.argmax(np.abs(flat)))]
    if anchor < 0:
        H = -H
    return H


def hartley_normalization(points: Sequence[tuple[float, float]]) -> Similarity2D:
    """Similarity taking ``points`` to centroid (0,0) and RMS radius sqrt(2).

    This is the standard conditioning step that keeps the DLT design matrix
    numerically well behaved.
    """
    if len(points) < 2:
        raise DomainError(f"need at least 2 points to normalize, got {len(points)}")
    pts = np.asarray(points, dtype=float)
    centroid = pts.mean(axis=0)
    rms = float(np.sqrt(np.mean(np.sum((pts - centroid) ** 2, axis=1))))
    if rms == 0.0:
        raise DegenerateGeometryError("all points are identical; no similarity normalizes them")
    s = math.sqrt(2.0) / rms
    return Similarity2D(s, -s * centroid[0], -s * centroid[1])


def estimate_homography(
    corr: Sequence[Correspondence], distortion: DistortionParams | None = None
) -> PlanarMap:
    """Direct linear transform over conditioned correspondences.

    Builds the 2Nx9 homogeneous system, takes the right singular direction of
    the smallest singular value, denormalizes and rescales.  When a lens model
    is supplied the pixel side is undistorted before estimation, and the model
    is carried on the returned map so that apply() stays consistent.
    """
    if len(corr) < 4:
        raise DomainError(f"homography estimation needs at least 4 correspondences, got {len(corr)}")

    pixels = [c.pixel if distortion is None else undistort(distortion, c.pixel) for c in corr]
    px = [(p.u, p.v) for p in pixels]
    wd = [(c.world.east_m, c.world.north_m) for c in corr]

    t_local = hartley_normalization(px)
    t_world = hartley_normalization(wd)

    rows = []
    for (u, v), (e, n) in zip(px, wd):
        x, y = t_local.transform(u, v)
        xp, yp = t_world.transform(e, n)
        rows.append([0.0, 0.0, 0.0, -x, -y, -1.0, yp * x, yp * y, yp])
        rows.append([x, y, 1.0, 0.0, 0.0, 0.0, -xp * x, -xp * y, -xp])
    A = np.asarray(rows)

    # full_matrices so the null direction exists even for the minimal 8x9 case
    _, svals, vh = np.linalg.svd(A, full_matrices=True)
    svals = np.concatenate([svals, np.zeros(9 - len(svals))])
    condition = float(svals[0] / svals[7]) if svals[7] > 0 else float("inf")
    if svals[7] <= _RANK_TOL * svals[0]:
        raise DegenerateGeometryError(
            "degenerate correspondence geometry (collinear or coincident points)", condition
        )

    H_hat = vh[-1].reshape(3, 3)
    H = t_world.inverse().as_matrix() @ H_hat @ t_local.as_matrix()
    return PlanarMap(
        H=H,
        t_local=t_local,
        t_world=t_world,
        condition_estimate=condition,
        distortion=distortion,
    )


def apply(pmap: PlanarMap, p: PixelPoint) -> LocalPoint:
    """Map a pixel to plane meters; raises PointAtInfinityError on the horizon."""
    if pmap.distortion is not None:
        p = undistort(pmap.distortion, p)
    h = pmap.H
    w = h[2, 0] * p.u + h[2, 1] * p.v + h[2, 2]
    if abs(w) < HORIZON_EPS:
        raise PointAtInfinityError(
            f"pixel ({p.u}, {p.v}) lies on the horizon image of the sea plane"
        )
    e = (h[0, 0] * p.u + h[0, 1] * p.v + h[0, 2]) / w
    n = (h[1, 0] * p.u + h[1, 1] * p.v + h[1, 2]) / w
    return LocalPoint(e, n)


def inverse_apply(pmap: PlanarMap, w: LocalPoint) -> PixelPoint:
    """Plane meters back to the pixel that observes them (inverse of apply)."""
    hinv = np.linalg.inv(pmap.H)
    z = hinv[2, 0] * w.east_m + hinv[2, 1] * w.north_m + hinv[2, 2]
    if abs(z) < HORIZON_EPS:
        raise PointAtInfinityError(
            f"plane point ({w.east_m}, {w.north_m}) maps to infinity in the image"
        )
    u = (hinv[0, 0] * w.east_m + hinv[0, 1] * w.north_m + hinv[0, 2]) / z
    v = (hinv[1, 0] * w.east_m + hinv[1, 1] * w.north_m + hinv[1, 2]) / z
    ideal = PixelPoint(u, v)
    if pmap.distortion is not None:
        return distort(pmap.distortion, ideal)
    return ideal


@dataclass(frozen=True)
class AffineLayer:
    """One 3x3 linear stage acting on homogeneous pixel/plane coordinates."""

    matrix: np.ndarray


@dataclass(frozen=True)
class UndistortLayer:
    """Optional nonlinear pre-stage: lens correction on the raw pixel."""

    params: DistortionParams


@dataclass(frozen=True)
class HomogeneousDivideLayer:
    """Final projective stage: divide by the homogeneous coordinate."""


Layer = AffineLayer | UndistortLayer | HomogeneousDivideLayer


@dataclass(frozen=True)
class LayerStack:
    """The map unrolled into sequential stages, like a tiny fixed-weight network.

    Evaluating the stack is numerically equivalent to apply() on the map it
    was built from.
    """

    layers: tuple[Layer, ...]

    def evaluate(self, p: PixelPoint) -> LocalPoint:
        vec = np.array([p.u, p.v, 1.0])
        for layer in self.layers:
            if isinstance(layer, UndistortLayer):
                q = undistort(layer.params, PixelPoint(vec[0] / vec[2], vec[1] / vec[2]))
                vec = np.array([q.u, q.v, 1.0])
            elif isinstance(layer, AffineLayer):
                vec = layer.matrix @ vec
            else:
                if abs(vec[2]) < HORIZON_EPS:
                    raise PointAtInfinityError("layer stack input lies on the horizon")
                vec = vec / vec[2]
        return LocalPoint(float(vec[0]), float(vec[1]))


def as_linear_layers(pmap: PlanarMap) -> LayerStack:
    """Unroll the map into [lens correction?] -> T_local -> H_hat -> T_world^-1 -> divide."""
    t_local_m = pmap.t_local.as_matrix()
    t_world_inv_m = pmap.t_world.inverse().as_matrix()
    h_hat = pmap.t_world.as_matrix() @ pmap.H @ pmap.t_local.inverse().as_matrix()
    layers: list[Layer] = []
    if pmap.distortion is not None:
        layers.append(UndistortLayer(pmap.distortion))
    layers.extend(
        [
            AffineLayer(t_local_m),
            AffineLayer(h_hat),
            AffineLayer(t_world_inv_m),
            HomogeneousDivideLayer(),
        ]
    )
    return LayerStack(tuple(layers))
