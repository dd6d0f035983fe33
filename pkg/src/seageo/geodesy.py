"""GPS <-> local metric sea-plane conversion around a reference point.

The sea surface near the camera is treated as a local tangent plane with
x = meters east and y = meters north of a reference GPS position.  The
conversion is the equirectangular approximation on a sphere:

    north_m = radians(lat - lat0) * R
    east_m  = radians(lon - lon0) * R * cos(radians(lat0))

The cos factor is evaluated at the reference latitude, which keeps the map
affine in (lat, lon) and exactly invertible in closed form.  At scene scales
of a few kilometres the model error is sub-centimetre; beyond ~50 km the
planar assumption degrades and a RangeWarning is emitted.  Poles and the
antimeridian are out of the operating envelope.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import DomainError, RangeWarning

EARTH_RADIUS_M = 6_371_000.0

# Beyond this distance the planar approximation is no longer trustworthy.
PLANAR_RANGE_M = 50_000.0


@dataclass(frozen=True, slots=True)
class GeoPoint:
    """Global position in degrees: latitude [-90, 90], longitude [-180, 180]."""

    lat_deg: float
    lon_deg: float

    def __post_init__(self):
        if not (math.isfinite(self.lat_deg) and math.isfinite(self.lon_deg)):
            raise DomainError(f"non-finite GPS coordinates ({self.lat_deg}, {self.lon_deg})")
        if not -90.0 <= self.lat_deg <= 90.0:
            raise DomainError(f"latitude {self.lat_deg} outside [-90, 90]")
        if not -180.0 <= self.lon_deg <= 180.0:
            raise DomainError(f"longitude {self.lon_deg} outside [-180, 180]")


@dataclass(frozen=True, slots=True)
class LocalPoint:
    """Planar position in meters east/north of the active reference."""

    east_m: float
    north_m: float

    def __post_init__(self):
        if not (math.isfinite(self.east_m) and math.isfinite(self.north_m)):
            raise DomainError(f"non-finite local coordinates ({self.east_m}, {self.north_m})")


@dataclass(frozen=True)
class GeoReference:
    """Anchor of the local plane: a GPS origin plus the sphere radius."""

    origin: GeoPoint
    earth_radius_m: float = EARTH_RADIUS_M

    def __post_init__(self):
        if not self.earth_radius_m > 0:
            raise DomainError(f"earth radius must be positive, got {self.earth_radius_m}")
        if abs(self.origin.lat_deg) >= 89.0:
            raise DomainError(
                f"reference latitude {self.origin.lat_deg} too close to a pole (|lat| must be < 89)"
            )


def geo_to_local(ref: GeoReference, p: GeoPoint) -> LocalPoint:
    """Project a GPS point onto the plane anchored at ``ref``.

    Emits a RangeWarning (and still returns the result) when the point is
    farther than ~50 km from the origin.
    """
    east = math.radians(p.lon_deg - ref.origin.lon_deg) * ref.earth_radius_m * math.cos(
        math.radians(ref.origin.lat_deg)
    )
    north = math.radians(p.lat_deg - ref.origin.lat_deg) * ref.earth_radius_m
    if east * east + north * north > PLANAR_RANGE_M * PLANAR_RANGE_M:
        warnings.warn(
            f"point is {math.hypot(east, north) / 1000:.1f} km from the reference; "
            "planar approximation degrades beyond 50 km",
            RangeWarning,
            stacklevel=2,
        )
    return LocalPoint(east, north)


def local_to_geo(ref: GeoReference, p: LocalPoint) -> GeoPoint:
    """Exact algebraic inverse of :func:`geo_to_local` under the same reference."""
    lat = ref.origin.lat_deg + math.degrees(p.north_m / ref.earth_radius_m)
    lon = ref.origin.lon_deg + math.degrees(
        p.east_m / (ref.earth_radius_m * math.cos(math.radians(ref.origin.lat_deg)))
    )
    return GeoPoint(lat, lon)
