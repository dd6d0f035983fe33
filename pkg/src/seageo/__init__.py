"""Monocular maritime geopositioning: detect-track in the image, map to the
sea plane through an estimated homography, convert to GPS, smooth with a UKF."""

from .errors import (
    CoverageError,
    DegenerateGeometryError,
    DomainError,
    EmptyOverlapError,
    FilterDegeneracyError,
    GenerationError,
    ParseError,
    PointAtInfinityError,
    RangeWarning,
    SeageoError,
    TimeOrderError,
)
from .geodesy import EARTH_RADIUS_M, GeoPoint, GeoReference, LocalPoint, geo_to_local, local_to_geo
from .planarmap import (
    Correspondence,
    DistortionParams,
    LayerStack,
    PixelPoint,
    PlanarMap,
    Similarity2D,
    apply,
    as_linear_layers,
    estimate_homography,
    hartley_normalization,
    inverse_apply,
    undistort,
)
from .tracker import (
    AssociationConfig,
    BBox,
    Detection,
    TrackerParams,
    TrackState,
    TrackStep,
    associate,
    association_score,
    bottom_center,
    gating_probability,
    kf_predict,
    kf_update,
    track_sequence,
)
from .worldfilter import UkfParams, WorldState, sigma_points, smooth_trajectory, ukf_predict, ukf_update

__all__ = [name for name in dir() if not name.startswith("_")]
