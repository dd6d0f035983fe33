"""Pipeline configuration file: INI sections [tracker], [ukf], [calibration], [synth].

Every key has the module default; unknown sections or keys are rejected so a
typo cannot silently fall back to a default.  The [synth] section holds the
scenario name plus flat overrides, validated by the scenario machinery.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace

from .errors import ParseError
from .geodesy import EARTH_RADIUS_M
from .synth import OVERRIDE_KEYS
from .tracker import AssociationConfig, TrackerParams
from .worldfilter import UkfParams

_TRACKER_FLOAT = {"alpha", "sigma", "p_thr", "r_xy_px", "r_w_px", "q_px", "q_w_px", "init_v_std_px", "width_floor_px"}
_TRACKER_INT = {"max_coast_frames"}
_UKF_FLOAT = {"spread", "prior_knowledge", "secondary_scaling", "q_intensity", "r_pos", "init_v_std", "r_floor"}
_CALIBRATION_FLOAT = {"earth_radius_m"}


@dataclass(frozen=True)
class PipelineConfig:
    assoc: AssociationConfig
    tracker_params: TrackerParams
    ukf: UkfParams
    earth_radius_m: float
    synth_overrides: dict[str, str]


def default_config() -> PipelineConfig:
    return PipelineConfig(
        assoc=AssociationConfig(),
        tracker_params=TrackerParams(),
        ukf=UkfParams(),
        earth_radius_m=EARTH_RADIUS_M,
        synth_overrides={},
    )


def _typed(path: str, section: str, key: str, raw: str, as_int: bool):
    try:
        return int(raw) if as_int else float(raw)
    except ValueError:
        kind = "an integer" if as_int else "a number"
        raise ParseError(path, None, f"[{section}] {key} must be {kind}, got {raw!r}") from None


def load_config(path: str) -> PipelineConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            cp.read_file(fh, source=str(path))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ParseError(str(path), line, f"malformed config: {exc.message}") from None

    known_sections = {"tracker", "ukf", "calibration", "synth"}
    unknown = set(cp.sections()) - known_sections
    if unknown:
        raise ParseError(str(path), None, f"unknown sections {sorted(unknown)}")

    cfg = default_config()
    assoc_kwargs: dict = {}
    params_kwargs: dict = {}
    if cp.has_section("tracker"):
        for key, raw in cp.items("tracker"):
            if key in _TRACKER_INT:
                value = _typed(path, "tracker", key, raw, as_int=True)
            elif key in _TRACKER_FLOAT:
                value = _typed(path, "tracker", key, raw, as_int=False)
            else:
                raise ParseError(str(path), None, f"unknown key {key!r} in [tracker]")
            target = assoc_kwargs if key in {"alpha", "sigma", "p_thr", "max_coast_frames"} else params_kwargs
            target[key] = value

    ukf_kwargs: dict = {}
    if cp.has_section("ukf"):
        for key, raw in cp.items("ukf"):
            if key not in _UKF_FLOAT:
                raise ParseError(str(path), None, f"unknown key {key!r} in [ukf]")
            ukf_kwargs[key] = _typed(path, "ukf", key, raw, as_int=False)

    earth_radius = EARTH_RADIUS_M
    if cp.has_section("calibration"):
        for key, raw in cp.items("calibration"):
            if key not in _CALIBRATION_FLOAT:
                raise ParseError(str(path), None, f"unknown key {key!r} in [calibration]")
            earth_radius = _typed(path, "calibration", key, raw, as_int=False)

    synth_overrides: dict[str, str] = {}
    if cp.has_section("synth"):
        for key, raw in cp.items("synth"):
            if key not in OVERRIDE_KEYS:
                raise ParseError(str(path), None, f"unknown key {key!r} in [synth]")
            synth_overrides[key] = raw

    return PipelineConfig(
        assoc=replace(cfg.assoc, **assoc_kwargs),
        tracker_params=replace(cfg.tracker_params, **params_kwargs),
        ukf=replace(cfg.ukf, **ukf_kwargs),
        earth_radius_m=earth_radius,
        synth_overrides=synth_overrides,
    )
