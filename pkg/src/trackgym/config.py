"""Configuration dataclasses, TOML loading and strict validation.

The file format is TOML with one table per subsystem ([scenario], [tracker],
[environment], [metrics], [run]). Keys map 1:1 to dataclass fields; unknown
keys are rejected with a nearest-match suggestion, and every value is range-
checked at load time. Angular quantities are configured in degrees (``_deg``
suffix) and converted where the runtime objects are built.
"""

from __future__ import annotations

import dataclasses
import difflib
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from trackgym import association
from trackgym.errors import ConfigError
from trackgym.estimation import UTParams
from trackgym.models import NoiseParams
from trackgym.scenario import RadarSensor, Region
from trackgym.tracker import TrackerParams

SEED_ENV_VAR = "TRACKGYM_SEED"


@dataclass
class ScenarioConfig:
    n_targets: int = 5
    min_range_m: float = 1000.0
    max_range_m: float = 10000.0
    max_angle_deg: float = 50.0
    min_speed_mps: float = 10.0
    max_speed_mps: float = 60.0
    sigma_azimuth_deg: float = 0.2
    sigma_elevation_deg: float = 0.2
    sigma_range_m: float = 5.0
    detection_probability: float = 0.9
    clutter_rate: float = 0.003
    process_intensity_truth: float = 0.1


@dataclass
class TrackerConfig:
    step_s: float = 0.005
    process_intensity: float = 1.0
    gate_threshold: float = association.DEFAULT_GATE
    missed_distance: float | None = None
    deleter_threshold: float = 5000.0
    deleter_full_trace: bool = False
    initial_velocity_sigma: float = 14.0
    ut_alpha: float = 0.5
    ut_beta: float = 2.0
    ut_kappa: float | None = None


@dataclass
class EnvironmentConfig:
    total_fov_deg: float = 120.0
    instantaneous_fov_deg: float = 9.0
    scan_map_size: int = 48
    horizon: int = 1000
    n_track: int = 10
    ssv_tau_s: float | None = None  # None -> 25% of the episode duration
    ssv_kind: str = "exp"  # exp | linear
    reward_sign_as_written: bool = False
    terminate_cov_norm: float | None = None
    terminate_gospa: float | None = None


@dataclass
class MetricsConfig:
    gospa_cutoff_m: float = 500.0
    gospa_order: float = 1.0
    gospa_alpha: float = 2.0


@dataclass
class RunSettings:
    policy: str = "coverage"
    episodes: int = 100
    base_seed: int = 0
    out_dir: str = "runs/latest"
    workers: int = 1
    log_states: bool = False
    plots: bool = False


@dataclass
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    environment: EnvironmentConfig = field(default_factory=EnvironmentConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    run: RunSettings = field(default_factory=RunSettings)


_SECTIONS = {
    "scenario": ScenarioConfig,
    "tracker": TrackerConfig,
    "environment": EnvironmentConfig,
    "metrics": MetricsConfig,
    "run": RunSettings,
}

# Value constraints: dotted key -> (predicate, requirement description).
_RULES: dict[str, tuple[Any, str]] = {
    "scenario.n_targets": (lambda v: v >= 0, "must be >= 0"),
    "scenario.min_range_m": (lambda v: v > 0, "must be > 0"),
    "scenario.max_range_m": (lambda v: v > 0, "must be > 0"),
    "scenario.max_angle_deg": (lambda v: 0 < v <= 90, "must be in (0, 90]"),
    "scenario.min_speed_mps": (lambda v: v >= 0, "must be >= 0"),
    "scenario.max_speed_mps": (lambda v: v >= 0, "must be >= 0"),
    "scenario.sigma_azimuth_deg": (lambda v: v > 0, "must be > 0"),
    "scenario.sigma_elevation_deg": (lambda v: v > 0, "must be > 0"),
    "scenario.sigma_range_m": (lambda v: v > 0, "must be > 0"),
    "scenario.detection_probability": (lambda v: 0 <= v <= 1, "must be in [0, 1]"),
    "scenario.clutter_rate": (lambda v: v >= 0, "must be >= 0"),
    "scenario.process_intensity_truth": (lambda v: v >= 0, "must be >= 0"),
    "tracker.step_s": (lambda v: v > 0, "must be > 0"),
    "tracker.process_intensity": (lambda v: v > 0, "must be > 0"),
    "tracker.gate_threshold": (lambda v: v > 0, "must be > 0"),
    "tracker.missed_distance": (lambda v: v is None or v > 0, "must be > 0"),
    "tracker.deleter_threshold": (lambda v: v > 0, "must be > 0"),
    "tracker.initial_velocity_sigma": (lambda v: v > 0, "must be > 0"),
    "tracker.ut_alpha": (lambda v: 0 < v <= 1, "must be in (0, 1]"),
    "environment.total_fov_deg": (lambda v: 0 < v <= 360, "must be in (0, 360]"),
    "environment.instantaneous_fov_deg": (lambda v: v > 0, "must be > 0"),
    "environment.scan_map_size": (lambda v: v >= 2, "must be >= 2"),
    "environment.horizon": (lambda v: v > 0, "must be > 0"),
    "environment.n_track": (lambda v: v > 0, "must be > 0"),
    "environment.ssv_tau_s": (lambda v: v is None or v > 0, "must be > 0"),
    "environment.ssv_kind": (lambda v: v in ("exp", "linear"), "must be 'exp' or 'linear'"),
    "environment.terminate_cov_norm": (lambda v: v is None or v > 0, "must be > 0"),
    "environment.terminate_gospa": (lambda v: v is None or v > 0, "must be > 0"),
    "metrics.gospa_cutoff_m": (lambda v: v > 0, "must be > 0"),
    "metrics.gospa_order": (lambda v: v >= 1, "must be >= 1"),
    "metrics.gospa_alpha": (lambda v: v == 2, "must be 2 (decomposition requires it)"),
    "run.policy": (
        lambda v: v in ("random", "static", "coverage"),
        "must be one of random, static, coverage",
    ),
    "run.episodes": (lambda v: v >= 0, "must be >= 0"),
    "run.workers": (lambda v: v >= 1, "must be >= 1"),
}


def _coerce(name: str, value: Any, target_type: Any) -> Any:
    """Coerce a parsed TOML value onto the field's annotated type."""
    optional_float = target_type in ("float | None", "int | None")
    if value is None and optional_float:
        return None
    if target_type == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{name}: expected a boolean, got {value!r}")
        return value
    if target_type == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return value
    if target_type in ("float", "float | None"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        return float(value)
    if target_type == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{name}: expected a string, got {value!r}")
        return value
    return value


def _check_rules(config: RunConfig) -> None:
    for dotted, (predicate, requirement) in _RULES.items():
        section, key = dotted.split(".")
        value = getattr(getattr(config, section), key)
        if not predicate(value):
            raise ConfigError(f"{dotted} {requirement} (got {value!r})")
    sc = config.scenario
    if sc.min_range_m >= sc.max_range_m:
        raise ConfigError("scenario.min_range_m must be below scenario.max_range_m")
    if sc.min_speed_mps > sc.max_speed_mps:
        raise ConfigError("scenario.min_speed_mps must not exceed scenario.max_speed_mps")
    env = config.environment
    if env.instantaneous_fov_deg > env.total_fov_deg:
        raise ConfigError(
            "environment.instantaneous_fov_deg must not exceed total_fov_deg"
        )


def _unknown_key_error(kind: str, name: str, candidates) -> ConfigError:
    hint = difflib.get_close_matches(name, list(candidates), n=1)
    suffix = f"; did you mean '{hint[0]}'?" if hint else ""
    return ConfigError(f"unknown {kind} '{name}'{suffix}")


def _apply_section(target: Any, section: str, values: dict[str, Any]) -> None:
    fields = {f.name: f for f in dataclasses.fields(target)}
    for key, value in values.items():
        if key not in fields:
            raise _unknown_key_error(f"key in [{section}]", key, fields)
        annotation = fields[key].type
        setattr(target, key, _coerce(f"{section}.{key}", value, annotation))


def from_mapping(data: dict[str, Any]) -> RunConfig:
    """Build a validated RunConfig from a parsed TOML mapping."""
    config = RunConfig()
    for section, values in data.items():
        if section not in _SECTIONS:
            raise _unknown_key_error("section", section, _SECTIONS)
        if not isinstance(values, dict):
            raise ConfigError(f"[{section}] must be a table of keys")
        _apply_section(getattr(config, section), section, values)
    _check_rules(config)
    return config


def load_config(path: str | None = None) -> RunConfig:
    """Load a config file (or pure defaults when path is None)."""
    if path is None:
        config = RunConfig()
        _check_rules(config)
        return config
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        # tomllib messages carry line/column context.
        raise ConfigError(f"{path}: {exc}") from exc
    return from_mapping(data)


def apply_overrides(config: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply ``section.key=value`` override strings (CLI flags beat the file)."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form section.key=value")
        dotted, raw = item.split("=", 1)
        dotted = dotted.strip()
        if dotted.count(".") != 1:
            raise ConfigError(f"override key '{dotted}' must be section.key")
        section, key = dotted.split(".")
        if section not in _SECTIONS:
            raise _unknown_key_error("section", section, _SECTIONS)
        target = getattr(config, section)
        fields = {f.name: f for f in dataclasses.fields(target)}
        if key not in fields:
            raise _unknown_key_error(f"key in [{section}]", key, fields)
        setattr(target, key, _parse_override_value(dotted, raw, fields[key].type))
    _check_rules(config)
    return config


def _parse_override_value(name: str, raw: str, annotation: str) -> Any:
    raw = raw.strip()
    if annotation == "bool":
        lowered = raw.lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if raw.lower() == "none" and "None" in annotation:
        return None
    if annotation == "int":
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{name}: expected an integer, got {raw!r}") from exc
    if annotation in ("float", "float | None", "int | None"):
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{name}: expected a number, got {raw!r}") from exc
    return raw


def validate_config(path: str) -> list[str]:
    """Schema-check a config file; returns diagnostics (empty means valid)."""
    try:
        load_config(path)
    except ConfigError as exc:
        return [str(exc)]
    return []


def resolve_base_seed(config: RunConfig) -> int:
    """Base seed, overridable through the TRACKGYM_SEED environment variable."""
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return config.run.base_seed
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}") from exc


# Builders for the runtime objects the engine consumes.


def truth_noise(config: RunConfig) -> NoiseParams:
    sc = config.scenario
    return NoiseParams(
        sigma_azimuth=math.radians(sc.sigma_azimuth_deg),
        sigma_elevation=math.radians(sc.sigma_elevation_deg),
        sigma_range=sc.sigma_range_m,
        process_intensity=max(sc.process_intensity_truth, 1e-12),
    )


def tracker_noise(config: RunConfig) -> NoiseParams:
    sc = config.scenario
    return NoiseParams(
        sigma_azimuth=math.radians(sc.sigma_azimuth_deg),
        sigma_elevation=math.radians(sc.sigma_elevation_deg),
        sigma_range=sc.sigma_range_m,
        process_intensity=config.tracker.process_intensity,
    )


def region(config: RunConfig) -> Region:
    sc = config.scenario
    return Region(
        min_range=sc.min_range_m,
        max_range=sc.max_range_m,
        max_azimuth=math.radians(sc.max_angle_deg),
        max_elevation=math.radians(sc.max_angle_deg),
    )


def radar_sensor(config: RunConfig) -> RadarSensor:
    sc = config.scenario
    return RadarSensor(
        position=np.zeros(3),
        dwell_centre=np.zeros(2),
        fov_halfwidth=math.radians(config.environment.instantaneous_fov_deg) / 2.0,
        detection_probability=sc.detection_probability,
        noise=truth_noise(config),
        clutter_rate=sc.clutter_rate,
    )


def ut_params(config: RunConfig) -> UTParams:
    tr = config.tracker
    return UTParams(alpha=tr.ut_alpha, beta=tr.ut_beta, kappa=tr.ut_kappa)


def tracker_params(config: RunConfig) -> TrackerParams:
    tr = config.tracker
    return TrackerParams(
        noise=tracker_noise(config),
        gate_threshold=tr.gate_threshold,
        missed_distance=tr.missed_distance,
        deleter_threshold=tr.deleter_threshold,
        deleter_full_trace=tr.deleter_full_trace,
        initial_velocity_sigma=tr.initial_velocity_sigma,
        ut=ut_params(config),
        sensor_position=np.zeros(3),
    )
