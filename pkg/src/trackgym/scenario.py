"""Ground-truth target simulation and the steerable radar sensor.

Targets are born at episode start and live to the end, moving under a
constant-velocity model with sampled process noise. The sensor is fixed at
the origin and produces noisy (azimuth, elevation, range) detections only for
targets inside the commanded square field-of-view window, plus optional
Poisson clutter uniform over the window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from trackgym.errors import ConfigError
from trackgym.models import (
    KinematicState,
    NoiseParams,
    cv_transition,
    measure_position,
    wrap_angle,
)

DWELL_LIMIT = math.pi / 3.0


@dataclass
class Region:
    """Spawn region: range band and symmetric angular bounds (radians)."""

    min_range: float = 1000.0
    max_range: float = 10000.0
    max_azimuth: float = math.radians(50.0)
    max_elevation: float = math.radians(50.0)

    def __post_init__(self):
        if not (0.0 < self.min_range < self.max_range):
            raise ConfigError("region range band must satisfy 0 < min < max")
        if not (0.0 < self.max_azimuth <= math.pi):
            raise ConfigError("region azimuth bound must be in (0, pi]")
        if not (0.0 < self.max_elevation <= math.pi / 2.0):
            raise ConfigError("region elevation bound must be in (0, pi/2]")


@dataclass
class GroundTruthPath:
    """One target's true trajectory, sampled at the tracker step interval."""

    target_id: int
    states: list[KinematicState]
    birth_time: float
    death_time: float

    @property
    def current(self) -> KinematicState:
        return self.states[-1]

    def alive_at(self, time: float) -> bool:
        return self.birth_time <= time <= self.death_time


@dataclass
class Detection:
    """Sensor output: (azimuth, elevation, range) plus truth-side bookkeeping.

    ``is_clutter``/``source_id`` exist for scoring and tests only; the tracker
    never reads them.
    """

    measurement: np.ndarray
    time: float
    is_clutter: bool = False
    source_id: int | None = None


@dataclass
class RadarSensor:
    """Fixed-platform radar with an agent-steerable dwell centre."""

    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dwell_centre: np.ndarray = field(default_factory=lambda: np.zeros(2))
    fov_halfwidth: float = math.radians(9.0) / 2.0
    detection_probability: float = 0.9
    noise: NoiseParams = field(
        default_factory=lambda: NoiseParams(
            sigma_azimuth=math.radians(0.2),
            sigma_elevation=math.radians(0.2),
            sigma_range=5.0,
            process_intensity=0.1,
        )
    )
    clutter_rate: float = 0.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.dwell_centre = np.asarray(self.dwell_centre, dtype=float)
        if not 0.0 <= self.detection_probability <= 1.0:
            raise ConfigError("detection probability must be in [0, 1]")
        if self.clutter_rate < 0.0:
            raise ConfigError("clutter rate must be non-negative")


def spawn_targets(
    count: int,
    region: Region,
    speed_range: tuple[float, float],
    rng: np.random.Generator,
    birth_time: float = 0.0,
    death_time: float = math.inf,
) -> list[GroundTruthPath]:
    """Sample targets uniform in (azimuth, elevation, range) over the region.

    Speeds are uniform in ``speed_range`` with directions uniform on the
    sphere. Draw order is fixed per target, so a seeded generator reproduces
    the same scenario exactly.
    """
    if count < 0:
        raise ConfigError("target count must be non-negative")
    lo, hi = speed_range
    if not (0.0 <= lo <= hi):
        raise ConfigError("speed range must satisfy 0 <= min <= max")

    paths = []
    for target_id in range(count):
        azimuth = rng.uniform(-region.max_azimuth, region.max_azimuth)
        elevation = rng.uniform(-region.max_elevation, region.max_elevation)
        rng_m = rng.uniform(region.min_range, region.max_range)
        ce = math.cos(elevation)
        position = rng_m * np.array(
            [ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)]
        )
        speed = rng.uniform(lo, hi)
        direction = rng.standard_normal(3)
        norm = np.linalg.norm(direction)
        while norm == 0.0:  # pragma: no cover - measure-zero draw
            direction = rng.standard_normal(3)
            norm = np.linalg.norm(direction)
        velocity = speed * direction / norm
        paths.append(
            GroundTruthPath(
                target_id=target_id,
                states=[KinematicState(position, velocity, birth_time)],
                birth_time=birth_time,
                death_time=death_time,
            )
        )
    return paths


def advance_truth(
    paths: list[GroundTruthPath],
    to_time: float,
    process_intensity: float,
    rng: np.random.Generator,
) -> list[GroundTruthPath]:
    """Propagate every live path one step with sampled process noise."""
    chol_cache: dict[float, np.ndarray] = {}
    for path in paths:
        state = path.current
        dt = to_time - state.time
        if dt <= 0.0:
            raise ValueError("advance_truth must move forward in time")
        x = state.state_vector
        new = x.copy()
        new[:3] += dt * x[3:]
        if process_intensity > 0.0:
            if dt not in chol_cache:
                _, q_mat = cv_transition(dt, process_intensity)
                chol_cache[dt] = np.linalg.cholesky(q_mat)
            new += chol_cache[dt] @ rng.standard_normal(6)
        path.states.append(KinematicState(new[:3], new[3:], to_time))
    return paths


def point_dwell(sensor: RadarSensor, command) -> tuple[RadarSensor, bool]:
    """Steer the dwell centre instantly; out-of-range commands are clamped.

    Returns the sensor and a flag marking whether clamping occurred.
    """
    command = np.asarray(command, dtype=float)
    clamped = bool(np.any(np.abs(command) > DWELL_LIMIT + 1e-12))
    sensor.dwell_centre = np.clip(command, -DWELL_LIMIT, DWELL_LIMIT)
    return sensor, clamped


def in_fov(sensor: RadarSensor, azimuth: float, elevation: float) -> bool:
    """Square-window test against the current dwell centre."""
    d_az = abs(float(wrap_angle(azimuth - sensor.dwell_centre[0])))
    d_el = abs(elevation - sensor.dwell_centre[1])
    return d_az <= sensor.fov_halfwidth and d_el <= sensor.fov_halfwidth


def sense(
    sensor: RadarSensor,
    paths: list[GroundTruthPath],
    time: float,
    rng: np.random.Generator,
    clutter_region: Region | None = None,
) -> list[Detection]:
    """Generate this scan's detections.

    Each live in-window target is detected with the sensor's detection
    probability and independent Gaussian noise per component; clutter counts
    are Poisson with measurements uniform over the window (range uniform over
    the clutter region). Output order is shuffled so the tracker cannot rely
    on source ordering.
    """
    detections: list[Detection] = []
    for path in paths:
        if not path.alive_at(time):
            continue
        truth = measure_position(path.current.position, sensor.position)
        if not in_fov(sensor, truth[0], truth[1]):
            continue
        if rng.random() >= sensor.detection_probability:
            continue
        noise = sensor.noise
        z = truth + rng.standard_normal(3) * np.array(
            [noise.sigma_azimuth, noise.sigma_elevation, noise.sigma_range]
        )
        detections.append(
            Detection(measurement=z, time=time, source_id=path.target_id)
        )

    if sensor.clutter_rate > 0.0:
        region = clutter_region if clutter_region is not None else Region()
        for _ in range(rng.poisson(sensor.clutter_rate)):
            z = np.array(
                [
                    sensor.dwell_centre[0]
                    + rng.uniform(-sensor.fov_halfwidth, sensor.fov_halfwidth),
                    sensor.dwell_centre[1]
                    + rng.uniform(-sensor.fov_halfwidth, sensor.fov_halfwidth),
                    rng.uniform(region.min_range, region.max_range),
                ]
            )
            detections.append(Detection(measurement=z, time=time, is_clutter=True))

    rng.shuffle(detections)
    return detections
