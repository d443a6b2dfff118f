"""Coordinate geometry, constant-velocity dynamics and the spherical measurement model.

Conventions used throughout the package:

* 6-D state layout is ``[x, y, z, vx, vy, vz]`` (meters, meters/second).
* Azimuth is measured in the horizontal plane from the +x boresight axis,
  positive toward +y; elevation from the horizontal plane, positive toward +z.
  At the zenith/nadir singularity the azimuth is defined as 0.
* Measurement vectors are ordered ``(azimuth, elevation, range)``.
* All angles are radians, all times seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(angle):
    """Wrap an angle (scalar or array) to the interval (-pi, pi]."""
    return np.pi - (np.pi - np.asarray(angle)) % TWO_PI


@dataclass
class KinematicState:
    """True target state: Cartesian position/velocity plus a timestamp."""

    position: np.ndarray
    velocity: np.ndarray
    time: float

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        if self.position.shape != (3,) or self.velocity.shape != (3,):
            raise ValueError("position and velocity must be 3-vectors")
        if not (np.isfinite(self.position).all() and np.isfinite(self.velocity).all()):
            raise ValueError("kinematic state components must be finite")

    @property
    def state_vector(self) -> np.ndarray:
        """Stacked [position, velocity] 6-vector."""
        return np.concatenate([self.position, self.velocity])


class SphericalCoords(NamedTuple):
    """Range (m), azimuth and elevation (rad) of a point relative to the origin."""

    range: float
    azimuth: float
    elevation: float


@dataclass(frozen=True)
class NoiseParams:
    """Measurement noise sigmas and process-noise intensity.

    sigma_azimuth / sigma_elevation are radians, sigma_range meters;
    process_intensity is the white-noise-acceleration intensity q in
    m^2/s^3 applied per Cartesian axis.
    """

    sigma_azimuth: float
    sigma_elevation: float
    sigma_range: float
    process_intensity: float

    def __post_init__(self):
        for name in ("sigma_azimuth", "sigma_elevation", "sigma_range", "process_intensity"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")

    def measurement_covariance(self) -> np.ndarray:
        """Diagonal measurement covariance in (azimuth, elevation, range) order."""
        return np.diag(
            [self.sigma_azimuth**2, self.sigma_elevation**2, self.sigma_range**2]
        )

    def measurement_variances(self) -> np.ndarray:
        return np.array(
            [self.sigma_azimuth**2, self.sigma_elevation**2, self.sigma_range**2]
        )


def cart_to_spherical(point) -> SphericalCoords:
    """Convert a Cartesian 3-vector to range/azimuth/elevation.

    Raises ValueError at the origin, where the angles are undefined.
    """
    p = np.asarray(point, dtype=float)
    rng = float(np.linalg.norm(p))
    if rng == 0.0:
        raise ValueError("spherical angles are undefined for the zero vector")
    horiz = math.hypot(p[0], p[1])
    azimuth = 0.0 if horiz == 0.0 else math.atan2(p[1], p[0])
    elevation = math.atan2(p[2], horiz)
    return SphericalCoords(rng, azimuth, elevation)


def spherical_to_cart(coords) -> np.ndarray:
    """Inverse of :func:`cart_to_spherical`; accepts any (range, az, el) triple."""
    rng, azimuth, elevation = coords
    if rng < 0.0:
        raise ValueError("range must be non-negative")
    ce = math.cos(elevation)
    return np.array(
        [
            rng * ce * math.cos(azimuth),
            rng * ce * math.sin(azimuth),
            rng * math.sin(elevation),
        ]
    )


def cv_transition(dt: float, q: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Constant-velocity transition matrix F and process noise Q for a step of dt.

    Per axis, F is the shear [[1, dt], [0, 1]] and Q the continuous
    white-noise-acceleration discretisation q*[[dt^3/3, dt^2/2], [dt^2/2, dt]].
    """
    if dt <= 0.0:
        raise ValueError("dt must be strictly positive")
    eye3 = np.eye(3)
    f = np.eye(6)
    f[:3, 3:] = dt * eye3

    q_mat = np.zeros((6, 6))
    q_mat[:3, :3] = (q * dt**3 / 3.0) * eye3
    q_mat[:3, 3:] = (q * dt**2 / 2.0) * eye3
    q_mat[3:, :3] = (q * dt**2 / 2.0) * eye3
    q_mat[3:, 3:] = (q * dt) * eye3
    return f, q_mat


def measure_position(position, sensor_position) -> np.ndarray:
    """Noise-free (azimuth, elevation, range) of a point seen from the sensor."""
    rel = np.asarray(position, dtype=float) - np.asarray(sensor_position, dtype=float)
    coords = cart_to_spherical(rel)
    return np.array([coords.azimuth, coords.elevation, coords.range])


def measure(state: KinematicState, sensor_position) -> np.ndarray:
    """Noise-free measurement of a kinematic state; see :func:`measure_position`."""
    return measure_position(state.position, sensor_position)
