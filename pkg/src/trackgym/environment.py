"""The search-and-track episode environment.

Couples the ground-truth scenario, the steerable sensor and the tracker into
a step/reset loop: a discrete action picks one of N_a x N_a overlapping dwell
cells, the sensor scans it, the tracker digests the resulting detections, and
the agent is rewarded for shrinking track uncertainty while being penalised
for re-scanning recently visited cells.

Step order: decode action and point the dwell; read the scan-value penalty
from the pre-stamp map; stamp the map; advance truth one interval; sense;
run the tracker step; compute the covariance reward term; assemble the
observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from trackgym import config as config_mod
from trackgym import scenario as scenario_mod
from trackgym import tracker as tracker_mod
from trackgym.config import RunConfig
from trackgym.errors import ConfigError, LifecycleError
from trackgym.models import measure_position

SQRT2_OVER_2 = math.sqrt(2.0) / 2.0


def action_space_size(total_fov: float, instantaneous_fov: float) -> int:
    """Number of dwell centres per axis.

    Cells are spaced so adjacent beams overlap by a sqrt(2)/2 factor,
    guaranteeing full coverage of the search region when every cell is
    visited.
    """
    if total_fov <= 0.0 or instantaneous_fov <= 0.0:
        raise ConfigError("field-of-view angles must be strictly positive")
    if instantaneous_fov > total_fov:
        raise ConfigError("instantaneous field of view cannot exceed the total")
    return int(math.ceil(total_fov / (SQRT2_OVER_2 * instantaneous_fov)))


def action_to_pointing(action: tuple[int, int], n_actions: int) -> np.ndarray:
    """Map a cell index pair to (azimuth, elevation) dwell angles.

    Component k of the result is (pi/3) * (2*a_k/(N_a - 1) - 1), spanning
    [-pi/3, pi/3] inclusive with index 0 at the lower bound.
    """
    if n_actions < 2:
        raise ConfigError("the action grid needs at least 2 cells per axis")
    i, j = action
    if not (0 <= i < n_actions and 0 <= j < n_actions):
        raise ValueError(f"action {action} outside [0, {n_actions})^2")
    a = np.array([i, j], dtype=float)
    return (math.pi / 3.0) * (2.0 * a / (n_actions - 1) - 1.0)


def encode_flat_action(action: tuple[int, int], n_actions: int) -> int:
    """Canonical flat encoding i*N_a + j."""
    i, j = action
    return i * n_actions + j


def decode_flat_action(flat: int, n_actions: int) -> tuple[int, int]:
    """Inverse of :func:`encode_flat_action`."""
    if not 0 <= flat < n_actions * n_actions:
        raise ValueError(f"flat action {flat} outside [0, {n_actions * n_actions})")
    return flat // n_actions, flat % n_actions


class ScanValueMap:
    """Rasterised scan-recency grid over the angular search region.

    Every cell whose centre falls inside the beam window gets stamped with
    the scan time; a cell's value decays from 1 toward 0 as it goes unscanned.
    The first grid axis is azimuth, the second elevation, with cell centres
    spanning [-extent, extent] inclusive on both.
    """

    def __init__(
        self,
        size: int = 48,
        extent: float = math.pi / 3.0,
        tau: float = 1.25,
        kind: str = "exp",
    ):
        if kind not in ("exp", "linear"):
            raise ConfigError("scan-value decay kind must be 'exp' or 'linear'")
        if tau <= 0.0:
            raise ConfigError("scan-value decay time constant must be positive")
        self.size = size
        self.extent = extent
        self.tau = tau
        self.kind = kind
        self.cell_centres = np.linspace(-extent, extent, size)
        self.last_stamp = np.full((size, size), -np.inf)

    def reset(self) -> None:
        self.last_stamp.fill(-np.inf)

    def decay(self, age):
        """Scan value of a cell scanned ``age`` seconds ago."""
        age = np.asarray(age, dtype=float)
        if self.kind == "exp":
            return np.exp(-age / self.tau)
        return np.maximum(0.0, 1.0 - age / self.tau)

    def stamp(self, pointing: np.ndarray, halfwidth: float, time: float) -> None:
        """Mark every cell whose centre lies inside the beam window."""
        az_hit = np.abs(self.cell_centres - pointing[0]) <= halfwidth
        el_hit = np.abs(self.cell_centres - pointing[1]) <= halfwidth
        self.last_stamp[np.ix_(az_hit, el_hit)] = time

    def cell_index(self, pointing: np.ndarray) -> tuple[int, int]:
        """Grid cell whose centre is nearest the pointing direction."""
        pitch = 2.0 * self.extent / (self.size - 1)
        idx = np.rint((np.asarray(pointing) + self.extent) / pitch).astype(int)
        idx = np.clip(idx, 0, self.size - 1)
        return int(idx[0]), int(idx[1])

    def value_at(self, pointing: np.ndarray, time: float) -> float:
        """Current scan value of the cell containing ``pointing``."""
        i, j = self.cell_index(pointing)
        stamp = self.last_stamp[i, j]
        if not np.isfinite(stamp):
            return 0.0
        return float(self.decay(time - stamp))

    def render(self, time: float) -> np.ndarray:
        """Full value grid at ``time``: 1 just-scanned, 0 never/long-unscanned."""
        values = np.zeros((self.size, self.size))
        stamped = np.isfinite(self.last_stamp)
        values[stamped] = self.decay(time - self.last_stamp[stamped])
        return values

    def stamped_fraction(self) -> float:
        return float(np.isfinite(self.last_stamp).mean())


def update_scan_map(
    scan_map: ScanValueMap, pointing: np.ndarray, halfwidth: float, time: float
) -> ScanValueMap:
    """Stamp the beam window into the map (values decay implicitly with time)."""
    scan_map.stamp(pointing, halfwidth, time)
    return scan_map


@dataclass
class Observation:
    """Fixed-shape observation: per-track rows plus the scan-history image."""

    track_list: np.ndarray  # (n_track, 7) float32
    scan_history: np.ndarray  # (1, size, size) float32


@dataclass
class StepOutcome:
    observation: Observation
    reward: float
    terminated: bool
    truncated: bool
    info: dict[str, Any]


def build_observation(
    track_list: tracker_mod.TrackList,
    scan_map: ScanValueMap,
    n_track: int,
    time: float,
    sensor_position=None,
) -> tuple[Observation, int]:
    """Assemble the observation; returns it plus the truncated-track count.

    Row i holds (range, azimuth, elevation, vx, vy, vz, covariance Frobenius
    norm) for the i-th lowest-id live track; rows beyond the live count stay
    exactly zero.
    """
    sensor = np.zeros(3) if sensor_position is None else np.asarray(sensor_position)
    rows = np.zeros((n_track, 7), dtype=np.float32)
    ordered = sorted(track_list.tracks, key=lambda t: t.id)
    n_truncated = max(0, len(ordered) - n_track)
    for row, track in enumerate(ordered[:n_track]):
        estimate = track.estimate
        z = measure_position(estimate.position, sensor)
        rows[row, 0] = z[2]
        rows[row, 1] = z[0]
        rows[row, 2] = z[1]
        rows[row, 3:6] = estimate.velocity
        rows[row, 6] = estimate.covariance_norm()
    image = scan_map.render(time).astype(np.float32)[np.newaxis, :, :]
    return Observation(track_list=rows, scan_history=image), n_truncated


def covariance_reward_term(
    prev_norms: dict[int, float],
    track_list: tracker_mod.TrackList,
    assigned_now: set[int],
    assigned_prev: set[int],
    sign_as_written: bool = False,
) -> float:
    """Uncertainty-change reward component.

    Sums, over tracks that were assigned a detection this step or the previous
    one and exist at both, the drop in covariance Frobenius norm.
    ``sign_as_written`` flips to the raw k-minus-(k-1) ordering.
    """
    term = 0.0
    current = {t.id: t for t in track_list.tracks}
    for tid in assigned_now | assigned_prev:
        if tid in prev_norms and tid in current:
            delta = prev_norms[tid] - current[tid].estimate.covariance_norm()
            term += -delta if sign_as_written else delta
    return term


def compute_reward(
    prev_norms: dict[int, float],
    track_list: tracker_mod.TrackList,
    assigned_now: set[int],
    assigned_prev: set[int],
    scan_map: ScanValueMap,
    pointing: np.ndarray,
    time: float,
    sign_as_written: bool = False,
) -> tuple[float, float, float]:
    """Per-step reward and its two logged components.

    ``scan_map`` must be the pre-stamp map: the scan-value penalty is the
    value of the pointed-at cell before this step's scan refreshed it. The
    returned reward is exactly ``cov_term - ssv_term``.
    """
    reward_ssv = scan_map.value_at(pointing, time)
    reward_cov = covariance_reward_term(
        prev_norms, track_list, assigned_now, assigned_prev, sign_as_written
    )
    return reward_cov - reward_ssv, reward_cov, reward_ssv


class SearchTrackEnv:
    """Episode environment wiring scenario, sensor, tracker and scan map."""

    def __init__(self, config: RunConfig | None = None):
        self.config = config if config is not None else RunConfig()
        env_cfg = self.config.environment
        self.total_fov = math.radians(env_cfg.total_fov_deg)
        self.ifov = math.radians(env_cfg.instantaneous_fov_deg)
        self.n_actions = action_space_size(self.total_fov, self.ifov)
        self.step_s = self.config.tracker.step_s
        self.horizon = env_cfg.horizon
        self.n_track = env_cfg.n_track
        tau = env_cfg.ssv_tau_s
        if tau is None:
            tau = 0.25 * self.horizon * self.step_s
        self.scan_map = ScanValueMap(
            size=env_cfg.scan_map_size,
            extent=self.total_fov / 2.0,
            tau=tau,
            kind=env_cfg.ssv_kind,
        )
        self.tracker_params = config_mod.tracker_params(self.config)
        self.region = config_mod.region(self.config)
        self._rng: np.random.Generator | None = None
        self._finished = True

    def reset(self, seed: int) -> Observation:
        """Start a fresh episode deterministically derived from ``seed``."""
        self._rng = np.random.default_rng(seed)
        self.time = 0.0
        self.step_count = 0
        self._finished = False
        self.sensor = config_mod.radar_sensor(self.config)
        sc = self.config.scenario
        self.paths = scenario_mod.spawn_targets(
            sc.n_targets,
            self.region,
            (sc.min_speed_mps, sc.max_speed_mps),
            self._rng,
            birth_time=0.0,
            death_time=self.horizon * self.step_s,
        )
        self.track_list = tracker_mod.TrackList()
        self.scan_map.reset()
        self._prev_norms: dict[int, float] = {}
        self._prev_assigned: set[int] = set()
        observation, _ = build_observation(
            self.track_list, self.scan_map, self.n_track, self.time,
            self.sensor.position,
        )
        return observation

    def step(self, action) -> StepOutcome:
        """Advance one interval under the given cell action (pair or flat int)."""
        if self._rng is None:
            raise LifecycleError("step called before reset")
        if self._finished:
            raise LifecycleError("step called after the episode finished")

        if np.isscalar(action) or isinstance(action, (int, np.integer)):
            pair = decode_flat_action(int(action), self.n_actions)
        else:
            pair = (int(action[0]), int(action[1]))
        pointing = action_to_pointing(pair, self.n_actions)
        _, clamped = scenario_mod.point_dwell(self.sensor, pointing)

        new_time = self.time + self.step_s
        reward_ssv = self.scan_map.value_at(pointing, new_time)  # pre-stamp
        update_scan_map(self.scan_map, pointing, self.sensor.fov_halfwidth, new_time)

        scenario_mod.advance_truth(
            self.paths,
            new_time,
            self.config.scenario.process_intensity_truth,
            self._rng,
        )
        detections = scenario_mod.sense(
            self.sensor, self.paths, new_time, self._rng, self.region
        )
        tracker_mod.mtt_step(self.track_list, detections, new_time, self.tracker_params)

        assigned_now = {
            t.id
            for t in self.track_list.tracks
            if t.last_detection_time is not None
            and abs(t.last_detection_time - new_time) < 1e-12
        }
        reward_cov = covariance_reward_term(
            self._prev_norms,
            self.track_list,
            assigned_now,
            self._prev_assigned,
            self.config.environment.reward_sign_as_written,
        )
        reward = reward_cov - reward_ssv

        observation, n_truncated = build_observation(
            self.track_list, self.scan_map, self.n_track, new_time,
            self.sensor.position,
        )

        self.time = new_time
        self.step_count += 1
        self._prev_norms = {
            t.id: t.estimate.covariance_norm() for t in self.track_list.tracks
        }
        self._prev_assigned = assigned_now

        terminated = self._check_termination()
        truncated = not terminated and self.step_count >= self.horizon
        self._finished = terminated or truncated

        info: dict[str, Any] = {
            "reward_cov": reward_cov,
            "reward_ssv": reward_ssv,
            "n_detections": len(detections),
            "n_tracks": len(self.track_list),
            "clamped": clamped,
            "action": pair,
            "n_truncated_rows": n_truncated,
            "truth_positions": np.array(
                [p.current.position for p in self.paths if p.alive_at(new_time)]
            ).reshape(-1, 3),
            "track_positions": np.array(
                [t.estimate.position for t in self.track_list.tracks]
            ).reshape(-1, 3),
            "cov_norm_sum": float(
                sum(t.estimate.covariance_norm() for t in self.track_list.tracks)
            ),
        }
        return StepOutcome(observation, reward, terminated, truncated, info)

    def _check_termination(self) -> bool:
        env_cfg = self.config.environment
        if env_cfg.terminate_cov_norm is not None:
            total = sum(t.estimate.covariance_norm() for t in self.track_list.tracks)
            if total > env_cfg.terminate_cov_norm:
                return True
        if env_cfg.terminate_gospa is not None:
            from trackgym import metrics as metrics_mod

            truths = [p.current.position for p in self.paths if p.alive_at(self.time)]
            tracks = [t.estimate.position for t in self.track_list.tracks]
            m = self.config.metrics
            result = metrics_mod.gospa(
                truths, tracks, c=m.gospa_cutoff_m, p=m.gospa_order
            )
            if result.distance > env_cfg.terminate_gospa:
                return True
        return False
