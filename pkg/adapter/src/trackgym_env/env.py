"""Gymnasium-facing wrapper around the search-and-track engine.

The engine owns all simulation state; this layer only translates the flat
discrete action into the engine's cell-pair form, passes the engine's
observation arrays through (single in-place clip into the advertised bounds),
and forwards the info dict verbatim.
"""

from __future__ import annotations

import math
from typing import Any

import gymnasium as gym
import numpy as np
from gymnasium import spaces

from trackgym.config import RunConfig, load_config
from trackgym.environment import SearchTrackEnv, decode_flat_action

VELOCITY_BOUND = 1000.0
COV_NORM_BOUND = 1.0e6


def _track_list_space(config: RunConfig) -> spaces.Box:
    """Per-row bounds: range, azimuth, elevation, velocity xyz, norm of P."""
    range_bound = 4.0 * config.scenario.max_range_m
    low = np.array(
        [0.0, -math.pi, -math.pi / 2, -VELOCITY_BOUND, -VELOCITY_BOUND, -VELOCITY_BOUND, 0.0],
        dtype=np.float32,
    )
    high = np.array(
        [range_bound, math.pi, math.pi / 2, VELOCITY_BOUND, VELOCITY_BOUND,
         VELOCITY_BOUND, COV_NORM_BOUND],
        dtype=np.float32,
    )
    n_track = config.environment.n_track
    return spaces.Box(
        low=np.tile(low, (n_track, 1)),
        high=np.tile(high, (n_track, 1)),
        shape=(n_track, 7),
        dtype=np.float32,
    )


class SearchAndTrackEnv(gym.Env):
    """Discrete dwell-pointing environment over the tracking engine.

    The action is the flat cell index i * N_a + j; the observation is a dict
    of the zero-padded track-list matrix and the scan-history image.
    """

    metadata = {"render_modes": []}

    def __init__(self, config_path: str | None = None, config: RunConfig | None = None):
        if config is not None and config_path is not None:
            raise ValueError("pass either config_path or config, not both")
        if config is None:
            config = load_config(config_path)
        self.engine = SearchTrackEnv(config)
        n = self.engine.n_actions
        self.action_space = spaces.Discrete(n * n)
        size = config.environment.scan_map_size
        self.observation_space = spaces.Dict(
            {
                "track_list": _track_list_space(config),
                "scan_history": spaces.Box(0.0, 1.0, (1, size, size), np.float32),
            }
        )
        self._track_space = self.observation_space["track_list"]

    def _wrap_observation(self, observation) -> dict[str, np.ndarray]:
        rows = observation.track_list
        # in-place clip into the advertised bounds; rows stay the engine's arrays
        np.clip(rows, self._track_space.low, self._track_space.high, out=rows)
        return {"track_list": rows, "scan_history": observation.scan_history}

    def reset(self, *, seed: int | None = None, options: dict[str, Any] | None = None):
        super().reset(seed=seed)
        engine_seed = (
            int(seed)
            if seed is not None
            else int(self.np_random.integers(0, 2**31 - 1))
        )
        observation = self.engine.reset(engine_seed)
        return self._wrap_observation(observation), {}

    def step(self, action):
        flat = int(action)
        if not 0 <= flat < self.action_space.n:
            raise ValueError(
                f"action {flat} outside [0, {self.action_space.n})"
            )
        pair = decode_flat_action(flat, self.engine.n_actions)
        outcome = self.engine.step(pair)
        return (
            self._wrap_observation(outcome.observation),
            float(outcome.reward),
            outcome.terminated,
            outcome.truncated,
            outcome.info,
        )
