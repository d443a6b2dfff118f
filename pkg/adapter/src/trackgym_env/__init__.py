"""Gymnasium registration for the search-and-track environment."""

import gymnasium as gym

from trackgym_env.env import SearchAndTrackEnv

ENV_ID = "trackgym/SearchAndTrack-v0"

__all__ = ["ENV_ID", "SearchAndTrackEnv"]

if ENV_ID not in gym.registry:
    gym.register(id=ENV_ID, entry_point="trackgym_env.env:SearchAndTrackEnv")
