"""Policy-gradient smoke training: PPO against four parallel environments.

Checks the adapter survives an off-the-shelf trainer for 10k steps and that
the collected episode rewards are finite and non-constant. Takes a minute or
two on CPU.
"""

import math

import numpy as np
import pytest

stable_baselines3 = pytest.importorskip("stable_baselines3")

from stable_baselines3 import PPO
from stable_baselines3.common.monitor import Monitor
from stable_baselines3.common.vec_env import DummyVecEnv

from trackgym.config import RunConfig
from trackgym_env import SearchAndTrackEnv


def make_env(rank):
    def _make():
        cfg = RunConfig()
        cfg.environment.horizon = 500
        env = SearchAndTrackEnv(config=cfg)
        env.reset(seed=1000 + rank)
        return Monitor(env)

    return _make


def test_ppo_smoke_training():
    venv = DummyVecEnv([make_env(rank) for rank in range(4)])
    model = PPO(
        "MultiInputPolicy",
        venv,
        n_steps=256,
        batch_size=512,
        n_epochs=2,
        policy_kwargs=dict(net_arch=[32]),
        seed=0,
        device="cpu",
        verbose=0,
    )
    model.learn(total_timesteps=10_000)

    returns = [info["r"] for info in model.ep_info_buffer]
    assert len(returns) >= 4, "expected several completed episodes"
    assert all(math.isfinite(r) for r in returns)
    assert np.std(returns) > 0.0, "episode rewards should not be constant"
    venv.close()
