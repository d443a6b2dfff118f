"""Baseline sensor-pointing policies.

All three are open loop: the observation is accepted for interface parity but
never read. Random samples a fresh cell every step, Static keeps one cell
sampled at episode start, Coverage rasters through every cell azimuth-first
and wraps around forever.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

POLICY_KINDS = ("random", "static", "coverage")


@dataclass
class PolicyState:
    kind: str
    rng: np.random.Generator
    fixed_action: tuple[int, int] | None = None
    step_counter: int = 0


def make_policy(kind: str, seed: int) -> PolicyState:
    if kind not in POLICY_KINDS:
        raise ValueError(f"unknown policy kind {kind!r}; expected one of {POLICY_KINDS}")
    return PolicyState(kind=kind, rng=np.random.default_rng(seed))


def next_action(policy: PolicyState, observation, n_actions: int) -> tuple[int, int]:
    """Next cell index pair under the policy; increments its step counter."""
    del observation  # baselines are open loop
    if policy.kind == "random":
        action = (
            int(policy.rng.integers(n_actions)),
            int(policy.rng.integers(n_actions)),
        )
    elif policy.kind == "static":
        if policy.fixed_action is None:
            policy.fixed_action = (
                int(policy.rng.integers(n_actions)),
                int(policy.rng.integers(n_actions)),
            )
        action = policy.fixed_action
    else:  # coverage raster, azimuth sweeps fastest
        k = policy.step_counter
        action = (k % n_actions, (k // n_actions) % n_actions)
    policy.step_counter += 1
    return action
