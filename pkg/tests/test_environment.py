import math

import numpy as np
import pytest

from trackgym.config import RunConfig
from trackgym.environment import (
    ScanValueMap,
    SearchTrackEnv,
    action_space_size,
    action_to_pointing,
    build_observation,
    compute_reward,
    decode_flat_action,
    encode_flat_action,
)
from trackgym.errors import ConfigError, LifecycleError
from trackgym.estimation import GaussianEstimate
from trackgym.tracker import Track, TrackList

DEG = math.radians(1.0)


def small_config(horizon=50, **env_overrides):
    cfg = RunConfig()
    cfg.environment.horizon = horizon
    for key, value in env_overrides.items():
        setattr(cfg.environment, key, value)
    return cfg


class TestActionGrid:
    def test_documented_sizes(self):
        assert action_space_size(120 * DEG, 9 * DEG) == 19
        assert action_space_size(1.0, 1.0) == 2
        assert action_space_size(2.0, 1.0) == 3

    def test_invalid_inputs(self):
        with pytest.raises(ConfigError):
            action_space_size(0.0, 1.0)
        with pytest.raises(ConfigError):
            action_space_size(1.0, 2.0)

    def test_pointing_extremes_exact(self):
        assert tuple(action_to_pointing((0, 0), 19)) == (-math.pi / 3, -math.pi / 3)
        assert tuple(action_to_pointing((9, 9), 19)) == (0.0, 0.0)
        assert tuple(action_to_pointing((18, 18), 19)) == (math.pi / 3, math.pi / 3)

    def test_pointing_bounds_and_monotone(self):
        previous = -np.inf
        for i in range(19):
            az = action_to_pointing((i, 0), 19)[0]
            assert -math.pi / 3 - 1e-12 <= az <= math.pi / 3 + 1e-12
            assert az > previous
            previous = az

    def test_pointing_rejects_bad_input(self):
        with pytest.raises(ConfigError):
            action_to_pointing((0, 0), 1)
        with pytest.raises(ValueError):
            action_to_pointing((19, 0), 19)

    def test_flat_encoding_round_trip(self):
        for i in range(19):
            for j in range(19):
                flat = encode_flat_action((i, j), 19)
                assert flat == i * 19 + j
                assert decode_flat_action(flat, 19) == (i, j)
        with pytest.raises(ValueError):
            decode_flat_action(361, 19)


class TestScanValueMap:
    def test_fresh_stamp(self):
        m = ScanValueMap(tau=1.0)
        m.stamp(np.array([0.0, 0.0]), math.radians(4.5), 1.0)
        values = m.render(1.0)
        assert values.max() == 1.0
        stamped = np.isfinite(m.last_stamp)
        assert values[stamped].min() == 1.0
        assert values[~stamped].max() == 0.0

    def test_stamped_cells_match_window(self):
        m = ScanValueMap(tau=1.0)
        hw = math.radians(4.5)
        m.stamp(np.array([0.0, 0.0]), hw, 1.0)
        az_in = np.abs(m.cell_centres) <= hw
        expected = np.outer(az_in, az_in)
        np.testing.assert_array_equal(np.isfinite(m.last_stamp), expected)

    def test_exponential_decay_at_tau(self):
        m = ScanValueMap(tau=2.0)
        m.stamp(np.array([0.0, 0.0]), 0.1, 0.0)
        value = m.value_at(np.array([0.0, 0.0]), 2.0)
        assert value == pytest.approx(math.exp(-1.0))

    def test_linear_decay(self):
        m = ScanValueMap(tau=2.0, kind="linear")
        m.stamp(np.array([0.0, 0.0]), 0.1, 0.0)
        assert m.value_at(np.array([0.0, 0.0]), 1.0) == pytest.approx(0.5)
        assert m.value_at(np.array([0.0, 0.0]), 5.0) == 0.0

    def test_restamp_resets(self):
        m = ScanValueMap(tau=1.0)
        m.stamp(np.array([0.2, -0.1]), 0.08, 0.0)
        first = np.isfinite(m.last_stamp).copy()
        m.stamp(np.array([0.2, -0.1]), 0.08, 0.5)
        np.testing.assert_array_equal(np.isfinite(m.last_stamp), first)
        assert m.value_at(np.array([0.2, -0.1]), 0.5) == 1.0

    def test_values_stay_in_unit_interval(self):
        m = ScanValueMap(tau=0.3)
        rng = np.random.default_rng(2)
        t = 0.0
        for _ in range(100):
            t += 0.05
            m.stamp(rng.uniform(-1.0, 1.0, 2), 0.08, t)
            values = m.render(t)
            assert values.min() >= 0.0 and values.max() <= 1.0

    def test_never_scanned_is_zero(self):
        m = ScanValueMap(tau=1.0)
        assert m.value_at(np.array([0.5, 0.5]), 10.0) == 0.0


class TestBuildObservation:
    def test_empty_track_list(self):
        obs, truncated = build_observation(TrackList(), ScanValueMap(tau=1.0), 10, 0.0)
        assert obs.track_list.shape == (10, 7)
        assert obs.track_list.dtype == np.float32
        assert not obs.track_list.any()
        assert obs.scan_history.shape == (1, 48, 48)
        assert truncated == 0

    def test_single_track_row(self):
        est = GaussianEstimate([1000.0, 0, 0, 0, 0, 0], np.eye(6), 0.0)
        tl = TrackList(tracks=[Track(id=0, history=[est])], next_id=1)
        obs, _ = build_observation(tl, ScanValueMap(tau=1.0), 10, 0.0)
        np.testing.assert_allclose(
            obs.track_list[0],
            [1000.0, 0.0, 0.0, 0.0, 0.0, 0.0, math.sqrt(6)],
            rtol=1e-6,
        )
        assert not obs.track_list[1:].any()

    def test_truncation_reported(self):
        tracks = [
            Track(id=i, history=[GaussianEstimate([1000.0 + i, 0, 0, 0, 0, 0], np.eye(6), 0.0)])
            for i in range(13)
        ]
        tl = TrackList(tracks=tracks, next_id=13)
        obs, truncated = build_observation(tl, ScanValueMap(tau=1.0), 10, 0.0)
        assert truncated == 3
        assert obs.track_list[9, 0] != 0.0


class TestComputeReward:
    def test_all_quiet(self):
        reward, cov, ssv = compute_reward(
            {}, TrackList(), set(), set(), ScanValueMap(tau=1.0), np.zeros(2), 0.0
        )
        assert (reward, cov, ssv) == (0.0, 0.0, 0.0)

    def test_fresh_stamp_penalty(self):
        m = ScanValueMap(tau=1.0)
        m.stamp(np.zeros(2), 0.08, 0.0)
        reward, cov, ssv = compute_reward(
            {}, TrackList(), set(), set(), m, np.zeros(2), 0.0
        )
        assert reward == -1.0
        assert cov == 0.0
        assert ssv == 1.0

    def test_uncertainty_reduction(self):
        # previous norm 100, current 60, fresh (unscanned) cell
        cov_now = np.zeros((6, 6))
        cov_now[0, 0] = 60.0
        tl = TrackList(
            tracks=[Track(id=4, history=[GaussianEstimate(np.zeros(6), cov_now, 1.0)])],
            next_id=5,
        )
        reward, cov, ssv = compute_reward(
            {4: 100.0}, tl, {4}, set(), ScanValueMap(tau=1.0), np.zeros(2), 1.0
        )
        assert reward == pytest.approx(40.0)
        assert cov == pytest.approx(40.0)
        assert ssv == 0.0

    def test_sign_as_written_flips(self):
        cov_now = np.zeros((6, 6))
        cov_now[0, 0] = 60.0
        tl = TrackList(
            tracks=[Track(id=4, history=[GaussianEstimate(np.zeros(6), cov_now, 1.0)])],
            next_id=5,
        )
        reward, cov, _ = compute_reward(
            {4: 100.0}, tl, {4}, set(), ScanValueMap(tau=1.0), np.zeros(2), 1.0,
            sign_as_written=True,
        )
        assert cov == pytest.approx(-40.0)

    def test_tracks_missing_either_side_excluded(self):
        tl = TrackList(
            tracks=[Track(id=9, history=[GaussianEstimate(np.zeros(6), np.eye(6), 1.0)])],
            next_id=10,
        )
        # id 9 is new (no prev norm); id 3 was deleted (not live now)
        reward, cov, _ = compute_reward(
            {3: 50.0}, tl, {9}, {3}, ScanValueMap(tau=1.0), np.zeros(2), 1.0
        )
        assert cov == 0.0


class TestEnvLifecycle:
    def test_step_before_reset(self):
        env = SearchTrackEnv(small_config())
        with pytest.raises(LifecycleError):
            env.step((0, 0))

    def test_reset_and_shapes(self):
        env = SearchTrackEnv(small_config())
        obs = env.reset(0)
        assert obs.track_list.shape == (10, 7)
        assert obs.scan_history.shape == (1, 48, 48)
        assert not obs.scan_history.any()

    def test_truncates_at_horizon(self):
        env = SearchTrackEnv(small_config(horizon=10))
        env.reset(0)
        for k in range(10):
            out = env.step((9, 9))
        assert out.truncated
        assert not out.terminated
        with pytest.raises(LifecycleError):
            env.step((9, 9))

    def test_flat_and_pair_actions_agree(self):
        env1 = SearchTrackEnv(small_config())
        env2 = SearchTrackEnv(small_config())
        env1.reset(3)
        env2.reset(3)
        out1 = env1.step((2, 5))
        out2 = env2.step(2 * 19 + 5)
        assert out1.reward == out2.reward
        np.testing.assert_array_equal(
            out1.observation.scan_history, out2.observation.scan_history
        )

    def test_determinism(self):
        rewards = []
        for _ in range(2):
            env = SearchTrackEnv(small_config())
            env.reset(7)
            rng = np.random.default_rng(1)
            total = []
            for _ in range(50):
                a = (int(rng.integers(19)), int(rng.integers(19)))
                total.append(env.step(a).reward)
            rewards.append(total)
        assert rewards[0] == rewards[1]

    def test_reset_clears_state(self):
        env = SearchTrackEnv(small_config())
        env.reset(0)
        for _ in range(30):
            env.step((9, 9))
        obs = env.reset(0)
        assert env.step_count == 0
        assert env.track_list.next_id == 0
        assert not obs.scan_history.any()

    def test_different_seeds_differ(self):
        env = SearchTrackEnv(small_config())
        env.reset(0)
        first = [p.current.position.copy() for p in env.paths]
        env.reset(1)
        second = [p.current.position.copy() for p in env.paths]
        assert any(
            not np.array_equal(a, b) for a, b in zip(first, second)
        )

    def test_info_contract(self):
        env = SearchTrackEnv(small_config())
        env.reset(0)
        out = env.step((0, 0))
        for key in ("reward_cov", "reward_ssv", "n_detections", "n_tracks", "clamped"):
            assert key in out.info
        assert out.reward == out.info["reward_cov"] - out.info["reward_ssv"]
        assert out.info["truth_positions"].shape == (5, 3)
        assert not out.info["clamped"]
        assert math.isfinite(out.reward)

    def test_zero_padding_invariant(self):
        env = SearchTrackEnv(small_config())
        obs = env.reset(11)
        for k in range(50):
            out = env.step((k % 19, (k // 19) % 19))
            rows = out.observation.track_list
            n_live = min(out.info["n_tracks"], 10)
            assert not rows[n_live:].any()

    def test_reward_decomposition_exact_over_episode(self):
        env = SearchTrackEnv(small_config(horizon=200))
        env.reset(5)
        rng = np.random.default_rng(9)
        for _ in range(200):
            out = env.step((int(rng.integers(19)), int(rng.integers(19))))
            assert out.reward == out.info["reward_cov"] - out.info["reward_ssv"]

    def test_coverage_conservation(self):
        from trackgym import policies

        env = SearchTrackEnv(small_config(horizon=400))
        obs = env.reset(2)
        policy = policies.make_policy("coverage", 0)
        for _ in range(19 * 19):
            a = policies.next_action(policy, obs, env.n_actions)
            obs = env.step(a).observation
        assert env.scan_map.stamped_fraction() == 1.0

    def test_termination_on_cov_norm(self):
        cfg = small_config(horizon=400, terminate_cov_norm=1e-9)
        env = SearchTrackEnv(cfg)
        env.reset(0)
        policy_actions = [(9, 9)] * 400
        terminated = False
        for a in policy_actions:
            out = env.step(a)
            if out.terminated:
                terminated = True
                assert not out.truncated
                break
        assert terminated
