"""Seeded episode execution and batch orchestration for the CLI.

One episode = one seeded environment plus one seeded policy, logged as a
fixed-header CSV of per-step metrics. Batches run episodes with seed =
base + index, optionally across worker processes; per-episode outputs are
self-contained, so the merged results are byte-identical regardless of the
worker count.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from trackgym import metrics as metrics_mod
from trackgym import policies
from trackgym.config import RunConfig, resolve_base_seed
from trackgym.environment import SearchTrackEnv

STEP_CSV_HEADER = (
    "step,time,gospa_distance,gospa_loc,gospa_missed,gospa_false,"
    "cov_norm_sum,t2t,reward,reward_cov,reward_ssv,n_tracks,n_detections"
)


def _fmt(value: float) -> str:
    """Shortest round-trip decimal form; stable across runs and platforms."""
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return repr(float(value))


def _json_safe(value: float) -> float | None:
    """NaN becomes null so the summary stays strict JSON."""
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


@dataclass
class EpisodeResult:
    episode: int
    seed: int
    policy: str
    csv_lines: list[str]
    metrics: metrics_mod.EpisodeMetrics
    total_reward: float
    error: str | None = None
    track_log: list[str] = field(default_factory=list)
    truth_log: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        em = self.metrics
        return {
            "episode": self.episode,
            "seed": self.seed,
            "policy": self.policy,
            "steps": len(em),
            "mean_t2t": _json_safe(em.mean_t2t()),
            "mean_cov_norm": _json_safe(em.mean_cov_norm()),
            "mean_cov_norm_sum": _json_safe(em.mean_cov_norm_sum()),
            "mean_gospa": _json_safe(em.mean_gospa()),
            "total_reward": _json_safe(self.total_reward),
            "error": self.error,
        }


def run_episode(
    config: RunConfig, policy_kind: str, seed: int, log_states: bool = False
) -> EpisodeResult:
    """Run one seeded episode to completion and collect its per-step metrics."""
    env = SearchTrackEnv(config)
    policy = policies.make_policy(policy_kind, seed)
    observation = env.reset(seed)

    em = metrics_mod.EpisodeMetrics()
    csv_lines = [STEP_CSV_HEADER]
    track_log = ["step,track_id," + ",".join(f"m{i}" for i in range(6)) + ","
                 + ",".join(f"p{i}{j}" for i in range(6) for j in range(i, 6))]
    truth_log = ["step,target_id,x,y,z,vx,vy,vz"]
    total_reward = 0.0

    step = 0
    while True:
        action = policies.next_action(policy, observation, env.n_actions)
        outcome = env.step(action)
        observation = outcome.observation
        info = outcome.info

        gospa_result = metrics_mod.gospa(
            info["truth_positions"],
            info["track_positions"],
            c=config.metrics.gospa_cutoff_m,
            p=config.metrics.gospa_order,
            alpha=config.metrics.gospa_alpha,
        )
        cov_sum = info["cov_norm_sum"]
        ratio = metrics_mod.track_to_truth_ratio(
            info["n_tracks"], len(info["truth_positions"])
        )
        em.append(gospa_result, cov_sum, info["n_tracks"], ratio)
        total_reward += outcome.reward

        csv_lines.append(
            ",".join(
                [
                    str(step),
                    _fmt(env.time),
                    _fmt(gospa_result.distance),
                    _fmt(gospa_result.localisation),
                    _fmt(gospa_result.missed),
                    _fmt(gospa_result.false_alarm),
                    _fmt(cov_sum),
                    _fmt(ratio),
                    _fmt(outcome.reward),
                    _fmt(info["reward_cov"]),
                    _fmt(info["reward_ssv"]),
                    str(info["n_tracks"]),
                    str(info["n_detections"]),
                ]
            )
        )
        if log_states:
            for track in env.track_list.tracks:
                est = track.estimate
                upper = [
                    est.covariance[i, j] for i in range(6) for j in range(i, 6)
                ]
                track_log.append(
                    f"{step},{track.id},"
                    + ",".join(_fmt(v) for v in est.mean)
                    + ","
                    + ",".join(_fmt(v) for v in upper)
                )
            for path in env.paths:
                state = path.current
                truth_log.append(
                    f"{step},{path.target_id},"
                    + ",".join(_fmt(v) for v in state.state_vector)
                )

        step += 1
        if outcome.terminated or outcome.truncated:
            break

    return EpisodeResult(
        episode=0,
        seed=seed,
        policy=policy_kind,
        csv_lines=csv_lines,
        metrics=em,
        total_reward=total_reward,
        track_log=track_log if log_states else [],
        truth_log=truth_log if log_states else [],
    )


def _episode_task(args) -> EpisodeResult:
    config, policy_kind, episode_index, seed, log_states = args
    try:
        result = run_episode(config, policy_kind, seed, log_states)
        result.episode = episode_index
        return result
    except Exception as exc:  # noqa: BLE001 - batch keeps going, episode marked failed
        return EpisodeResult(
            episode=episode_index,
            seed=seed,
            policy=policy_kind,
            csv_lines=[STEP_CSV_HEADER],
            metrics=metrics_mod.EpisodeMetrics(),
            total_reward=math.nan,
            error=f"{type(exc).__name__}: {exc}",
        )


@dataclass
class BatchSummary:
    policy: str
    episodes: list[dict]

    @property
    def n_failed(self) -> int:
        return sum(1 for e in self.episodes if e["error"])

    def mean_t2t(self) -> float:
        values = [
            e["mean_t2t"]
            for e in self.episodes
            if not e["error"] and e["mean_t2t"] is not None
        ]
        return float(np.mean(values)) if values else math.nan

    def cov_norm_stats(self) -> tuple[float, float]:
        """Mean and std over per-episode mean covariance norms (track-step weighted)."""
        values = [
            e["mean_cov_norm"]
            for e in self.episodes
            if not e["error"] and e["mean_cov_norm"] is not None
        ]
        if not values:
            return math.nan, math.nan
        return float(np.mean(values)), float(np.std(values))


def run_batch(config: RunConfig, out_dir: str | None = None) -> BatchSummary:
    """Run the configured batch, writing per-step CSVs and a JSONL summary.

    Returns the in-memory summary; files land under ``out_dir`` (defaults to
    the configured run.out_dir).
    """
    run = config.run
    out = out_dir if out_dir is not None else run.out_dir
    os.makedirs(out, exist_ok=True)
    base_seed = resolve_base_seed(config)

    tasks = [
        (config, run.policy, i, base_seed + i, run.log_states)
        for i in range(run.episodes)
    ]
    if run.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=run.workers) as pool:
            results = list(pool.map(_episode_task, tasks))
    else:
        results = [_episode_task(t) for t in tasks]
    results.sort(key=lambda r: r.episode)

    summaries = []
    with open(os.path.join(out, "summary.jsonl"), "w") as handle:
        for result in results:
            path = os.path.join(out, f"episode_{result.episode:04d}.csv")
            with open(path, "w") as csv_handle:
                csv_handle.write("\n".join(result.csv_lines) + "\n")
            if run.log_states and not result.error:
                with open(
                    os.path.join(out, f"tracks_{result.episode:04d}.csv"), "w"
                ) as t_handle:
                    t_handle.write("\n".join(result.track_log) + "\n")
                with open(
                    os.path.join(out, f"truth_{result.episode:04d}.csv"), "w"
                ) as g_handle:
                    g_handle.write("\n".join(result.truth_log) + "\n")
            summary = result.summary()
            summaries.append(summary)
            handle.write(json.dumps(summary) + "\n")

    return BatchSummary(policy=run.policy, episodes=summaries)


def format_summary_table(batches: list[BatchSummary]) -> str:
    """Summary table: one row per policy, T2T and covariance-norm columns."""
    lines = [
        f"{'Policy':<12} {'Mean T2T':>10} {'Cov norm (mean +/- std)':>28}",
    ]
    for batch in batches:
        mean, std = batch.cov_norm_stats()
        lines.append(
            f"{batch.policy:<12} {batch.mean_t2t():>10.3f} "
            f"{mean:>15.2f} +/- {std:<10.2f}"
        )
    return "\n".join(lines)
