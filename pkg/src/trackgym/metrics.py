"""Episode evaluation metrics.

GOSPA with its localisation / missed / false decomposition under the optimal
assignment, the summed covariance Frobenius norm of the live track list, and
the track-to-truth ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist


@dataclass
class GospaResult:
    """GOSPA distance plus its decomposition.

    The component fields are in distance^p units, so
    ``distance**p == localisation + missed + false_alarm`` exactly.
    ``assignment`` lists the (truth index, track index) pairs the optimal
    matching kept below the cutoff.
    """

    distance: float
    localisation: float
    missed: float
    false_alarm: float
    assignment: list[tuple[int, int]]


def gospa(
    truth_positions,
    track_positions,
    c: float = 500.0,
    p: float = 1.0,
    alpha: float = 2.0,
) -> GospaResult:
    """GOSPA between two point sets under the optimal sub-pattern assignment.

    ``c`` is the cutoff distance (also the scale of cardinality errors) and
    ``p`` the order. Only ``alpha=2`` is supported: it is what makes the
    missed/false decomposition valid.
    """
    if c <= 0.0:
        raise ValueError("cutoff c must be strictly positive")
    if p < 1.0:
        raise ValueError("order p must be >= 1")
    if alpha != 2.0:
        raise ValueError("alpha must be 2 for the decomposition to be valid")

    truths = np.asarray(truth_positions, dtype=float).reshape(-1, 3)
    tracks = np.asarray(track_positions, dtype=float).reshape(-1, 3)
    n_truth, n_track = len(truths), len(tracks)
    unassigned_cost = c**p / alpha

    if n_truth == 0 or n_track == 0:
        missed = unassigned_cost * n_truth
        false_alarm = unassigned_cost * n_track
        total = missed + false_alarm
        return GospaResult(total ** (1.0 / p), 0.0, missed, false_alarm, [])

    distances = cdist(truths, tracks)
    costs = np.minimum(distances, c) ** p
    rows, cols = linear_sum_assignment(costs)

    # A pair at the cutoff costs the same as a miss plus a false alarm, so
    # cut it from the matching and decompose it as cardinality error.
    assignment = [
        (int(i), int(j)) for i, j in zip(rows, cols) if distances[i, j] < c
    ]
    localisation = float(sum(distances[i, j] ** p for i, j in assignment))
    n_matched = len(assignment)
    missed = unassigned_cost * (n_truth - n_matched)
    false_alarm = unassigned_cost * (n_track - n_matched)
    total = localisation + missed + false_alarm
    return GospaResult(total ** (1.0 / p), localisation, missed, false_alarm, assignment)


def covariance_norm_sum(track_list) -> float:
    """Sum of covariance Frobenius norms over the live tracks."""
    return float(
        sum(t.estimate.covariance_norm() for t in getattr(track_list, "tracks", track_list))
    )


def track_to_truth_ratio(tracks, n_truths: int) -> float:
    """Live tracks per live truth; NaN (skipped in means) when no truths.

    ``tracks`` may be a TrackList or a plain count.
    """
    n_tracks = len(tracks.tracks) if hasattr(tracks, "tracks") else int(tracks)
    if n_truths <= 0:
        return math.nan
    return n_tracks / n_truths


@dataclass
class EpisodeMetrics:
    """Per-step metric series for one episode, plus derived summaries."""

    gospa_results: list[GospaResult] = field(default_factory=list)
    cov_norm_sums: list[float] = field(default_factory=list)
    track_counts: list[int] = field(default_factory=list)
    t2t: list[float] = field(default_factory=list)

    def append(self, gospa_result: GospaResult, cov_sum: float, n_tracks: int, ratio: float):
        self.gospa_results.append(gospa_result)
        self.cov_norm_sums.append(cov_sum)
        self.track_counts.append(n_tracks)
        self.t2t.append(ratio)

    def __len__(self) -> int:
        return len(self.cov_norm_sums)

    def mean_t2t(self) -> float:
        values = [v for v in self.t2t if not math.isnan(v)]
        return float(np.mean(values)) if values else math.nan

    def mean_gospa(self) -> float:
        if not self.gospa_results:
            return math.nan
        return float(np.mean([g.distance for g in self.gospa_results]))

    def mean_cov_norm_sum(self) -> float:
        if not self.cov_norm_sums:
            return math.nan
        return float(np.mean(self.cov_norm_sums))

    def mean_cov_norm(self) -> float:
        """Mean covariance norm per track-step (NaN when no track ever lived).

        Recomputable from the per-step log as sum(cov_norm_sum) / sum(n_tracks).
        """
        total_tracks = sum(self.track_counts)
        if total_tracks == 0:
            return math.nan
        return float(sum(self.cov_norm_sums) / total_tracks)
