"""Mahalanobis scoring, gating and greedy nearest-neighbour assignment.

Association is gated on the Mahalanobis distance between a detection and a
track's predicted measurement, then resolved one-to-one with a greedy global
nearest neighbour: the lowest-distance surviving pair wins, repeatedly, with
deterministic tie-breaking (lower track id, then lower detection index). A
missed-detection hypothesis competes for each track at a fixed nominal
distance, so tracks whose best option is "no detection" stay unassigned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from trackgym.errors import NumericalError
from trackgym.estimation import UpdateResult

# 99% chi-square gate for a 3-D measurement.
DEFAULT_GATE = math.sqrt(11.345)


@dataclass
class Hypothesis:
    """One candidate pairing; detection_index None marks the missed hypothesis."""

    track_id: int
    detection_index: int | None
    distance: float
    update: UpdateResult | None = None


@dataclass
class Assignment:
    """One-to-one pairing outcome partitioning both input sets."""

    pairs: list[tuple[int, int]]
    unassigned_tracks: set[int]
    unassigned_detections: set[int]


def mahalanobis(innovation: np.ndarray, s: np.ndarray) -> float:
    """sqrt(nu' S^-1 nu) for an SPD innovation covariance."""
    innovation = np.asarray(innovation, dtype=float)
    s = np.asarray(s, dtype=float)
    try:
        chol = np.linalg.cholesky(0.5 * (s + s.T))
    except np.linalg.LinAlgError as exc:
        raise NumericalError("innovation covariance is not positive definite") from exc
    y = np.linalg.solve(chol, innovation)
    return float(np.linalg.norm(y))


def hypothesise(
    track_ids,
    n_detections: int,
    updates: dict[tuple[int, int], UpdateResult],
    missed_distance: float = DEFAULT_GATE,
) -> list[Hypothesis]:
    """All pair hypotheses plus exactly one missed hypothesis per track.

    ``updates`` maps (track_id, detection_index) to the corresponding
    measurement update, whose Mahalanobis distance scores the pair.
    """
    hypotheses = []
    for tid in track_ids:
        for j in range(n_detections):
            update = updates[(tid, j)]
            hypotheses.append(
                Hypothesis(tid, j, update.mahalanobis_distance, update)
            )
        hypotheses.append(Hypothesis(tid, None, missed_distance, None))
    return hypotheses


def gate(hypotheses: list[Hypothesis], gate_threshold: float) -> list[Hypothesis]:
    """Drop pair hypotheses beyond the gate; missed hypotheses always survive."""
    if gate_threshold <= 0.0:
        raise ValueError("gate threshold must be strictly positive")
    return [
        h
        for h in hypotheses
        if h.detection_index is None or h.distance <= gate_threshold
    ]


def nearest_neighbour_assign(hypotheses: list[Hypothesis]) -> Assignment:
    """Greedy global nearest neighbour over the hypothesis list.

    Hypotheses are consumed in (distance, track id, detection index) order;
    a selected missed hypothesis removes its track from contention. Ties
    between a pair and a missed hypothesis go to the pair.
    """
    track_ids = {h.track_id for h in hypotheses}
    detection_ids = {
        h.detection_index for h in hypotheses if h.detection_index is not None
    }

    def order(h: Hypothesis):
        det_key = math.inf if h.detection_index is None else h.detection_index
        return (h.distance, h.track_id, det_key)

    pairs: list[tuple[int, int]] = []
    settled_tracks: set[int] = set()
    taken_detections: set[int] = set()
    for h in sorted(hypotheses, key=order):
        if h.track_id in settled_tracks:
            continue
        if h.detection_index is None:
            settled_tracks.add(h.track_id)
        elif h.detection_index not in taken_detections:
            pairs.append((h.track_id, h.detection_index))
            settled_tracks.add(h.track_id)
            taken_detections.add(h.detection_index)

    paired_tracks = {tid for tid, _ in pairs}
    return Assignment(
        pairs=pairs,
        unassigned_tracks=track_ids - paired_tracks,
        unassigned_detections=detection_ids - taken_detections,
    )
