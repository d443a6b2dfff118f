"""Track lifecycle and the per-step multi-target tracking pipeline.

Pipeline order is fixed: predict -> hypothesise/gate -> assign -> update ->
initiate -> delete. Initiation happens after association so detections that
updated an existing track never spawn duplicates; deletion runs last so a
freshly ballooned track is removed in the same step it crosses the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from trackgym import association
from trackgym.errors import NumericalError, TemporalOrderError
from trackgym.estimation import (
    GaussianEstimate,
    UTParams,
    apply_detection,
    measurement_prediction,
    predict,
    sigma_points_raw,
    unscented_transform,
)
from trackgym.models import NoiseParams, spherical_to_cart


@dataclass
class Track:
    """One identified target estimate with its update history."""

    id: int
    history: list[GaussianEstimate]
    last_detection_time: float | None = None
    status: str = "tentative"  # tentative | confirmed | deleted

    @property
    def estimate(self) -> GaussianEstimate:
        return self.history[-1]

    @property
    def time(self) -> float:
        return self.history[-1].time

    def position_covariance_trace(self) -> float:
        return float(np.trace(self.estimate.covariance[:3, :3]))

    def covariance_trace(self) -> float:
        return float(np.trace(self.estimate.covariance))


@dataclass
class TrackList:
    """Live tracks plus the id counter; ids are never reused in an episode."""

    tracks: list[Track] = field(default_factory=list)
    next_id: int = 0

    def __iter__(self):
        return iter(self.tracks)

    def __len__(self) -> int:
        return len(self.tracks)


@dataclass
class TrackerParams:
    """Everything the per-step pipeline needs, bundled."""

    noise: NoiseParams
    gate_threshold: float = association.DEFAULT_GATE
    missed_distance: float | None = None
    deleter_threshold: float = 5000.0
    deleter_full_trace: bool = False
    initial_velocity_sigma: float = 14.0
    ut: UTParams = field(default_factory=UTParams)
    sensor_position: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def resolved_missed_distance(self) -> float:
        return (
            self.missed_distance
            if self.missed_distance is not None
            else self.gate_threshold
        )


def initiate(
    detections,
    noise: NoiseParams,
    time: float,
    initial_velocity_sigma: float = 14.0,
    ut: UTParams = UTParams(),
    sensor_position=None,
    start_id: int = 0,
) -> list[Track]:
    """One new tentative track per detection.

    The position estimate is the detection mapped back to Cartesian space,
    with its covariance obtained by unscented transform of the measurement
    noise through that mapping. Velocity starts at zero with a per-axis
    standard deviation wide enough to keep the next detection inside the gate.
    """
    sensor = (
        np.zeros(3) if sensor_position is None else np.asarray(sensor_position, float)
    )
    r_cov = noise.measurement_covariance()

    tracks = []
    for offset, detection in enumerate(detections):
        z = np.asarray(detection.measurement, dtype=float)
        point_set = sigma_points_raw(z, r_cov, ut)
        pos_mean, pos_cov, _ = unscented_transform(
            point_set,
            lambda m: sensor + spherical_to_cart((m[2], m[0], m[1])),
        )
        mean = np.concatenate([pos_mean, np.zeros(3)])
        cov = np.zeros((6, 6))
        cov[:3, :3] = 0.5 * (pos_cov + pos_cov.T)
        cov[3:, 3:] = initial_velocity_sigma**2 * np.eye(3)
        tracks.append(
            Track(
                id=start_id + offset,
                history=[GaussianEstimate(mean, cov, time)],
            )
        )
    return tracks


def delete_tracks(
    track_list: TrackList, threshold: float, full_trace: bool = False
) -> TrackList:
    """Remove tracks whose covariance trace exceeds the threshold.

    The statistic is the trace of the 3x3 position block (m^2) unless
    ``full_trace`` selects the whole 6x6 trace.
    """
    if threshold <= 0.0:
        raise ValueError("deleter threshold must be strictly positive")
    survivors = []
    for track in track_list.tracks:
        stat = (
            track.covariance_trace() if full_trace else track.position_covariance_trace()
        )
        if stat > threshold:
            track.status = "deleted"
        else:
            survivors.append(track)
    track_list.tracks = survivors
    return track_list


def mtt_step(
    track_list: TrackList,
    detections,
    time: float,
    params: TrackerParams,
) -> TrackList:
    """Advance the tracker one step against the detections at ``time``.

    Mutates and returns ``track_list``. Deterministic for identical inputs.
    """
    for track in track_list.tracks:
        if track.time > time + 1e-9:
            raise TemporalOrderError(
                f"track {track.id} is ahead of the requested step time"
            )

    # Predict every live track to the common step time.
    predictions: dict[int, GaussianEstimate] = {}
    for track in track_list.tracks:
        try:
            predictions[track.id] = predict(track.estimate, time, params.noise)
        except NumericalError as exc:
            raise NumericalError(f"predict failed for track {track.id}: {exc}") from exc

    detections = list(detections)
    if detections and track_list.tracks:
        updates = {}
        for track in track_list.tracks:
            predicted = predictions[track.id]
            try:
                meas_pred = measurement_prediction(
                    predicted, params.sensor_position, params.noise, params.ut
                )
                for j, detection in enumerate(detections):
                    updates[(track.id, j)] = apply_detection(
                        predicted, meas_pred, detection.measurement
                    )
            except NumericalError as exc:
                raise NumericalError(
                    f"update failed for track {track.id}: {exc}"
                ) from exc
        hypotheses = association.hypothesise(
            [t.id for t in track_list.tracks],
            len(detections),
            updates,
            params.resolved_missed_distance(),
        )
        hypotheses = association.gate(hypotheses, params.gate_threshold)
        assignment = association.nearest_neighbour_assign(hypotheses)
    else:
        updates = {}
        assignment = association.Assignment(
            pairs=[],
            unassigned_tracks={t.id for t in track_list.tracks},
            unassigned_detections=set(range(len(detections))),
        )

    assigned = dict(assignment.pairs)
    for track in track_list.tracks:
        if track.id in assigned:
            track.history.append(updates[(track.id, assigned[track.id])].posterior)
            track.last_detection_time = time
            track.status = "confirmed"
        else:
            track.history.append(predictions[track.id])

    # Gating can drop a detection from every hypothesis, so derive the
    # initiation set from the full detection list, not the assignment's view.
    taken = set(assigned.values())
    unassigned = [d for j, d in enumerate(detections) if j not in taken]
    new_tracks = initiate(
        unassigned,
        params.noise,
        time,
        params.initial_velocity_sigma,
        params.ut,
        params.sensor_position,
        start_id=track_list.next_id,
    )
    track_list.tracks.extend(new_tracks)
    track_list.next_id += len(new_tracks)

    return delete_tracks(track_list, params.deleter_threshold, params.deleter_full_trace)
