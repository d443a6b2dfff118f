"""Search-and-track radar sensor management simulator.

A component-based multi-target tracker (Kalman prediction, unscented
measurement updates, Mahalanobis gating, greedy nearest-neighbour
association, covariance-based deletion) embedded in a steerable-sensor
episode environment, with GOSPA/covariance/track-count metrics, baseline
pointing policies and a batch experiment CLI.
"""

__version__ = "0.1.0"

from trackgym.association import Assignment, Hypothesis, mahalanobis
from trackgym.backend import BACKEND
from trackgym.config import RunConfig, load_config
from trackgym.environment import (
    Observation,
    ScanValueMap,
    SearchTrackEnv,
    StepOutcome,
    action_space_size,
    action_to_pointing,
    decode_flat_action,
    encode_flat_action,
)
from trackgym.estimation import GaussianEstimate, UpdateResult, UTParams, predict, ukf_update
from trackgym.metrics import GospaResult, covariance_norm_sum, gospa, track_to_truth_ratio
from trackgym.models import (
    KinematicState,
    NoiseParams,
    SphericalCoords,
    cart_to_spherical,
    cv_transition,
    measure,
    spherical_to_cart,
)
from trackgym.policies import PolicyState, make_policy, next_action
from trackgym.scenario import Detection, GroundTruthPath, RadarSensor, Region
from trackgym.tracker import Track, TrackerParams, TrackList, delete_tracks, initiate, mtt_step

__all__ = [
    "BACKEND",
    "Assignment",
    "Detection",
    "GaussianEstimate",
    "GospaResult",
    "GroundTruthPath",
    "Hypothesis",
    "KinematicState",
    "NoiseParams",
    "Observation",
    "PolicyState",
    "RadarSensor",
    "Region",
    "RunConfig",
    "ScanValueMap",
    "SearchTrackEnv",
    "SphericalCoords",
    "StepOutcome",
    "Track",
    "TrackList",
    "TrackerParams",
    "UTParams",
    "UpdateResult",
    "action_space_size",
    "action_to_pointing",
    "cart_to_spherical",
    "covariance_norm_sum",
    "cv_transition",
    "decode_flat_action",
    "delete_tracks",
    "encode_flat_action",
    "gospa",
    "initiate",
    "load_config",
    "mahalanobis",
    "make_policy",
    "measure",
    "mtt_step",
    "next_action",
    "predict",
    "spherical_to_cart",
    "track_to_truth_ratio",
    "ukf_update",
]
