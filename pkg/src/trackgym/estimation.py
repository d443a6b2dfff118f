"""Gaussian state prediction and the unscented measurement update.

The prediction step is an exact linear Kalman prediction over the
constant-velocity model. The measurement update runs an unscented transform
through the nonlinear spherical measurement; a generic transform is provided
for arbitrary measurement functions (used by tests and track initiation),
while the spherical fast path goes through the selected kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from trackgym import backend
from trackgym._kernels_py import chol_psd as _chol_psd_py
from trackgym.errors import TemporalOrderError
from trackgym.models import NoiseParams, wrap_angle

_TIME_EPS = 1e-9


@dataclass
class GaussianEstimate:
    """Mean/covariance pair with a timestamp; the currency of the tracker."""

    mean: np.ndarray
    covariance: np.ndarray
    time: float

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.covariance = np.asarray(self.covariance, dtype=float)
        if self.mean.shape != (6,) or self.covariance.shape != (6, 6):
            raise ValueError("estimate must be 6-D with a 6x6 covariance")

    @property
    def position(self) -> np.ndarray:
        return self.mean[:3]

    @property
    def velocity(self) -> np.ndarray:
        return self.mean[3:]

    def covariance_norm(self) -> float:
        """Frobenius norm of the covariance."""
        return float(np.linalg.norm(self.covariance))


@dataclass(frozen=True)
class UTParams:
    """Scaled unscented-transform parameters; kappa None means 3 - n."""

    alpha: float = 0.5
    beta: float = 2.0
    kappa: float | None = None

    def resolve_kappa(self, n: int) -> float:
        return float(self.kappa) if self.kappa is not None else 3.0 - n


@dataclass
class SigmaPointSet:
    """2n+1 sigma points with their mean and covariance weights."""

    points: np.ndarray
    mean_weights: np.ndarray
    covariance_weights: np.ndarray


@dataclass
class MeasurementPrediction:
    """UT-propagated measurement statistics for one predicted track state."""

    predicted_measurement: np.ndarray
    innovation_covariance: np.ndarray
    cross_covariance: np.ndarray


@dataclass
class UpdateResult:
    """Posterior estimate plus the innovation statistics used for association."""

    posterior: GaussianEstimate
    innovation: np.ndarray
    innovation_covariance: np.ndarray
    mahalanobis_distance: float


def predict(
    prior: GaussianEstimate, to_time: float, noise: NoiseParams
) -> GaussianEstimate:
    """Propagate an estimate forward under the CV model with noise intensity q."""
    dt = to_time - prior.time
    if dt < -_TIME_EPS:
        raise TemporalOrderError(
            f"cannot predict backwards from t={prior.time} to t={to_time}"
        )
    if dt <= _TIME_EPS:
        return GaussianEstimate(
            prior.mean.copy(), 0.5 * (prior.covariance + prior.covariance.T), to_time
        )
    mean, cov = backend.predict_cv(
        prior.mean, prior.covariance, dt, noise.process_intensity
    )
    return GaussianEstimate(mean, cov, to_time)


def _sigma_weights(n: int, alpha: float, beta: float, kappa: float):
    lam = alpha * alpha * (n + kappa) - n
    scale = n + lam
    if scale <= 0.0:
        raise ValueError("unscented-transform scaling n + lambda must be positive")
    wm = np.full(2 * n + 1, 1.0 / (2.0 * scale))
    wm[0] = lam / scale
    wc = wm.copy()
    wc[0] += 1.0 - alpha * alpha + beta
    return np.sqrt(scale), wm, wc


def sigma_points_raw(
    mean: np.ndarray, covariance: np.ndarray, params: UTParams = UTParams()
) -> SigmaPointSet:
    """Scaled sigma points for an arbitrary-dimension Gaussian."""
    mean = np.asarray(mean, dtype=float)
    n = mean.size
    spread, wm, wc = _sigma_weights(
        n, params.alpha, params.beta, params.resolve_kappa(n)
    )
    chol = _chol_psd_py(np.asarray(covariance, dtype=float))
    points = np.empty((2 * n + 1, n))
    points[0] = mean
    for i in range(n):
        offset = spread * chol[:, i]
        points[1 + i] = mean + offset
        points[1 + n + i] = mean - offset
    return SigmaPointSet(points, wm, wc)


def sigma_points(
    estimate: GaussianEstimate,
    alpha: float = 0.5,
    beta: float = 2.0,
    kappa: float | None = None,
) -> SigmaPointSet:
    """Sigma points of a 6-D estimate (13 points)."""
    return sigma_points_raw(
        estimate.mean, estimate.covariance, UTParams(alpha, beta, kappa)
    )


def unscented_transform(
    point_set: SigmaPointSet,
    fn,
    angle_components: tuple[int, ...] = (),
):
    """Push sigma points through fn; returns (mean, covariance, residuals).

    Angle components are averaged as wrapped increments relative to the
    central point so the transform stays valid near the +-pi seam.
    """
    outputs = np.array([np.asarray(fn(p), dtype=float) for p in point_set.points])
    deltas = outputs - outputs[0]
    for idx in angle_components:
        deltas[:, idx] = wrap_angle(deltas[:, idx])
    mean_delta = point_set.mean_weights @ deltas
    mean = outputs[0] + mean_delta
    for idx in angle_components:
        mean[idx] = wrap_angle(mean[idx])
    resid = deltas - mean_delta
    cov = resid.T @ (point_set.covariance_weights[:, None] * resid)
    return mean, cov, resid


def unscented_update(
    predicted: GaussianEstimate,
    z: np.ndarray,
    fn,
    measurement_covariance: np.ndarray,
    angle_components: tuple[int, ...] = (),
    params: UTParams = UTParams(),
) -> UpdateResult:
    """Generic unscented update through an arbitrary measurement function.

    The spherical fast path in :func:`ukf_update` is preferred in the tracker
    loop; this generic form exists for alternative measurement models.
    """
    point_set = sigma_points_raw(predicted.mean, predicted.covariance, params)
    zhat, spread_cov, resid = unscented_transform(point_set, fn, angle_components)
    s = spread_cov + np.asarray(measurement_covariance, dtype=float)
    s = 0.5 * (s + s.T)
    cross = (point_set.points - predicted.mean).T @ (
        point_set.covariance_weights[:, None] * resid
    )

    innovation = np.asarray(z, dtype=float) - zhat
    for idx in angle_components:
        innovation[idx] = wrap_angle(innovation[idx])
    sinv = np.linalg.inv(s)
    distance = float(np.sqrt(innovation @ sinv @ innovation))
    gain = cross @ sinv
    post_mean = predicted.mean + gain @ innovation
    ksk = gain @ cross.T
    post_cov = predicted.covariance - 0.5 * (ksk + ksk.T)
    posterior = GaussianEstimate(post_mean, post_cov, predicted.time)
    return UpdateResult(posterior, innovation, s, distance)


def measurement_prediction(
    predicted: GaussianEstimate,
    sensor_position: np.ndarray,
    noise: NoiseParams,
    params: UTParams = UTParams(),
) -> MeasurementPrediction:
    """UT measurement statistics for one track, reusable across detections."""
    zhat, s, cross = backend.ut_spherical(
        predicted.mean,
        predicted.covariance,
        np.asarray(sensor_position, dtype=float),
        noise.measurement_variances(),
        params.alpha,
        params.beta,
        params.resolve_kappa(6),
    )
    return MeasurementPrediction(zhat, s, cross)


def apply_detection(
    predicted: GaussianEstimate,
    prediction: MeasurementPrediction,
    z: np.ndarray,
) -> UpdateResult:
    """Complete the update of a predicted state against one measurement."""
    post_mean, post_cov, innovation, distance = backend.combine_update(
        predicted.mean,
        predicted.covariance,
        prediction.predicted_measurement,
        prediction.innovation_covariance,
        prediction.cross_covariance,
        np.asarray(z, dtype=float),
    )
    posterior = GaussianEstimate(post_mean, post_cov, predicted.time)
    return UpdateResult(
        posterior, innovation, prediction.innovation_covariance, distance
    )


def ukf_update(
    predicted: GaussianEstimate,
    detection,
    sensor_position,
    noise: NoiseParams,
    params: UTParams = UTParams(),
) -> UpdateResult:
    """Unscented update of a predicted estimate with one spherical detection."""
    if abs(detection.time - predicted.time) > _TIME_EPS:
        raise TemporalOrderError(
            f"detection time {detection.time} does not match prediction time "
            f"{predicted.time}"
        )
    pred = measurement_prediction(predicted, sensor_position, noise, params)
    return apply_detection(predicted, pred, detection.measurement)
