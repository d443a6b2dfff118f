"""Pure-numpy implementations of the tracker hot kernels.

Same contract as the compiled ``trackgym._native`` extension; selected by
``trackgym.backend`` when the extension is missing or disabled. Keep the
algebra in the same order as the extension so the two stay numerically close.
"""

from __future__ import annotations

import numpy as np

from trackgym.errors import NumericalError
from trackgym.models import wrap_angle

BACKEND = "python"


def _symmetrise(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def chol_psd(matrix: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, with one jittered retry for near-PSD inputs."""
    sym = _symmetrise(np.asarray(matrix, dtype=float))
    try:
        return np.linalg.cholesky(sym)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-9 * float(np.trace(sym))
    if jitter <= 0.0:
        raise NumericalError("covariance is not positive semi-definite (trace <= 0)")
    try:
        return np.linalg.cholesky(sym + jitter * np.eye(sym.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"Cholesky failed after jitter retry (trace={np.trace(sym):.3e})"
        ) from exc


def predict_cv(mean, cov, dt, q):
    """Constant-velocity mean/covariance propagation: F x, F P F' + Q."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    out_mean = mean.copy()
    out_mean[:3] += dt * mean[3:]

    # F P F' with F = [[I, dt I], [0, I]], expanded blockwise.
    tmp = cov.copy()
    tmp[:3, :] += dt * cov[3:, :]
    out_cov = tmp.copy()
    out_cov[:, :3] += dt * tmp[:, 3:]

    qd1 = q * dt
    qd2 = q * dt * dt / 2.0
    qd3 = q * dt * dt * dt / 3.0
    for axis in range(3):
        out_cov[axis, axis] += qd3
        out_cov[axis, axis + 3] += qd2
        out_cov[axis + 3, axis] += qd2
        out_cov[axis + 3, axis + 3] += qd1
    return out_mean, _symmetrise(out_cov)


def _measure_point(point, sensor):
    rel = point[:3] - sensor
    horiz = np.hypot(rel[0], rel[1])
    rng = np.sqrt(horiz * horiz + rel[2] * rel[2])
    if rng == 0.0:
        raise ValueError("sigma point coincides with the sensor position")
    azimuth = 0.0 if horiz == 0.0 else np.arctan2(rel[1], rel[0])
    elevation = np.arctan2(rel[2], horiz)
    return np.array([azimuth, elevation, rng])


def ut_spherical(mean, cov, sensor_position, noise_variances, alpha, beta, kappa):
    """Unscented transform of a 6-D Gaussian through the spherical measurement.

    Returns (predicted measurement, innovation covariance S including the
    diagonal measurement noise, state-measurement cross covariance).
    Azimuth/elevation are averaged as wrapped increments relative to the
    central sigma point, so estimates near +-pi stay consistent.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    sensor = np.asarray(sensor_position, dtype=float)

    n = 6
    lam = alpha * alpha * (n + kappa) - n
    scale = n + lam
    if scale <= 0.0:
        raise ValueError("unscented-transform scaling n + lambda must be positive")
    spread = np.sqrt(scale)

    chol = chol_psd(cov)
    points = np.empty((2 * n + 1, n))
    points[0] = mean
    for i in range(n):
        offset = spread * chol[:, i]
        points[1 + i] = mean + offset
        points[1 + n + i] = mean - offset

    wm = np.full(2 * n + 1, 1.0 / (2.0 * scale))
    wm[0] = lam / scale
    wc = wm.copy()
    wc[0] += 1.0 - alpha * alpha + beta

    meas = np.empty((2 * n + 1, 3))
    for i in range(2 * n + 1):
        meas[i] = _measure_point(points[i], sensor)

    # Increments relative to the central point; angles wrapped.
    deltas = meas - meas[0]
    deltas[:, 0] = wrap_angle(deltas[:, 0])
    deltas[:, 1] = wrap_angle(deltas[:, 1])

    mean_delta = wm @ deltas
    zhat = meas[0] + mean_delta
    zhat[0] = wrap_angle(zhat[0])
    zhat[1] = wrap_angle(zhat[1])

    resid = deltas - mean_delta
    s = resid.T @ (wc[:, None] * resid)
    s[np.diag_indices(3)] += np.asarray(noise_variances, dtype=float)
    s = _symmetrise(s)

    cross = (points - mean).T @ (wc[:, None] * resid)
    return zhat, s, cross


def _chol3_solve(s, rhs):
    """Solve s @ x = rhs for SPD 3x3 s; raises NumericalError if not SPD."""
    try:
        chol = np.linalg.cholesky(s)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("innovation covariance is not positive definite") from exc
    y = np.linalg.solve(chol, rhs)
    return np.linalg.solve(chol.T, y), chol


def combine_update(mean, cov, zhat, s, cross, z):
    """Measurement update given a UT measurement prediction.

    Returns (posterior mean, posterior covariance, wrapped innovation,
    Mahalanobis distance).
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)

    innovation = np.asarray(z, dtype=float) - zhat
    innovation[0] = wrap_angle(innovation[0])
    innovation[1] = wrap_angle(innovation[1])

    sinv_nu, chol = _chol3_solve(s, innovation)
    distance = float(np.sqrt(innovation @ sinv_nu))

    gain = np.linalg.solve(chol.T, np.linalg.solve(chol, cross.T)).T
    post_mean = mean + gain @ innovation
    # K S K' collapses to cross S^-1 cross' = gain cross'.
    ksk = gain @ cross.T
    post_cov = cov - 0.5 * (ksk + ksk.T)
    return post_mean, post_cov, innovation, distance
